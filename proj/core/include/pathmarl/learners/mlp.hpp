#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

enum class LossKind { kHuber, kMse };
enum class OptimizerKind { kSgd, kAdam };

/// Huber threshold used throughout.
inline constexpr double kHuberDelta = 1.0;

double huber(double error) noexcept;
double huber_grad(double error) noexcept;

/// Fully connected network: Linear -> [LayerNorm] -> ReLU on hidden layers,
/// linear output. Inputs are laid out one sample per column.
class Mlp {
 public:
  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    std::vector<Vector> gains;
    std::vector<Vector> shifts;
    /// d loss / d input, same shape as the input batch.
    Matrix input;
  };

  /// Per-layer activations kept for the backward pass.
  struct Cache {
    std::vector<Matrix> activations;  // a_0 = input, a_L = output
    std::vector<Matrix> normalized;   // x-hat per hidden layer (LayerNorm only)
    std::vector<Vector> inv_std;      // one entry per sample per hidden layer
    std::vector<Matrix> pre_relu;
  };

  Mlp() = default;

  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gains 1, shifts 0.
  Mlp(std::vector<std::size_t> layer_sizes, bool layer_norm, Rng& rng);

  /// All weights and biases zero (gains 1).
  static Mlp zeros(std::vector<std::size_t> layer_sizes, bool layer_norm = false);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  bool layer_norm() const noexcept { return layer_norm_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const;

  Matrix forward(const Matrix& x) const;
  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;

  /// Backpropagates d loss / d output through the cached forward pass.
  Gradients backward(const Cache& cache, const Matrix& d_output) const;

  /// Loss = (1/B) * sum_b w_b * sum_o m_ob * l(y_ob - t_ob), with l = e^2 (MSE)
  /// or the Huber function. `mask` (outputs x batch) and `weights` are optional.
  double loss_and_gradients(const Matrix& x, const Matrix& targets, LossKind loss,
                            Gradients& grads, const Matrix* mask = nullptr,
                            std::span<const double> weights = {}) const;
  double loss(const Matrix& x, const Matrix& targets, LossKind loss, const Matrix* mask = nullptr,
              std::span<const double> weights = {}) const;

  void apply_gradients(const Gradients& grads, double lr, OptimizerKind optimizer);

  /// One optimizer step; returns the loss before the step.
  double train_step(const Matrix& x, const Matrix& targets, LossKind loss, double lr,
                    OptimizerKind optimizer = OptimizerKind::kSgd, const Matrix* mask = nullptr,
                    std::span<const double> weights = {});

  /// Flat parameter view in a fixed order (W, b, gain, shift per layer).
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  static std::vector<double> flatten(const Gradients& grads, bool layer_norm);

  /// Copies weights only; optimizer state is left untouched.
  void copy_parameters_from(const Mlp& other);
  bool same_parameters(const Mlp& other) const;

  Matrix& weight(std::size_t layer) { return weights_.at(layer); }
  Vector& bias(std::size_t layer) { return biases_.at(layer); }
  const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
  const Vector& bias(std::size_t layer) const { return biases_.at(layer); }

 private:
  std::size_t n_layers() const { return weights_.size(); }

  std::vector<std::size_t> sizes_;
  bool layer_norm_ = false;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::vector<Vector> gains_;
  std::vector<Vector> shifts_;

  // Adam moments, lazily sized on first Adam step.
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
  std::uint64_t adam_t_ = 0;
};

/// Adam over a flat parameter block; shared by the critic and GNN weights.
class AdamState {
 public:
  explicit AdamState(std::size_t n = 0) : m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grads, double lr);
  void resize(std::size_t n);

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

}  // namespace pathmarl
