#pragma once

// Centralized critic over the pooled graph state, the shared collaboration
// memory (best improvement per selected set, pairwise synergy matrix) and
// target blending.

#include <cstdint>
#include <filesystem>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/mlp.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

/// lambda_a * (r + gamma * max_next_q) + lambda_b * v.
double blend_target(double reward, double max_next_q, double value, double gamma = 0.85,
                    double lambda_a = 0.7, double lambda_b = 0.3) noexcept;

/// Linear ramp from `start` to `end` over `steps` steps, then flat.
double linear_schedule(std::uint64_t step, std::uint64_t steps, double start, double end) noexcept;

/// Synergy-bias weight: 0.08 -> 0.3 over the exploration steps.
double eta_schedule(std::uint64_t step, std::uint64_t steps) noexcept;

/// Value network: compression (linear), sigmoid gate, residual, 2-layer head.
///   c = Wc x + bc; g = sigmoid(Wg c + bg); h = c + g * c;
///   v = wo . relu(Wh h + bh) + bo
class Critic {
 public:
  struct Params {
    Matrix wc;
    Vector bc;
    Matrix wg;
    Vector bg;
    Matrix wh;
    Vector bh;
    Vector wo;
    double bo = 0.0;
  };

  struct Cache {
    Vector input;
    Vector compressed;
    Vector gate;
    Vector combined;
    Vector head_pre;
    Vector head;
  };

  Critic() = default;
  Critic(std::size_t input_dim, std::size_t compressed_dim, std::size_t head_dim, Rng& rng);
  static Critic zeros(std::size_t input_dim, std::size_t compressed_dim = 64, std::size_t head_dim = 32);

  double value(const Vector& x) const;
  double forward(const Vector& x, Cache& cache) const;

  /// Gradient of the scalar output times `d_value`; fills d_input as well.
  Params backward(const Cache& cache, double d_value, Vector& d_input) const;

  /// One Adam step on (v - target)^2. Returns the pre-step loss and writes
  /// d loss / d input into `d_input` when non-null.
  double update(const Vector& x, double target, double lr, Vector* d_input = nullptr);

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  static std::vector<double> flatten(const Params& p);

  Params& params() { return p_; }
  const Params& params() const { return p_; }
  std::size_t input_size() const { return static_cast<std::size_t>(p_.wc.cols()); }

 private:
  Params p_;
  AdamState adam_;
};

/// Collaboration record H (set fingerprint -> best improvement) and the
/// symmetric synergy matrix M.
class SharedMemory {
 public:
  SharedMemory() = default;
  explicit SharedMemory(std::size_t n_genes, double decay = 0.99);

  /// Order-independent fingerprint of a set of gene indices.
  static std::uint64_t fingerprint(std::span<const std::size_t> genes);

  /// H(S) = max(H(S), dp); M[i,j] += dp for pairs in S when dp > 0.
  void record(std::span<const std::size_t> selected, double improvement);
  void decay();

  std::optional<double> history(std::span<const std::size_t> selected) const;
  std::size_t history_size() const { return history_.size(); }
  const Matrix& synergy() const { return synergy_; }
  std::size_t size() const { return static_cast<std::size_t>(synergy_.rows()); }
  double decay_factor() const { return decay_; }

  /// eta * sum of the k largest off-diagonal entries of row i.
  double synergy_bias(std::size_t i, std::size_t k, double eta) const;
  Vector synergy_biases(std::size_t k, double eta) const;

  bool symmetric() const;

  /// Largest upper-triangle entries: (i, j, M_ij), descending, ties by (i, j).
  std::vector<std::tuple<std::size_t, std::size_t, double>> top_pairs(std::size_t n) const;

 private:
  double decay_ = 0.99;
  Matrix synergy_;
  std::unordered_map<std::uint64_t, double> history_;
};

void write_synergy_tsv(const SharedMemory& memory, const std::vector<std::string>& genes,
                       std::size_t n_pairs, const std::filesystem::path& path);

}  // namespace pathmarl
