#include "pathmarl/learners/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "pathmarl/errors.hpp"

namespace pathmarl {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
                 std::uint64_t t) {
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  const auto len = static_cast<Eigen::Index>(n);
  Eigen::Map<Eigen::ArrayXd> p(param, len), mm(m, len), vv(v, len);
  Eigen::Map<const Eigen::ArrayXd> g(grad, len);
  mm = kAdamBeta1 * mm + (1.0 - kAdamBeta1) * g;
  vv = kAdamBeta2 * vv + (1.0 - kAdamBeta2) * g.square();
  p -= lr * (mm / c1) / ((vv / c2).sqrt() + kAdamEps);
}

}  // namespace

double huber(double error) noexcept {
  const double a = std::abs(error);
  return a <= kHuberDelta ? 0.5 * error * error : kHuberDelta * (a - 0.5 * kHuberDelta);
}

double huber_grad(double error) noexcept {
  return std::clamp(error, -kHuberDelta, kHuberDelta);
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, bool layer_norm, Rng& rng)
    : sizes_(std::move(layer_sizes)), layer_norm_(layer_norm) {
  if (sizes_.size() < 2) throw ValidationError("mlp: need at least input and output sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l]);
    const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index c = 0; c < in; ++c)
      for (Eigen::Index r = 0; r < out; ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    Vector b(out);
    for (Eigen::Index r = 0; r < out; ++r) b(r) = (2.0 * uniform01(rng) - 1.0) * bound;
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
    gains_.push_back(Vector::Ones(out));
    shifts_.push_back(Vector::Zero(out));
  }
}

Mlp Mlp::zeros(std::vector<std::size_t> layer_sizes, bool layer_norm) {
  Rng rng(0);
  Mlp m(std::move(layer_sizes), layer_norm, rng);
  for (auto& w : m.weights_) w.setZero();
  for (auto& b : m.biases_) b.setZero();
  return m;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    if (layer_norm_ && l + 1 < n_layers()) n += 2 * static_cast<std::size_t>(gains_[l].size());
  }
  return n;
}

Matrix Mlp::forward(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_size())
    throw ValidationError("mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(input_size()));
  Matrix a = x;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    Matrix z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 == n_layers()) return z;
    if (layer_norm_) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        col = ((col.array() - mean) * inv * gains_[l].array() + shifts_[l].array()).matrix();
      }
    }
    a = z.cwiseMax(0.0);
  }
  return a;
}

Vector Mlp::forward(const Vector& x) const {
  Matrix m = x;
  return forward(m).col(0);
}

Matrix Mlp::forward(const Matrix& x, Cache& cache) const {
  if (static_cast<std::size_t>(x.rows()) != input_size())
    throw ValidationError("mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(input_size()));
  const std::size_t L = n_layers();
  cache.activations.assign(L + 1, Matrix());
  cache.normalized.assign(L, Matrix());
  cache.inv_std.assign(L, Vector());
  cache.pre_relu.assign(L, Matrix());
  cache.activations[0] = x;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = weights_[l] * cache.activations[l];
    z.colwise() += biases_[l];
    if (l + 1 == L) {
      cache.activations[L] = std::move(z);
      break;
    }
    if (layer_norm_) {
      Matrix xhat(z.rows(), z.cols());
      Vector inv(z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mean = z.col(c).mean();
        const double var = (z.col(c).array() - mean).square().mean();
        inv(c) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.col(c) = (z.col(c).array() - mean) * inv(c);
      }
      z = (xhat.array().colwise() * gains_[l].array()).colwise() + shifts_[l].array();
      cache.normalized[l] = std::move(xhat);
      cache.inv_std[l] = std::move(inv);
    }
    cache.activations[l + 1] = z.cwiseMax(0.0);
    cache.pre_relu[l] = std::move(z);
  }
  return cache.activations[L];
}

Mlp::Gradients Mlp::backward(const Cache& cache, const Matrix& d_output) const {
  const std::size_t L = n_layers();
  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  g.gains.resize(L);
  g.shifts.resize(L);
  Matrix delta = d_output;
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t l = L - 1 - step;
    if (l + 1 < L) {
      delta = delta.cwiseProduct((cache.pre_relu[l].array() > 0.0).cast<double>().matrix());
      if (layer_norm_) {
        const Matrix& xhat = cache.normalized[l];
        g.gains[l] = delta.cwiseProduct(xhat).rowwise().sum();
        g.shifts[l] = delta.rowwise().sum();
        const Matrix dxhat = delta.array().colwise() * gains_[l].array();
        const double n = static_cast<double>(dxhat.rows());
        Matrix dz(dxhat.rows(), dxhat.cols());
        for (Eigen::Index c = 0; c < dxhat.cols(); ++c) {
          const double sum = dxhat.col(c).sum();
          const double dot = dxhat.col(c).dot(xhat.col(c));
          dz.col(c) = (cache.inv_std[l](c) / n) *
                      (n * dxhat.col(c).array() - sum - xhat.col(c).array() * dot);
        }
        delta = std::move(dz);
      }
    }
    g.weights[l] = delta * cache.activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    delta = weights_[l].transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

double Mlp::loss_and_gradients(const Matrix& x, const Matrix& targets, LossKind loss,
                               Gradients& grads, const Matrix* mask,
                               std::span<const double> weights) const {
  Cache cache;
  const Matrix out = forward(x, cache);
  if (targets.rows() != out.rows() || targets.cols() != out.cols())
    throw ValidationError("mlp: target shape does not match output");
  if (mask && (mask->rows() != out.rows() || mask->cols() != out.cols()))
    throw ValidationError("mlp: mask shape does not match output");
  if (!weights.empty() && weights.size() != static_cast<std::size_t>(out.cols()))
    throw ValidationError("mlp: sample weight count does not match batch");

  const double inv_batch = 1.0 / static_cast<double>(out.cols());
  Matrix d_out(out.rows(), out.cols());
  double total = 0.0;
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(b)];
    for (Eigen::Index o = 0; o < out.rows(); ++o) {
      const double m = mask ? (*mask)(o, b) : 1.0;
      const double e = out(o, b) - targets(o, b);
      if (loss == LossKind::kMse) {
        total += w * m * e * e;
        d_out(o, b) = inv_batch * w * m * 2.0 * e;
      } else {
        total += w * m * huber(e);
        d_out(o, b) = inv_batch * w * m * huber_grad(e);
      }
    }
  }
  grads = backward(cache, d_out);
  return total * inv_batch;
}

double Mlp::loss(const Matrix& x, const Matrix& targets, LossKind loss, const Matrix* mask,
                 std::span<const double> weights) const {
  const Matrix out = forward(x);
  double total = 0.0;
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(b)];
    for (Eigen::Index o = 0; o < out.rows(); ++o) {
      const double m = mask ? (*mask)(o, b) : 1.0;
      const double e = out(o, b) - targets(o, b);
      total += w * m * (loss == LossKind::kMse ? e * e : huber(e));
    }
  }
  return total / static_cast<double>(out.cols());
}

void Mlp::apply_gradients(const Gradients& grads, double lr, OptimizerKind optimizer) {
  const std::size_t L = n_layers();
  if (optimizer == OptimizerKind::kSgd) {
    for (std::size_t l = 0; l < L; ++l) {
      weights_[l] -= lr * grads.weights[l];
      biases_[l] -= lr * grads.biases[l];
      if (layer_norm_ && l + 1 < L) {
        gains_[l] -= lr * grads.gains[l];
        shifts_[l] -= lr * grads.shifts[l];
      }
    }
    return;
  }
  const std::size_t n = parameter_count();
  if (adam_m_.size() != n) {
    adam_m_.assign(n, 0.0);
    adam_v_.assign(n, 0.0);
    adam_t_ = 0;
  }
  ++adam_t_;
  std::size_t offset = 0;
  auto update = [&](double* p, const double* g, Eigen::Index count) {
    const auto c = static_cast<std::size_t>(count);
    adam_update(p, g, adam_m_.data() + offset, adam_v_.data() + offset, c, lr, adam_t_);
    offset += c;
  };
  for (std::size_t l = 0; l < L; ++l) {
    update(weights_[l].data(), grads.weights[l].data(), weights_[l].size());
    update(biases_[l].data(), grads.biases[l].data(), biases_[l].size());
    if (layer_norm_ && l + 1 < L) {
      update(gains_[l].data(), grads.gains[l].data(), gains_[l].size());
      update(shifts_[l].data(), grads.shifts[l].data(), shifts_[l].size());
    }
  }
}

double Mlp::train_step(const Matrix& x, const Matrix& targets, LossKind loss, double lr,
                       OptimizerKind optimizer, const Matrix* mask,
                       std::span<const double> weights) {
  Gradients g;
  const double value = loss_and_gradients(x, targets, loss, g, mask, weights);
  if (!std::isfinite(value)) throw NumericalError("learners.mlp", "training loss is not finite");
  apply_gradients(g, lr, optimizer);
  return value;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  auto push = [&](const double* p, Eigen::Index n) { flat.insert(flat.end(), p, p + n); };
  for (std::size_t l = 0; l < n_layers(); ++l) {
    push(weights_[l].data(), weights_[l].size());
    push(biases_[l].data(), biases_[l].size());
    if (layer_norm_ && l + 1 < n_layers()) {
      push(gains_[l].data(), gains_[l].size());
      push(shifts_[l].data(), shifts_[l].size());
    }
  }
  return flat;
}

void Mlp::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ValidationError("mlp: parameter count mismatch");
  std::size_t offset = 0;
  auto pull = [&](double* p, Eigen::Index n) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(n)), p);
    offset += static_cast<std::size_t>(n);
  };
  for (std::size_t l = 0; l < n_layers(); ++l) {
    pull(weights_[l].data(), weights_[l].size());
    pull(biases_[l].data(), biases_[l].size());
    if (layer_norm_ && l + 1 < n_layers()) {
      pull(gains_[l].data(), gains_[l].size());
      pull(shifts_[l].data(), shifts_[l].size());
    }
  }
}

std::vector<double> Mlp::flatten(const Gradients& grads, bool layer_norm) {
  std::vector<double> flat;
  auto push = [&](const double* p, Eigen::Index n) { flat.insert(flat.end(), p, p + n); };
  const std::size_t L = grads.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    push(grads.weights[l].data(), grads.weights[l].size());
    push(grads.biases[l].data(), grads.biases[l].size());
    if (layer_norm && l + 1 < L) {
      push(grads.gains[l].data(), grads.gains[l].size());
      push(grads.shifts[l].data(), grads.shifts[l].size());
    }
  }
  return flat;
}

void Mlp::copy_parameters_from(const Mlp& other) {
  if (other.sizes_ != sizes_ || other.layer_norm_ != layer_norm_)
    throw ValidationError("mlp: architecture mismatch in parameter copy");
  weights_ = other.weights_;
  biases_ = other.biases_;
  gains_ = other.gains_;
  shifts_ = other.shifts_;
}

bool Mlp::same_parameters(const Mlp& other) const {
  if (other.sizes_ != sizes_ || other.layer_norm_ != layer_norm_) return false;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
    if (gains_[l] != other.gains_[l] || shifts_[l] != other.shifts_[l]) return false;
  }
  return true;
}

void AdamState::resize(std::size_t n) {
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
  t_ = 0;
}

void AdamState::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw ValidationError("adam: size mismatch");
  if (m_.size() != params.size()) resize(params.size());
  ++t_;
  adam_update(params.data(), grads.data(), m_.data(), v_.data(), params.size(), lr, t_);
}

}  // namespace pathmarl
