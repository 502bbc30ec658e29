#include "pathmarl/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "pathmarl/errors.hpp"

namespace pathmarl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
  return m;
}

template <typename P, typename F>
void for_each_block(P& p, F&& f) {
  f(p.wc.data(), p.wc.size());
  f(p.bc.data(), p.bc.size());
  f(p.wg.data(), p.wg.size());
  f(p.bg.data(), p.bg.size());
  f(p.wh.data(), p.wh.size());
  f(p.bh.data(), p.bh.size());
  f(p.wo.data(), p.wo.size());
  f(&p.bo, Eigen::Index{1});
}

}  // namespace

double blend_target(double reward, double max_next_q, double value, double gamma, double lambda_a,
                    double lambda_b) noexcept {
  return lambda_a * (reward + gamma * max_next_q) + lambda_b * value;
}

double linear_schedule(std::uint64_t step, std::uint64_t steps, double start, double end) noexcept {
  if (steps == 0 || step >= steps) return end;
  return start + (end - start) * static_cast<double>(step) / static_cast<double>(steps);
}

double eta_schedule(std::uint64_t step, std::uint64_t steps) noexcept {
  return linear_schedule(step, steps, 0.08, 0.3);
}

// ---- critic ------------------------------------------------------------------

Critic::Critic(std::size_t input_dim, std::size_t compressed_dim, std::size_t head_dim, Rng& rng) {
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto c = static_cast<Eigen::Index>(compressed_dim);
  const auto h = static_cast<Eigen::Index>(head_dim);
  const double lin = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double lc = 1.0 / std::sqrt(static_cast<double>(compressed_dim));
  const double lh = 1.0 / std::sqrt(static_cast<double>(head_dim));
  p_.wc = uniform_matrix(c, in, lin, rng);
  p_.bc = uniform_matrix(c, 1, lin, rng);
  p_.wg = uniform_matrix(c, c, lc, rng);
  p_.bg = uniform_matrix(c, 1, lc, rng);
  p_.wh = uniform_matrix(h, c, lc, rng);
  p_.bh = uniform_matrix(h, 1, lc, rng);
  p_.wo = uniform_matrix(h, 1, lh, rng);
  p_.bo = (2.0 * uniform01(rng) - 1.0) * lh;
  adam_.resize(parameters().size());
}

Critic Critic::zeros(std::size_t input_dim, std::size_t compressed_dim, std::size_t head_dim) {
  Critic out;
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto c = static_cast<Eigen::Index>(compressed_dim);
  const auto h = static_cast<Eigen::Index>(head_dim);
  out.p_.wc = Matrix::Zero(c, in);
  out.p_.bc = Vector::Zero(c);
  out.p_.wg = Matrix::Zero(c, c);
  out.p_.bg = Vector::Zero(c);
  out.p_.wh = Matrix::Zero(h, c);
  out.p_.bh = Vector::Zero(h);
  out.p_.wo = Vector::Zero(h);
  out.adam_.resize(out.parameters().size());
  return out;
}

double Critic::forward(const Vector& x, Cache& cache) const {
  if (x.size() != p_.wc.cols()) throw ValidationError("critic: input size mismatch");
  cache.input = x;
  cache.compressed = p_.wc * x + p_.bc;
  cache.gate = (p_.wg * cache.compressed + p_.bg).unaryExpr([](double v) { return sigmoid(v); });
  cache.combined = cache.compressed + cache.gate.cwiseProduct(cache.compressed);
  cache.head_pre = p_.wh * cache.combined + p_.bh;
  cache.head = cache.head_pre.cwiseMax(0.0);
  return p_.wo.dot(cache.head) + p_.bo;
}

double Critic::value(const Vector& x) const {
  Cache cache;
  return forward(x, cache);
}

Critic::Params Critic::backward(const Cache& cache, double d_value, Vector& d_input) const {
  Params g;
  g.wo = d_value * cache.head;
  g.bo = d_value;
  const Vector d_head_pre = (cache.head_pre.array() > 0.0).select(d_value * p_.wo, 0.0);
  g.wh = d_head_pre * cache.combined.transpose();
  g.bh = d_head_pre;
  const Vector d_combined = p_.wh.transpose() * d_head_pre;
  const Vector d_gate_pre =
      d_combined.cwiseProduct(cache.compressed).cwiseProduct(cache.gate.cwiseProduct((1.0 - cache.gate.array()).matrix()));
  g.wg = d_gate_pre * cache.compressed.transpose();
  g.bg = d_gate_pre;
  const Vector d_compressed =
      d_combined.cwiseProduct((1.0 + cache.gate.array()).matrix()) + p_.wg.transpose() * d_gate_pre;
  g.wc = d_compressed * cache.input.transpose();
  g.bc = d_compressed;
  d_input = p_.wc.transpose() * d_compressed;
  return g;
}

double Critic::update(const Vector& x, double target, double lr, Vector* d_input) {
  Cache cache;
  const double v = forward(x, cache);
  const double err = v - target;
  const double loss = err * err;
  if (!std::isfinite(loss)) throw NumericalError("coordination", "non-finite critic loss");
  Vector dx;
  const Params g = backward(cache, 2.0 * err, dx);
  if (d_input) *d_input = dx;
  std::vector<double> params = parameters();
  adam_.step(params, flatten(g), lr);
  set_parameters(params);
  return loss;
}

std::vector<double> Critic::parameters() const {
  return flatten(p_);
}

void Critic::set_parameters(std::span<const double> flat) {
  std::size_t pos = 0;
  std::size_t total = 0;
  for_each_block(p_, [&](double*, Eigen::Index n) { total += static_cast<std::size_t>(n); });
  if (flat.size() != total) throw ValidationError("critic: parameter count mismatch");
  for_each_block(p_, [&](double* data, Eigen::Index n) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(n)), data);
    pos += static_cast<std::size_t>(n);
  });
}

std::vector<double> Critic::flatten(const Params& p) {
  std::vector<double> flat;
  for_each_block(p, [&](const double* data, Eigen::Index n) { flat.insert(flat.end(), data, data + n); });
  return flat;
}

// ---- shared memory -------------------------------------------------------------

SharedMemory::SharedMemory(std::size_t n_genes, double decay)
    : decay_(decay), synergy_(Matrix::Zero(static_cast<Eigen::Index>(n_genes), static_cast<Eigen::Index>(n_genes))) {}

std::uint64_t SharedMemory::fingerprint(std::span<const std::size_t> genes) {
  std::vector<std::size_t> sorted(genes.begin(), genes.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::uint64_t h = mix64(sorted.size());
  for (std::size_t g : sorted) h = mix64(h ^ mix64(static_cast<std::uint64_t>(g) + 0x9e3779b97f4a7c15ULL));
  return h;
}

void SharedMemory::record(std::span<const std::size_t> selected, double improvement) {
  if (selected.empty()) throw ValidationError("memory_record: empty selection");
  const auto key = fingerprint(selected);
  auto [it, inserted] = history_.emplace(key, improvement);
  if (!inserted) it->second = std::max(it->second, improvement);
  if (!(improvement > 0.0)) return;
  for (std::size_t a = 0; a < selected.size(); ++a) {
    for (std::size_t b = a + 1; b < selected.size(); ++b) {
      const auto i = static_cast<Eigen::Index>(selected[a]);
      const auto j = static_cast<Eigen::Index>(selected[b]);
      if (i == j) continue;
      synergy_(i, j) += improvement;
      synergy_(j, i) += improvement;
    }
  }
}

void SharedMemory::decay() {
  synergy_ *= decay_;
  for (auto& entry : history_) entry.second *= decay_;
}

std::optional<double> SharedMemory::history(std::span<const std::size_t> selected) const {
  auto it = history_.find(fingerprint(selected));
  if (it == history_.end()) return std::nullopt;
  return it->second;
}

double SharedMemory::synergy_bias(std::size_t i, std::size_t k, double eta) const {
  const auto n = synergy_.cols();
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j != static_cast<Eigen::Index>(i)) row.push_back(synergy_(static_cast<Eigen::Index>(i), j));
  }
  const std::size_t take = std::min(k, row.size());
  std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(take), row.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t t = 0; t < take; ++t) sum += row[t];
  return eta * sum;
}

Vector SharedMemory::synergy_biases(std::size_t k, double eta) const {
  Vector b(synergy_.rows());
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = synergy_bias(static_cast<std::size_t>(i), k, eta);
  return b;
}

bool SharedMemory::symmetric() const { return synergy_ == synergy_.transpose(); }

std::vector<std::tuple<std::size_t, std::size_t, double>> SharedMemory::top_pairs(std::size_t n) const {
  std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
  for (Eigen::Index i = 0; i < synergy_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < synergy_.cols(); ++j)
      pairs.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j), synergy_(i, j));
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return std::get<2>(a) > std::get<2>(b); });
  if (pairs.size() > n) pairs.resize(n);
  return pairs;
}

void write_synergy_tsv(const SharedMemory& memory, const std::vector<std::string>& genes,
                       std::size_t n_pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "gene_a\tgene_b\tsynergy\n";
  for (const auto& [i, j, v] : memory.top_pairs(n_pairs)) out << genes[i] << '\t' << genes[j] << '\t' << v << '\n';
}

}  // namespace pathmarl
