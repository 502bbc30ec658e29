#include "pathmarl/agents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pathmarl/coordination.hpp"
#include "pathmarl/errors.hpp"

namespace pathmarl {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'A', 'R', 'L', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("checkpoint: truncated file", 0);
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

}  // namespace

double epsilon(std::uint64_t t, double start, double decay, double min) {
  return std::max(min, start * std::pow(decay, static_cast<double>(t)));
}

int choose_action(double q1, double bias, double eps, Rng& rng) {
  const double explore = uniform01(rng);
  const double u = uniform01(rng);
  if (explore < eps) return u < 0.5 ? 1 : 0;
  const double p = 1.0 / (1.0 + std::exp(-(q1 + bias)));
  return u < p ? 1 : 0;
}

// ---- replay ------------------------------------------------------------------

PrioritizedReplay::PrioritizedReplay(std::size_t capacity, double exponent, double eps)
    : capacity_(capacity), exponent_(exponent), eps_(eps) {
  if (capacity == 0) throw ValidationError("replay: capacity must be positive");
  if (!(eps > 0.0)) throw ValidationError("replay: priority epsilon must be positive");
}

void PrioritizedReplay::push(Transition t) {
  if (!std::isfinite(t.reward) || !std::isfinite(t.value))
    throw NumericalError("agents", "non-finite transition");
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(t));
    priorities_.push_back(max_priority_);
  } else {
    entries_[next_] = std::move(t);
    priorities_[next_] = max_priority_;
  }
  next_ = (next_ + 1) % capacity_;
}

double PrioritizedReplay::probability(std::size_t i) const {
  double total = 0.0;
  for (double p : priorities_) total += std::pow(p, exponent_);
  return std::pow(priorities_.at(i), exponent_) / total;
}

PrioritizedReplay::Batch PrioritizedReplay::sample(std::size_t n, double beta, Rng& rng) const {
  if (entries_.size() < n || n == 0) throw ValidationError("replay: not enough entries to sample");
  std::vector<double> cumulative(priorities_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < priorities_.size(); ++i) {
    total += std::pow(priorities_[i], exponent_);
    cumulative[i] = total;
  }
  Batch b;
  b.indices.reserve(n);
  const double count = static_cast<double>(entries_.size());
  double max_w = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    const double p = std::pow(priorities_[idx], exponent_) / total;
    const double w = std::pow(count * p, -beta);
    b.indices.push_back(idx);
    b.probabilities.push_back(p);
    b.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : b.weights) w /= max_w;
  return b;
}

void PrioritizedReplay::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) throw ValidationError("replay: priority update size mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double p = std::abs(td_errors[k]) + eps_;
    if (!std::isfinite(p)) throw NumericalError("agents", "non-finite TD error");
    priorities_.at(indices[k]) = p;
    max_priority_ = std::max(max_priority_, p);
  }
}

// ---- pool --------------------------------------------------------------------

AgentPool::AgentPool(std::size_t n_agents, std::size_t state_dim, AgentParams params, std::uint64_t seed)
    : params_(std::move(params)), state_dim_(state_dim) {
  std::vector<std::size_t> sizes{state_dim};
  sizes.insert(sizes.end(), params_.hidden.begin(), params_.hidden.end());
  sizes.push_back(2);
  online_.reserve(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    Rng rng(derive_seed(seed, i));
    online_.emplace_back(sizes, params_.layer_norm, rng);
    // Output layer starts at zero: Q = 0 for both actions.
    const std::size_t last = sizes.size() - 2;
    online_.back().weight(last).setZero();
    online_.back().bias(last).setZero();
    replay_.emplace_back(params_.replay_capacity, params_.priority_exponent, params_.priority_eps);
  }
  target_ = online_;
}

Matrix AgentPool::q_values(const StateSnapshot& states) const {
  if (states.n_agents() != size()) throw ValidationError("agents: one state per agent required");
  Matrix q(2, static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) q.col(static_cast<Eigen::Index>(i)) = online_[i].forward(states.agent_state(i));
  return q;
}

std::vector<int> AgentPool::select_actions(const StateSnapshot& states, std::span<const double> biases,
                                           double eps, Rng& rng, Matrix* q_out) const {
  if (biases.size() != size()) throw ValidationError("agents: one bias per agent required");
  const Matrix q = q_values(states);
  std::vector<int> actions(size());
  for (std::size_t i = 0; i < size(); ++i)
    actions[i] = choose_action(q(1, static_cast<Eigen::Index>(i)), biases[i], eps, rng);
  if (q_out) *q_out = q;
  return actions;
}

Matrix AgentPool::gather_states(const PrioritizedReplay& buf, const IndexList& idx, bool next) const {
  Matrix x(static_cast<Eigen::Index>(state_dim_), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Transition& t = buf.at(idx[k]);
    const auto& snap = next ? t.next_state : t.state;
    x.col(static_cast<Eigen::Index>(k)) = snap->agent_state(t.agent);
  }
  return x;
}

double AgentPool::train_on(std::size_t i, const PrioritizedReplay::Batch& batch, std::span<const double> targets) {
  const std::size_t n = batch.indices.size();
  if (targets.size() != n) throw ValidationError("agents: one target per sampled transition required");
  PrioritizedReplay& buf = replay_.at(i);
  const Matrix x = gather_states(buf, batch.indices, false);
  Matrix t = Matrix::Zero(2, static_cast<Eigen::Index>(n));
  Matrix mask = Matrix::Zero(2, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const int a = buf.at(batch.indices[k]).action;
    t(a, static_cast<Eigen::Index>(k)) = targets[k];
    mask(a, static_cast<Eigen::Index>(k)) = 1.0;
  }
  const Matrix q = online_[i].forward(x);
  std::vector<double> td(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int a = buf.at(batch.indices[k]).action;
    td[k] = targets[k] - q(a, static_cast<Eigen::Index>(k));
  }
  const double loss = online_[i].train_step(x, t, LossKind::kHuber, params_.learning_rate,
                                            OptimizerKind::kAdam, &mask, batch.weights);
  if (!std::isfinite(loss)) throw NumericalError("agents", "non-finite loss for agent " + std::to_string(i));
  buf.update_priorities(batch.indices, td);
  ++train_steps_;
  return loss;
}

double AgentPool::train_step(std::size_t i, double lambda_a, double lambda_b, double is_beta, Rng& rng) {
  const PrioritizedReplay& buf = replay_.at(i);
  if (buf.size() < params_.batch_size) return std::numeric_limits<double>::quiet_NaN();
  const auto batch = buf.sample(params_.batch_size, is_beta, rng);
  const Matrix next_q = target_[i].forward(gather_states(buf, batch.indices, true));
  std::vector<double> targets(batch.indices.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Transition& t = buf.at(batch.indices[k]);
    targets[k] = blend_target(t.reward, next_q.col(static_cast<Eigen::Index>(k)).maxCoeff(), t.value,
                              params_.gamma, lambda_a, lambda_b);
  }
  return train_on(i, batch, targets);
}

bool AgentPool::maybe_sync(std::uint64_t step) {
  if (params_.target_sync_every == 0 || step % params_.target_sync_every != 0) return false;
  sync_targets();
  return true;
}

void AgentPool::sync_targets() {
  for (std::size_t i = 0; i < size(); ++i) target_[i].copy_parameters_from(online_[i]);
}

bool AgentPool::targets_synced() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!target_[i].same_parameters(online_[i])) return false;
  }
  return true;
}

void AgentPool::save(const std::filesystem::path& path, std::uint64_t env_step) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, kVersion);
  write_u64(out, size());
  write_u64(out, state_dim_);
  write_u64(out, env_step);
  write_u64(out, train_steps_);
  for (const auto* nets : {&online_, &target_}) {
    for (const Mlp& net : *nets) {
      const auto params = net.parameters();
      write_u64(out, params.size());
      for (double v : params) write_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
}

std::uint64_t AgentPool::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("checkpoint: bad magic", 0);
  if (read_u64(in) != kVersion) throw ParseError("checkpoint: unsupported version", 0);
  if (read_u64(in) != size() || read_u64(in) != state_dim_)
    throw ValidationError("checkpoint: pool shape mismatch");
  const std::uint64_t env_step = read_u64(in);
  train_steps_ = read_u64(in);
  for (auto* nets : {&online_, &target_}) {
    for (Mlp& net : *nets) {
      std::vector<double> params(read_u64(in));
      if (params.size() != net.parameter_count()) throw ValidationError("checkpoint: parameter count mismatch");
      for (double& v : params) v = std::bit_cast<double>(read_u64(in));
      net.set_parameters(params);
    }
  }
  return env_step;
}

}  // namespace pathmarl
