#pragma once

// One DQN agent per candidate gene: online/target networks, prioritized
// replay, epsilon schedule and sigmoid action selection.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/mlp.hpp"
#include "pathmarl/random.hpp"
#include "pathmarl/state_encoder.hpp"

namespace pathmarl {

struct AgentParams {
  std::vector<std::size_t> hidden{256, 128, 64};
  bool layer_norm = true;
  double learning_rate = 3e-4;
  double gamma = 0.85;
  std::size_t batch_size = 64;
  std::size_t replay_capacity = 1700;
  double priority_exponent = 0.6;
  double is_beta_start = 0.4;
  double is_beta_end = 1.0;
  double priority_eps = 1e-6;
  std::size_t target_sync_every = 50;
  double epsilon_start = 0.95;
  double epsilon_decay = 0.99;
  double epsilon_min = 0.1;
};

/// max(min, start * decay^t).
double epsilon(std::uint64_t t, double start = 0.95, double decay = 0.99, double min = 0.1);

/// With probability eps: a fair coin. Otherwise a = 1 with probability
/// sigmoid(q1 + bias). Consumes two uniforms.
int choose_action(double q1, double bias, double eps, Rng& rng);

/// States are shared between all agents' transitions of a step.
struct Transition {
  std::shared_ptr<const StateSnapshot> state;
  std::shared_ptr<const StateSnapshot> next_state;
  std::size_t agent = 0;
  int action = 0;
  double reward = 0.0;
  /// Critic value at `state`, used in the blended target.
  double value = 0.0;
};

class PrioritizedReplay {
 public:
  struct Batch {
    IndexList indices;
    std::vector<double> probabilities;
    /// (N p)^-beta / max over the batch.
    std::vector<double> weights;
  };

  explicit PrioritizedReplay(std::size_t capacity = 1700, double exponent = 0.6, double eps = 1e-6);

  /// New entries get the current maximum priority (1 when empty).
  void push(Transition t);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return entries_.at(i); }
  double priority(std::size_t i) const { return priorities_.at(i); }
  /// Sampling probability of slot i.
  double probability(std::size_t i) const;

  /// Sampling with replacement, proportional to priority^exponent.
  Batch sample(std::size_t n, double beta, Rng& rng) const;
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

 private:
  std::size_t capacity_;
  double exponent_;
  double eps_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
  std::vector<Transition> entries_;
  std::vector<double> priorities_;
};

class AgentPool {
 public:
  AgentPool() = default;
  AgentPool(std::size_t n_agents, std::size_t state_dim, AgentParams params, std::uint64_t seed);

  std::size_t size() const { return online_.size(); }
  const AgentParams& params() const { return params_; }
  std::size_t state_dim() const { return state_dim_; }

  Mlp& online(std::size_t i) { return online_.at(i); }
  const Mlp& online(std::size_t i) const { return online_.at(i); }
  const Mlp& target(std::size_t i) const { return target_.at(i); }
  PrioritizedReplay& replay(std::size_t i) { return replay_.at(i); }
  const PrioritizedReplay& replay(std::size_t i) const { return replay_.at(i); }

  /// Online Q-values (columns: agents, rows: actions 0/1).
  Matrix q_values(const StateSnapshot& states) const;

  /// One action per agent; `q_out` receives q_values when non-null.
  std::vector<int> select_actions(const StateSnapshot& states, std::span<const double> biases,
                                  double eps, Rng& rng, Matrix* q_out = nullptr) const;

  /// Huber step of agent i on explicit targets for the actions in `batch`,
  /// weighted by the importance weights. Returns the loss; priorities are set
  /// to |target - Q| + eps.
  double train_on(std::size_t i, const PrioritizedReplay::Batch& batch, std::span<const double> targets);

  /// Samples from agent i's buffer and trains on blended targets. Returns
  /// NaN if the buffer holds fewer than batch_size entries.
  double train_step(std::size_t i, double lambda_a, double lambda_b, double is_beta, Rng& rng);

  /// Copies online into target when step is a multiple of the sync period.
  bool maybe_sync(std::uint64_t step);
  void sync_targets();
  bool targets_synced() const;

  std::uint64_t train_steps() const { return train_steps_; }

  void save(const std::filesystem::path& path, std::uint64_t env_step) const;
  /// Restores network parameters; returns the stored environment step.
  std::uint64_t load(const std::filesystem::path& path);

 private:
  Matrix gather_states(const PrioritizedReplay& buf, const IndexList& idx, bool next) const;

  AgentParams params_;
  std::size_t state_dim_ = 0;
  std::vector<Mlp> online_;
  std::vector<Mlp> target_;
  std::vector<PrioritizedReplay> replay_;
  std::uint64_t train_steps_ = 0;
};

}  // namespace pathmarl
