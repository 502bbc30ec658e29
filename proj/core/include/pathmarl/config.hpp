#pragma once

// Every tunable of a run in one place, with JSON round-tripping.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pathmarl/agents.hpp"
#include "pathmarl/prefilter.hpp"
#include "pathmarl/reward.hpp"

namespace pathmarl {

struct GraphConfig {
  double correlation_weight = 0.7;
  std::size_t embedding_dim = 64;
  std::size_t hidden_dim = 64;
  /// Samples averaged per step for the expression node feature.
  std::size_t minibatch = 32;
  double learning_rate = 1e-3;
  std::uint64_t embedding_seed = 2024;
};

struct CriticConfig {
  std::size_t compressed_dim = 64;
  std::size_t head_dim = 32;
  double learning_rate = 1e-3;
  double lambda_a = 0.7;
  double lambda_b = 0.3;
};

struct MemoryConfig {
  double decay = 0.99;
  double eta_start = 0.08;
  double eta_end = 0.3;
  std::size_t top_partners = 5;
};

struct RewardConfig {
  RewardWeights weights{};
  double exploration_bonus = 0.005;
  /// The bonus applies while a (gene, action) pair has fewer transitions than this.
  std::size_t bonus_min_count = 10;
};

struct EvaluatorConfig {
  std::size_t n_trees = 100;
  std::size_t cv_folds = 5;
};

struct ScheduleConfig {
  std::size_t episodes = 100;
  std::size_t steps_per_episode = 30;
  std::size_t exploration_steps = 3000;
  std::size_t k = 100;
  double ranking_decay = 0.99;
};

struct FlagConfig {
  bool exact_flip_labels = false;
  bool exploration_bonus = true;
  bool no_rwd = false;
  bool no_crt = false;
  bool no_mem = false;
  bool debug_checks = false;
};

struct EvaluationConfig {
  std::size_t n_trees = 100;
  std::size_t repeats = 1;
  double test_fraction = 0.3;
};

struct RunConfig {
  std::uint64_t seed = 0;
  PrefilterParams prefilter{};
  GraphConfig graph{};
  AgentParams agents{};
  CriticConfig critic{};
  MemoryConfig memory{};
  RewardConfig reward{};
  MetaLearnerParams meta{};
  EvaluatorConfig evaluator{};
  ScheduleConfig schedule{};
  FlagConfig flags{};
  EvaluationConfig evaluation{};
};

enum class Ablation { kNone, kNoReward, kNoCritic, kNoMemory };

const char* ablation_name(Ablation a) noexcept;

/// Sets the switch and the weights it implies (omega=1, xi=zeta=0 for no-reward;
/// lambda_a=1, lambda_b=0 for no-critic).
RunConfig with_ablation(RunConfig config, Ablation a);

/// Throws ValidationError on out-of-range values.
void validate(const RunConfig& config);

/// Fully resolved config, pretty-printed.
std::string config_to_json(const RunConfig& config);

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pathmarl
