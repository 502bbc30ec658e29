#include "pathmarl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pathmarl/errors.hpp"

namespace pathmarl {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  const auto& p = c.prefilter;
  const auto& a = c.agents;
  const auto& m = c.meta;
  return json{
      {"seed", c.seed},
      {"prefilter",
       {{"beta", p.beta},
        {"n_trees", p.n_trees},
        {"top_n", p.top_n},
        {"cv_folds", p.cv_folds},
        {"chi2_bins", p.chi2_bins},
        {"svm_lambda", p.svm.lambda},
        {"svm_epochs", p.svm.epochs},
        {"pathway_seed_offset", p.pathway_seed_offset},
        {"min_fraction", p.min_fraction}}},
      {"graph",
       {{"correlation_weight", c.graph.correlation_weight},
        {"embedding_dim", c.graph.embedding_dim},
        {"hidden_dim", c.graph.hidden_dim},
        {"minibatch", c.graph.minibatch},
        {"learning_rate", c.graph.learning_rate},
        {"embedding_seed", c.graph.embedding_seed}}},
      {"agents",
       {{"hidden", a.hidden},
        {"layer_norm", a.layer_norm},
        {"learning_rate", a.learning_rate},
        {"gamma", a.gamma},
        {"batch_size", a.batch_size},
        {"replay_capacity", a.replay_capacity},
        {"priority_exponent", a.priority_exponent},
        {"is_beta_start", a.is_beta_start},
        {"is_beta_end", a.is_beta_end},
        {"priority_eps", a.priority_eps},
        {"target_sync_every", a.target_sync_every},
        {"epsilon_start", a.epsilon_start},
        {"epsilon_decay", a.epsilon_decay},
        {"epsilon_min", a.epsilon_min}}},
      {"critic",
       {{"compressed_dim", c.critic.compressed_dim},
        {"head_dim", c.critic.head_dim},
        {"learning_rate", c.critic.learning_rate},
        {"lambda_a", c.critic.lambda_a},
        {"lambda_b", c.critic.lambda_b}}},
      {"memory",
       {{"decay", c.memory.decay},
        {"eta_start", c.memory.eta_start},
        {"eta_end", c.memory.eta_end},
        {"top_partners", c.memory.top_partners}}},
      {"reward",
       {{"omega", c.reward.weights.performance},
        {"xi", c.reward.weights.centrality},
        {"zeta", c.reward.weights.coverage},
        {"exploration_bonus", c.reward.exploration_bonus},
        {"bonus_min_count", c.reward.bonus_min_count}}},
      {"meta",
       {{"rf_trees", m.rf_trees},
        {"gbt_rounds", m.gbt.n_rounds},
        {"gbt_learning_rate", m.gbt.learning_rate},
        {"gbt_depth", m.gbt.max_depth},
        {"mlp_hidden", m.mlp_hidden},
        {"mlp_epochs", m.mlp_epochs},
        {"mlp_batch", m.mlp_batch},
        {"mlp_learning_rate", m.mlp_learning_rate},
        {"ridge", m.ridge},
        {"oof_folds", m.oof_folds},
        {"min_buffer", m.min_buffer},
        {"buffer_capacity", m.buffer_capacity},
        {"update_every", m.update_every}}},
      {"evaluator", {{"n_trees", c.evaluator.n_trees}, {"cv_folds", c.evaluator.cv_folds}}},
      {"schedule",
       {{"episodes", c.schedule.episodes},
        {"steps_per_episode", c.schedule.steps_per_episode},
        {"exploration_steps", c.schedule.exploration_steps},
        {"k", c.schedule.k},
        {"ranking_decay", c.schedule.ranking_decay}}},
      {"flags",
       {{"exact_flip_labels", c.flags.exact_flip_labels},
        {"exploration_bonus", c.flags.exploration_bonus},
        {"no_rwd", c.flags.no_rwd},
        {"no_crt", c.flags.no_crt},
        {"no_mem", c.flags.no_mem},
        {"debug_checks", c.flags.debug_checks}}},
      {"evaluation",
       {{"n_trees", c.evaluation.n_trees},
        {"repeats", c.evaluation.repeats},
        {"test_fraction", c.evaluation.test_fraction}}},
  };
}

void reject_unknown(const json& defaults, const json& given, const std::string& where) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!defaults.contains(key)) throw ValidationError("config: unknown key '" + where + key + "'");
    if (defaults[key].is_object()) {
      if (!value.is_object()) throw ValidationError("config: '" + where + key + "' must be an object");
      reject_unknown(defaults[key], value, where + key + ".");
    }
  }
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
  try {
    j.at(section).at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + section + "." + key + "': " + e.what());
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  try {
    j.at("seed").get_to(c.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad seed: ") + e.what());
  }
  auto& p = c.prefilter;
  read(j, "prefilter", "beta", p.beta);
  read(j, "prefilter", "n_trees", p.n_trees);
  read(j, "prefilter", "top_n", p.top_n);
  read(j, "prefilter", "cv_folds", p.cv_folds);
  read(j, "prefilter", "chi2_bins", p.chi2_bins);
  read(j, "prefilter", "svm_lambda", p.svm.lambda);
  read(j, "prefilter", "svm_epochs", p.svm.epochs);
  read(j, "prefilter", "pathway_seed_offset", p.pathway_seed_offset);
  read(j, "prefilter", "min_fraction", p.min_fraction);
  read(j, "graph", "correlation_weight", c.graph.correlation_weight);
  read(j, "graph", "embedding_dim", c.graph.embedding_dim);
  read(j, "graph", "hidden_dim", c.graph.hidden_dim);
  read(j, "graph", "minibatch", c.graph.minibatch);
  read(j, "graph", "learning_rate", c.graph.learning_rate);
  read(j, "graph", "embedding_seed", c.graph.embedding_seed);
  auto& a = c.agents;
  read(j, "agents", "hidden", a.hidden);
  read(j, "agents", "layer_norm", a.layer_norm);
  read(j, "agents", "learning_rate", a.learning_rate);
  read(j, "agents", "gamma", a.gamma);
  read(j, "agents", "batch_size", a.batch_size);
  read(j, "agents", "replay_capacity", a.replay_capacity);
  read(j, "agents", "priority_exponent", a.priority_exponent);
  read(j, "agents", "is_beta_start", a.is_beta_start);
  read(j, "agents", "is_beta_end", a.is_beta_end);
  read(j, "agents", "priority_eps", a.priority_eps);
  read(j, "agents", "target_sync_every", a.target_sync_every);
  read(j, "agents", "epsilon_start", a.epsilon_start);
  read(j, "agents", "epsilon_decay", a.epsilon_decay);
  read(j, "agents", "epsilon_min", a.epsilon_min);
  read(j, "critic", "compressed_dim", c.critic.compressed_dim);
  read(j, "critic", "head_dim", c.critic.head_dim);
  read(j, "critic", "learning_rate", c.critic.learning_rate);
  read(j, "critic", "lambda_a", c.critic.lambda_a);
  read(j, "critic", "lambda_b", c.critic.lambda_b);
  read(j, "memory", "decay", c.memory.decay);
  read(j, "memory", "eta_start", c.memory.eta_start);
  read(j, "memory", "eta_end", c.memory.eta_end);
  read(j, "memory", "top_partners", c.memory.top_partners);
  read(j, "reward", "omega", c.reward.weights.performance);
  read(j, "reward", "xi", c.reward.weights.centrality);
  read(j, "reward", "zeta", c.reward.weights.coverage);
  read(j, "reward", "exploration_bonus", c.reward.exploration_bonus);
  read(j, "reward", "bonus_min_count", c.reward.bonus_min_count);
  auto& m = c.meta;
  read(j, "meta", "rf_trees", m.rf_trees);
  read(j, "meta", "gbt_rounds", m.gbt.n_rounds);
  read(j, "meta", "gbt_learning_rate", m.gbt.learning_rate);
  read(j, "meta", "gbt_depth", m.gbt.max_depth);
  read(j, "meta", "mlp_hidden", m.mlp_hidden);
  read(j, "meta", "mlp_epochs", m.mlp_epochs);
  read(j, "meta", "mlp_batch", m.mlp_batch);
  read(j, "meta", "mlp_learning_rate", m.mlp_learning_rate);
  read(j, "meta", "ridge", m.ridge);
  read(j, "meta", "oof_folds", m.oof_folds);
  read(j, "meta", "min_buffer", m.min_buffer);
  read(j, "meta", "buffer_capacity", m.buffer_capacity);
  read(j, "meta", "update_every", m.update_every);
  read(j, "evaluator", "n_trees", c.evaluator.n_trees);
  read(j, "evaluator", "cv_folds", c.evaluator.cv_folds);
  read(j, "schedule", "episodes", c.schedule.episodes);
  read(j, "schedule", "steps_per_episode", c.schedule.steps_per_episode);
  read(j, "schedule", "exploration_steps", c.schedule.exploration_steps);
  read(j, "schedule", "k", c.schedule.k);
  read(j, "schedule", "ranking_decay", c.schedule.ranking_decay);
  read(j, "flags", "exact_flip_labels", c.flags.exact_flip_labels);
  read(j, "flags", "exploration_bonus", c.flags.exploration_bonus);
  read(j, "flags", "no_rwd", c.flags.no_rwd);
  read(j, "flags", "no_crt", c.flags.no_crt);
  read(j, "flags", "no_mem", c.flags.no_mem);
  read(j, "flags", "debug_checks", c.flags.debug_checks);
  read(j, "evaluation", "n_trees", c.evaluation.n_trees);
  read(j, "evaluation", "repeats", c.evaluation.repeats);
  read(j, "evaluation", "test_fraction", c.evaluation.test_fraction);
  return c;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

const char* ablation_name(Ablation a) noexcept {
  switch (a) {
    case Ablation::kNone: return "full";
    case Ablation::kNoReward: return "no_rwd";
    case Ablation::kNoCritic: return "no_crt";
    case Ablation::kNoMemory: return "no_mem";
  }
  return "unknown";
}

RunConfig with_ablation(RunConfig config, Ablation a) {
  switch (a) {
    case Ablation::kNone: break;
    case Ablation::kNoReward:
      config.flags.no_rwd = true;
      config.reward.weights = {1.0, 0.0, 0.0};
      break;
    case Ablation::kNoCritic:
      config.flags.no_crt = true;
      config.critic.lambda_a = 1.0;
      config.critic.lambda_b = 0.0;
      break;
    case Ablation::kNoMemory:
      config.flags.no_mem = true;
      break;
  }
  return config;
}

void validate(const RunConfig& c) {
  const auto& w = c.reward.weights;
  require(w.performance >= 0 && w.centrality >= 0 && w.coverage >= 0, "reward weights must be non-negative");
  require(std::abs(w.performance + w.centrality + w.coverage - 1.0) <= 1e-9, "reward weights must sum to 1");
  require(c.critic.lambda_a >= 0 && c.critic.lambda_b >= 0 &&
              std::abs(c.critic.lambda_a + c.critic.lambda_b - 1.0) <= 1e-9,
          "critic lambdas must be non-negative and sum to 1");
  require(unit(c.graph.correlation_weight), "graph.correlation_weight must lie in [0,1]");
  require(c.graph.embedding_dim > 0 && c.graph.hidden_dim > 0 && c.graph.minibatch > 0, "graph sizes must be positive");
  require(c.prefilter.beta >= 0, "prefilter.beta must be non-negative");
  require(c.prefilter.cv_folds >= 2, "prefilter.cv_folds must be at least 2");
  require(c.prefilter.chi2_bins >= 2, "prefilter.chi2_bins must be at least 2");
  require(c.prefilter.n_trees > 0 && c.prefilter.top_n > 0, "prefilter sizes must be positive");
  require(unit(c.prefilter.min_fraction), "prefilter.min_fraction must lie in [0,1]");
  const auto& a = c.agents;
  require(!a.hidden.empty(), "agents.hidden must not be empty");
  require(a.learning_rate > 0 && unit(a.gamma), "agents learning rate / gamma out of range");
  require(a.batch_size > 0 && a.replay_capacity >= a.batch_size, "agents.replay_capacity must hold a batch");
  require(a.priority_exponent >= 0 && a.priority_eps > 0, "replay exponents out of range");
  require(unit(a.is_beta_start) && unit(a.is_beta_end), "importance-sampling beta must lie in [0,1]");
  require(unit(a.epsilon_start) && unit(a.epsilon_min) && a.epsilon_decay > 0 && a.epsilon_decay <= 1,
          "epsilon schedule out of range");
  require(a.target_sync_every > 0, "agents.target_sync_every must be positive");
  require(c.critic.learning_rate > 0 && c.critic.compressed_dim > 0 && c.critic.head_dim > 0, "critic sizes out of range");
  require(c.memory.decay > 0 && c.memory.decay <= 1, "memory.decay must lie in (0,1]");
  require(c.reward.exploration_bonus >= 0, "reward.exploration_bonus must be non-negative");
  require(c.meta.min_buffer >= 2 && c.meta.buffer_capacity >= c.meta.min_buffer, "meta buffer sizes out of range");
  require(c.meta.update_every > 0 && c.meta.oof_folds >= 2 && c.meta.ridge >= 0, "meta schedule out of range");
  require(c.evaluator.n_trees > 0 && c.evaluator.cv_folds >= 2, "evaluator settings out of range");
  require(c.schedule.episodes > 0 && c.schedule.steps_per_episode > 0, "schedule must have at least one step");
  require(c.schedule.k >= 1, "schedule.k must be at least 1");
  require(unit(c.schedule.ranking_decay), "schedule.ranking_decay must lie in [0,1]");
  require(c.evaluation.n_trees > 0 && c.evaluation.repeats > 0, "evaluation settings out of range");
  require(c.evaluation.test_fraction > 0 && c.evaluation.test_fraction < 1, "evaluation.test_fraction must lie in (0,1)");
}

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2); }

RunConfig config_from_json(const std::string& text) {
  json given;
  try {
    given = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!given.is_object()) throw ValidationError("config: top level must be an object");
  const json defaults = to_json(RunConfig{});
  reject_unknown(defaults, given, "");
  json merged = defaults;
  merged.merge_patch(given);
  RunConfig c = from_json(merged);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

}  // namespace pathmarl
