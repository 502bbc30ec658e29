#include "pathmarl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "pathmarl/agents.hpp"
#include "pathmarl/coordination.hpp"
#include "pathmarl/errors.hpp"
#include "pathmarl/random.hpp"
#include "pathmarl/state_encoder.hpp"

namespace pathmarl {

namespace {

// Stream ids for derive_seed(config.seed, ...).
enum : std::uint64_t {
  kSplitStream = 0,
  kPrefilterStream = 1,
  kEvaluatorStream = 2,
  kGnnStream = 3,
  kCriticStream = 4,
  kAgentStream = 5,
  kMetaStream = 6,
  kActionStream = 7,
  kReplayStream = 8,
  kEvaluationStream = 9,
};

IndexList column_indices(const ExpressionDataset& ds, const std::vector<std::string>& genes) {
  IndexList cols;
  cols.reserve(genes.size());
  for (const auto& g : genes) {
    auto j = ds.gene_index(g);
    if (!j) throw ValidationError("gene not in dataset: " + g);
    cols.push_back(*j);
  }
  return cols;
}

Matrix columns(const Matrix& x, const IndexList& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

Matrix standardize(const Matrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Matrix z = x.rowwise() - mean;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double sd = std::sqrt(z.col(c).squaredNorm() / static_cast<double>(z.rows()));
    if (sd > 0.0) z.col(c) /= sd;
  }
  return z;
}

void check_finite(double v, const char* module, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(module, what);
}

}  // namespace

// ---- evaluator ---------------------------------------------------------------

SubsetEvaluator::SubsetEvaluator(Matrix x, Labels y, std::size_t folds, std::uint64_t seed,
                                 std::unique_ptr<Classifier> classifier)
    : x_(std::move(x)), y_(std::move(y)), seed_(seed), classifier_(std::move(classifier)) {
  if (!classifier_) classifier_ = std::make_unique<ForestClassifier>();
  folds_ = make_folds(y_, folds, derive_seed(seed, 0));
}

double SubsetEvaluator::evaluate(std::span<const int> selection) {
  if (selection.size() != n_genes()) throw ValidationError("evaluator: selection length mismatch");
  std::vector<int> key(selection.begin(), selection.end());
  for (int& v : key) v = v ? 1 : 0;
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  IndexList cols;
  for (std::size_t i = 0; i < key.size(); ++i)
    if (key[i]) cols.push_back(i);
  double score = 0.5;
  if (!cols.empty()) {
    const double cv = cross_validated_auc(*classifier_, columns(x_, cols), y_, folds_, derive_seed(seed_, 1));
    if (std::isfinite(cv)) score = cv;
  }
  cache_.emplace(std::move(key), score);
  return score;
}

SubsetEvaluator make_evaluator(const RunConfig& config, const ExpressionDataset& train,
                               const std::vector<std::string>& pool) {
  ForestParams fp;
  fp.n_trees = config.evaluator.n_trees;
  return SubsetEvaluator(columns(train.x(), column_indices(train, pool)), train.y(), config.evaluator.cv_folds,
                         derive_seed(config.seed, kEvaluatorStream), std::make_unique<ForestClassifier>(fp));
}

// ---- ranking -----------------------------------------------------------------

Vector importance_weights(const Matrix& diffs, double decay) {
  if (diffs.cols() == 0) throw ValidationError("importance_weights: empty history");
  const Eigen::Index t_max = diffs.cols();
  Vector w = Vector::Zero(diffs.rows());
  for (Eigen::Index t = 0; t < t_max; ++t) {
    // Column t is step t+1; its weight is decay^(T - (t+1)).
    const double f = std::pow(decay, static_cast<double>(t_max - 1 - t));
    w += f * diffs.col(t);
  }
  return w;
}

IndexList rank_by_weight(const Vector& w) {
  IndexList order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return w(static_cast<Eigen::Index>(a)) > w(static_cast<Eigen::Index>(b));
  });
  return order;
}

IndexList select_top_k(const Vector& w, std::size_t k) {
  if (k == 0) throw ValidationError("select_top_k: k must be at least 1");
  IndexList order = rank_by_weight(w);
  if (order.size() > k) order.resize(k);
  return order;
}

// ---- selection ---------------------------------------------------------------

PrefilterResult prefilter_for(const RunConfig& config, const ExpressionDataset& train, const PathwayDB& db) {
  PrefilterParams pp = config.prefilter;
  pp.k = config.schedule.k;
  return run_prefilter(train, db, pp, derive_seed(config.seed, kPrefilterStream));
}

SelectionResult select_genes(const RunConfig& config, const ExpressionDataset& train, const PathwayDB& db,
                             RunOptions options) {
  validate(config);
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0) throw ValidationError("select: training data has a single class");

  SelectionResult result;
  if (options.prefilter) {
    if (options.prefilter->genes != train.genes())
      throw ValidationError("select: precomputed prefilter does not match the training genes");
    result.prefilter = *options.prefilter;
  } else {
    result.prefilter = prefilter_for(config, train, db);
  }
  result.pool = result.prefilter.selected_genes();
  if (result.pool.empty()) throw ValidationError("select: candidate pool is empty after pre-filtering");

  const std::size_t n = result.pool.size();
  const auto pool_cols = column_indices(train, result.pool);
  const Matrix x_pool = columns(train.x(), pool_cols);
  const Matrix z_pool = standardize(x_pool);
  Vector scores(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    scores(static_cast<Eigen::Index>(i)) = result.prefilter.adjusted_scores(static_cast<Eigen::Index>(pool_cols[i]));

  const GeneGraph graph = build_graph(x_pool, db, result.pool, config.graph.correlation_weight);
  if (!options.edge_dump.empty()) write_edge_tsv(graph, options.edge_dump);
  const Matrix embeddings = pathway_embeddings(db, result.pool, config.graph.embedding_dim, config.graph.embedding_seed);
  const PathwayStructure structure = build_pathway_structure(db, result.pool, train.genes());

  ForestParams fp;
  fp.n_trees = config.evaluator.n_trees;
  SubsetEvaluator evaluator(x_pool, train.y(), config.evaluator.cv_folds,
                            derive_seed(config.seed, kEvaluatorStream),
                            options.classifier ? std::move(options.classifier)
                                               : std::make_unique<ForestClassifier>(fp));

  Rng init_rng(derive_seed(config.seed, kGnnStream));
  GnnEncoder gnn(3 + config.graph.embedding_dim, config.graph.hidden_dim, init_rng);
  Rng critic_rng(derive_seed(config.seed, kCriticStream));
  Critic critic(config.graph.hidden_dim, config.critic.compressed_dim, config.critic.head_dim, critic_rng);
  AgentPool agents(n, 2 * config.graph.hidden_dim, config.agents, derive_seed(config.seed, kAgentStream));
  SharedMemory memory(n, config.memory.decay);
  MetaLearner meta(n, config.meta, derive_seed(config.seed, kMetaStream));
  Rng rng(derive_seed(config.seed, kActionStream));
  std::vector<Rng> replay_rngs;
  replay_rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) replay_rngs.emplace_back(derive_seed(config.seed, kReplayStream, i));
  std::vector<std::array<std::size_t, 2>> action_counts(n, {0, 0});

  const std::size_t batch_rows = std::min<std::size_t>(config.graph.minibatch, train.n_samples());
  std::vector<std::size_t> sample_order(train.n_samples());
  std::iota(sample_order.begin(), sample_order.end(), std::size_t{0});
  auto encode = [&](const std::vector<int>& selection) {
    // Partial Fisher-Yates: the first batch_rows entries are a uniform draw.
    for (std::size_t k = 0; k < batch_rows; ++k)
      std::swap(sample_order[k], sample_order[k + uniform_index(rng, sample_order.size() - k)]);
    Vector expr = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < batch_rows; ++k) expr += z_pool.row(static_cast<Eigen::Index>(sample_order[k])).transpose();
    expr /= static_cast<double>(batch_rows);
    return gnn.encode(graph.adjacency, node_features(expr, scores, selection, embeddings));
  };

  const std::size_t total_steps = config.schedule.episodes * config.schedule.steps_per_episode;
  const std::uint64_t explore = config.schedule.exploration_steps;
  Matrix diffs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(total_steps));
  const std::vector<int> all_selected(n, 1);
  const double baseline = evaluator.evaluate(all_selected);
  result.trace.baseline_performance = baseline;
  const double lambda_a = config.flags.no_crt ? 1.0 : config.critic.lambda_a;
  const double lambda_b = config.flags.no_crt ? 0.0 : config.critic.lambda_b;
  RewardWeights weights = config.reward.weights;
  if (config.flags.no_rwd) weights = {1.0, 0.0, 0.0};

  std::uint64_t t = 0;
  for (std::size_t episode = 0; episode < config.schedule.episodes; ++episode) {
    std::vector<int> selection = all_selected;
    double previous = baseline;
    StateEncoding enc = encode(selection);
    for (std::size_t s = 0; s < config.schedule.steps_per_episode; ++s) {
      StepTrace st;
      st.episode = episode;
      st.epsilon = epsilon(t, config.agents.epsilon_start, config.agents.epsilon_decay, config.agents.epsilon_min);
      st.eta = linear_schedule(t, explore, config.memory.eta_start, config.memory.eta_end);
      const double is_beta = linear_schedule(t, explore, config.agents.is_beta_start, config.agents.is_beta_end);

      auto state = std::make_shared<const StateSnapshot>(enc.snapshot());
      const Vector biases = config.flags.no_mem ? Vector::Zero(static_cast<Eigen::Index>(n))
                                                : memory.synergy_biases(config.memory.top_partners, st.eta);
      Matrix q;
      const std::vector<int> actions =
          agents.select_actions(*state, std::span<const double>(biases.data(), n), st.epsilon, rng, &q);
      diffs.col(static_cast<Eigen::Index>(t)) = (q.row(1) - q.row(0)).transpose();

      const double performance = evaluator.evaluate(actions);
      const double improvement = performance - previous;

      StepRecord record;
      record.genes = &result.pool;
      Vector delta(static_cast<Eigen::Index>(n));
      Vector uncertainty(static_cast<Eigen::Index>(n));
      if (config.flags.exact_flip_labels) {
        uncertainty.setZero();
        std::vector<int> flipped = actions;
        for (std::size_t i = 0; i < n; ++i) {
          flipped[i] ^= 1;
          const double r = evaluator.evaluate(flipped);
          record.flip_performance.push_back(r);
          delta(static_cast<Eigen::Index>(i)) = r - performance;
          meta.add(flipped, r);
          flipped[i] ^= 1;
        }
      } else if (meta.fitted()) {
        const auto md = meta_predict(meta, perturbation_matrix(actions), performance);
        delta = md.delta;
        uncertainty = md.uncertainty;
      } else {
        delta.setZero();
        uncertainty.setOnes();
      }
      meta.add(actions, performance);

      Vector bonus = Vector::Zero(static_cast<Eigen::Index>(n));
      if (config.flags.exploration_bonus) {
        for (std::size_t i = 0; i < n; ++i)
          if (action_counts[i][static_cast<std::size_t>(actions[i])] < config.reward.bonus_min_count)
            bonus(static_cast<Eigen::Index>(i)) = config.reward.exploration_bonus;
      }
      RewardInputs inputs;
      inputs.actions = actions;
      inputs.delta = delta;
      inputs.uncertainty = uncertainty;
      inputs.improvement = improvement;
      inputs.bonus = bonus;
      inputs.pathways = &structure;
      inputs.weights = weights;
      inputs.pathway_terms = !config.flags.no_rwd;
      record.rewards = compute_rewards(inputs);

      const double value = critic.value(enc.global_state);
      st.critic_value = value;
      if (!config.flags.no_crt) {
        Vector d_global;
        st.critic_loss = critic.update(enc.global_state, improvement, config.critic.learning_rate, &d_global);
        Matrix d_w0, d_w1;
        gnn.backward(graph.adjacency, enc, d_global, d_w0, d_w1);
        gnn.adam_step(d_w0, d_w1, config.graph.learning_rate);
      }

      if (!config.flags.no_mem) {
        IndexList chosen;
        for (std::size_t i = 0; i < n; ++i)
          if (actions[i]) chosen.push_back(i);
        if (!chosen.empty()) memory.record(chosen, improvement);
        memory.decay();
      }

      enc = encode(actions);
      auto next_state = std::make_shared<const StateSnapshot>(enc.snapshot());
      double loss_total = 0.0;
      std::size_t trained = 0;
      for (std::size_t i = 0; i < n; ++i) {
        agents.replay(i).push({state, next_state, i, actions[i], record.rewards.reward(static_cast<Eigen::Index>(i)), value});
        ++action_counts[i][static_cast<std::size_t>(actions[i])];
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double loss = agents.train_step(i, lambda_a, lambda_b, is_beta, replay_rngs[i]);
        if (!std::isnan(loss)) {
          loss_total += loss;
          ++trained;
        }
      }
      st.mean_agent_loss = trained ? loss_total / static_cast<double>(trained) : 0.0;

      ++t;
      st.step = t;
      st.performance = performance;
      st.improvement = improvement;
      st.n_selected = static_cast<std::size_t>(std::count(actions.begin(), actions.end(), 1));
      st.synced = agents.maybe_sync(t);
      if (st.synced) {
        result.trace.sync_steps.push_back(t);
        if (config.flags.debug_checks) st.targets_equal = agents.targets_synced();
      }
      if (t % config.meta.update_every == 0 && meta.buffer_size() >= config.meta.min_buffer) {
        meta.fit();
        st.refit = true;
        result.trace.refit_steps.push_back(t);
      }
      if (config.flags.debug_checks) {
        st.memory_symmetric = memory.symmetric();
        check_finite(gnn.w0().sum() + gnn.w1().sum(), "state_encoder", "non-finite GNN weights");
        check_finite(value, "coordination", "non-finite critic value");
        if (!diffs.col(static_cast<Eigen::Index>(t - 1)).allFinite())
          throw NumericalError("agents", "non-finite Q-values");
      }
      result.trace.steps.push_back(st);

      record.step = t;
      record.actions = actions;
      record.performance = performance;
      if (options.on_step) options.on_step(record);
      previous = performance;
    }
  }

  result.importance = importance_weights(diffs, config.schedule.ranking_decay);
  if (!result.importance.allFinite()) throw NumericalError("pipeline", "non-finite importance weights");
  result.ranking = rank_by_weight(result.importance);
  for (std::size_t i : result.ranking) result.ranked_genes.push_back(result.pool[i]);
  result.selected.assign(result.ranked_genes.begin(),
                         result.ranked_genes.begin() + static_cast<std::ptrdiff_t>(std::min(config.schedule.k, n)));
  if (!options.synergy_dump.empty()) write_synergy_tsv(memory, result.pool, 20, options.synergy_dump);
  if (!options.checkpoint.empty()) agents.save(options.checkpoint, t);
  return result;
}

// ---- evaluation --------------------------------------------------------------

EvaluationReport evaluate(const std::vector<std::string>& genes, const ExpressionDataset& train,
                          const ExpressionDataset& test, std::uint64_t seed, std::size_t n_trees,
                          std::size_t repeats, std::size_t cv_folds) {
  if (genes.empty()) throw ValidationError("evaluate: empty gene set");
  if (repeats == 0) throw ValidationError("evaluate: repeats must be positive");
  const Matrix x_train = columns(train.x(), column_indices(train, genes));
  const Matrix x_test = columns(test.x(), column_indices(test, genes));
  ForestParams fp;
  fp.n_trees = n_trees;
  const ForestClassifier prototype(fp);

  EvaluationReport report;
  report.n_genes = genes.size();
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t s = repeats == 1 ? seed : derive_seed(seed, r);
    report.holdout_runs.push_back(holdout_auc(prototype, x_train, train.y(), x_test, test.y(), s));
  }
  const double n = static_cast<double>(repeats);
  report.holdout_auc = std::accumulate(report.holdout_runs.begin(), report.holdout_runs.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : report.holdout_runs) ss += (v - report.holdout_auc) * (v - report.holdout_auc);
  report.holdout_sd = std::sqrt(ss / n);
  const auto folds = make_folds(train, cv_folds, derive_seed(seed, 77));
  report.cv_auc = cross_validated_auc(prototype, x_train, train.y(), folds, derive_seed(seed, 78));
  return report;
}

Split holdout_split(const RunConfig& config, const ExpressionDataset& dataset) {
  return make_split(dataset, config.evaluation.test_fraction, derive_seed(config.seed, kSplitStream));
}

RankedResult run(const RunConfig& config, const ExpressionDataset& dataset, const PathwayDB& db,
                 RunOptions options) {
  validate(config);
  RankedResult out;
  out.split = holdout_split(config, dataset);
  const ExpressionDataset train = dataset.subset_samples(out.split.train_idx);
  const ExpressionDataset test = dataset.subset_samples(out.split.test_idx);
  out.selection = select_genes(config, train, db, std::move(options));
  out.evaluation = evaluate(out.selection.selected, train, test, derive_seed(config.seed, kEvaluationStream),
                            config.evaluation.n_trees, config.evaluation.repeats);
  return out;
}

// ---- planted-signal metrics ---------------------------------------------------

double recovery(const std::vector<std::string>& genes, const std::set<std::string>& truth) {
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& g : std::set<std::string>(genes.begin(), genes.end())) hit += truth.count(g);
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::size_t covered_pathways(const std::vector<std::string>& genes, const PathwayDB& db,
                             const std::set<std::string>& pathways,
                             const std::vector<std::string>& dataset_genes, double threshold) {
  const std::set<std::string> chosen(genes.begin(), genes.end());
  const std::set<std::string> present(dataset_genes.begin(), dataset_genes.end());
  std::size_t covered = 0;
  for (const auto& id : pathways) {
    auto it = db.pathways().find(id);
    if (it == db.pathways().end()) continue;
    std::size_t size = 0;
    std::size_t hit = 0;
    for (const auto& g : it->second) {
      if (!present.count(g)) continue;
      ++size;
      hit += chosen.count(g);
    }
    if (size > 0 && static_cast<double>(hit) / static_cast<double>(size) >= threshold) ++covered;
  }
  return covered;
}

// ---- artifacts ---------------------------------------------------------------

void write_ranked_tsv(const SelectionResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "gene\tweight\trank\tselected\n";
  for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
    const std::size_t i = r.ranking[pos];
    out << r.pool[i] << '\t' << r.importance(static_cast<Eigen::Index>(i)) << '\t' << pos + 1 << '\t'
        << (pos < r.selected.size() ? 1 : 0) << '\n';
  }
}

void write_trace_tsv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "step\tepisode\tepsilon\teta\tperformance\timprovement\tcritic_value\tcritic_loss\tagent_loss\tn_selected"
         "\tsynced\trefit\n";
  for (const auto& s : trace.steps) {
    out << s.step << '\t' << s.episode << '\t' << s.epsilon << '\t' << s.eta << '\t' << s.performance << '\t'
        << s.improvement << '\t' << s.critic_value << '\t' << s.critic_loss << '\t' << s.mean_agent_loss << '\t'
        << s.n_selected << '\t' << s.synced << '\t' << s.refit << '\n';
  }
}

void write_heatmap_csv(const ExpressionDataset& ds, const std::vector<std::string>& genes,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  const auto cols = column_indices(ds, genes);
  IndexList rows(ds.n_samples());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return ds.y()[a] < ds.y()[b]; });
  out << "sample_id,label";
  for (const auto& g : genes) out << ',' << g;
  out << '\n';
  for (std::size_t r : rows) {
    out << ds.samples()[r] << ',' << ds.y()[r];
    for (std::size_t c : cols) out << ',' << ds.x()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    out << '\n';
  }
}

void write_result_json(const RunConfig& config, const RankedResult& result, const std::filesystem::path& path) {
  using nlohmann::json;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  json perf = json::array();
  for (const auto& s : result.selection.trace.steps) perf.push_back(s.performance);
  json j{
      {"seed", config.seed},
      {"config", json::parse(config_to_json(config))},
      {"n_train", result.split.train_idx.size()},
      {"n_test", result.split.test_idx.size()},
      {"pool_size", result.selection.pool.size()},
      {"prefilter_fallback", result.selection.prefilter.fallback_used},
      {"selected", result.selection.selected},
      {"baseline_performance", result.selection.trace.baseline_performance},
      {"performance_trace", perf},
      {"sync_steps", result.selection.trace.sync_steps},
      {"refit_steps", result.selection.trace.refit_steps},
      {"holdout_auc", result.evaluation.holdout_auc},
      {"holdout_sd", result.evaluation.holdout_sd},
      {"holdout_runs", result.evaluation.holdout_runs},
      {"train_cv_auc", result.evaluation.cv_auc},
  };
  out << j.dump(2) << '\n';
}

std::function<void(const StepRecord&)> reward_logger(std::shared_ptr<std::ostream> out) {
  *out << "step\tgene\taction\tdelta\tuncertainty\tdelta_phi\tdelta_psi\treward\n";
  out->precision(17);
  return [out](const StepRecord& r) {
    const auto& rw = r.rewards;
    for (std::size_t i = 0; i < r.actions.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      *out << r.step << '\t' << (r.genes ? (*r.genes)[i] : std::to_string(i)) << '\t' << r.actions[i] << '\t'
           << rw.delta(e) << '\t' << rw.uncertainty(e) << '\t' << rw.delta_phi(e) << '\t' << rw.delta_psi(e) << '\t'
           << rw.reward(e) << '\n';
    }
  };
}

}  // namespace pathmarl
