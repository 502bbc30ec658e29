#pragma once

// End-to-end selection: prefilter, graph, multi-agent episodes, ranking,
// and holdout evaluation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pathmarl/config.hpp"
#include "pathmarl/data.hpp"
#include "pathmarl/learners/classifier.hpp"
#include "pathmarl/prefilter.hpp"
#include "pathmarl/reward.hpp"

namespace pathmarl {

/// Cross-validated AUC of a gene subset on the training side, memoized by
/// subset. Every subset is scored with the same folds and classifier seed.
class SubsetEvaluator {
 public:
  SubsetEvaluator(Matrix x, Labels y, std::size_t folds, std::uint64_t seed,
                  std::unique_ptr<Classifier> classifier);

  /// Empty selection scores 0.5, as does a subset whose folds are all skipped.
  double evaluate(std::span<const int> selection);
  std::size_t cache_size() const { return cache_.size(); }
  std::size_t n_genes() const { return static_cast<std::size_t>(x_.cols()); }

 private:
  Matrix x_;
  Labels y_;
  std::vector<Split> folds_;
  std::uint64_t seed_;
  std::unique_ptr<Classifier> classifier_;
  std::map<std::vector<int>, double> cache_;
};

/// Evaluator used by select_genes for `pool` (names into train's columns).
SubsetEvaluator make_evaluator(const RunConfig& config, const ExpressionDataset& train,
                               const std::vector<std::string>& pool);

/// w_i = sum_t decay^(T - t) * diff_i(t); `diffs` is agents x T.
Vector importance_weights(const Matrix& diffs, double decay);

/// Indices ordered by descending weight, ties by ascending index.
IndexList rank_by_weight(const Vector& w);
/// First min(k, n) entries of rank_by_weight.
IndexList select_top_k(const Vector& w, std::size_t k);

struct StepTrace {
  std::uint64_t step = 0;  // 1-based
  std::size_t episode = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  double performance = 0.0;
  double improvement = 0.0;
  double critic_value = 0.0;
  double critic_loss = 0.0;
  double mean_agent_loss = 0.0;
  std::size_t n_selected = 0;
  bool synced = false;
  bool refit = false;
  /// Only meaningful with debug checks enabled.
  bool targets_equal = true;
  bool memory_symmetric = true;
};

struct RunTrace {
  std::vector<StepTrace> steps;
  std::vector<std::uint64_t> sync_steps;
  std::vector<std::uint64_t> refit_steps;
  double baseline_performance = 0.0;
};

/// Per-step detail handed to an optional observer.
struct StepRecord {
  std::uint64_t step = 0;
  /// Candidate pool, indexed like `actions`.
  const std::vector<std::string>* genes = nullptr;
  std::vector<int> actions;
  double performance = 0.0;
  /// Directly evaluated flip performances (exact-flip mode only).
  std::vector<double> flip_performance;
  RewardBreakdown rewards;
};

struct SelectionResult {
  std::vector<std::string> pool;
  PrefilterResult prefilter;
  Vector importance;
  IndexList ranking;
  std::vector<std::string> ranked_genes;
  std::vector<std::string> selected;
  RunTrace trace;
};

struct RunOptions {
  /// Reuses a stage-one result computed on the same training data.
  const PrefilterResult* prefilter = nullptr;
  std::function<void(const StepRecord&)> on_step;
  std::filesystem::path edge_dump;
  std::filesystem::path synergy_dump;
  std::filesystem::path checkpoint;
  std::unique_ptr<Classifier> classifier;
};

/// Stage one exactly as select_genes runs it (k and seed stream from `config`).
PrefilterResult prefilter_for(const RunConfig& config, const ExpressionDataset& train, const PathwayDB& db);

/// Runs both stages on the training side only.
SelectionResult select_genes(const RunConfig& config, const ExpressionDataset& train, const PathwayDB& db,
                             RunOptions options = {});

struct EvaluationReport {
  std::size_t n_genes = 0;
  double holdout_auc = 0.0;
  double holdout_sd = 0.0;
  double cv_auc = 0.0;
  std::vector<double> holdout_runs;
};

/// Forest on train restricted to `genes`, AUC on test; `repeats` > 1 reruns
/// with seeds derive_seed(seed, r) and reports mean and population sd.
EvaluationReport evaluate(const std::vector<std::string>& genes, const ExpressionDataset& train,
                          const ExpressionDataset& test, std::uint64_t seed, std::size_t n_trees = 100,
                          std::size_t repeats = 1, std::size_t cv_folds = 5);

struct RankedResult {
  Split split;
  SelectionResult selection;
  EvaluationReport evaluation;
};

/// The stratified holdout split used by run().
Split holdout_split(const RunConfig& config, const ExpressionDataset& dataset);

/// Split first, select on train, evaluate on the untouched test side.
RankedResult run(const RunConfig& config, const ExpressionDataset& dataset, const PathwayDB& db,
                 RunOptions options = {});

// ---- planted-signal metrics ---------------------------------------------------

/// Fraction of `truth` contained in `genes` (0 when truth is empty).
double recovery(const std::vector<std::string>& genes, const std::set<std::string>& truth);

/// Number of `pathways` whose members (restricted to `dataset_genes`) are
/// covered by `genes` at a fraction >= threshold.
std::size_t covered_pathways(const std::vector<std::string>& genes, const PathwayDB& db,
                             const std::set<std::string>& pathways,
                             const std::vector<std::string>& dataset_genes, double threshold = 0.5);

// ---- artifacts ---------------------------------------------------------------

/// gene, weight, rank (1-based), selected.
void write_ranked_tsv(const SelectionResult& r, const std::filesystem::path& path);
void write_trace_tsv(const RunTrace& trace, const std::filesystem::path& path);
/// Expression of `genes`, samples ordered by label (stable).
void write_heatmap_csv(const ExpressionDataset& ds, const std::vector<std::string>& genes,
                       const std::filesystem::path& path);
void write_result_json(const RunConfig& config, const RankedResult& result, const std::filesystem::path& path);
/// Observer writing step, gene, a_i, delta_i, u_i, dphi_i, dpsi_i, r_i rows.
std::function<void(const StepRecord&)> reward_logger(std::shared_ptr<std::ostream> out);

}  // namespace pathmarl
