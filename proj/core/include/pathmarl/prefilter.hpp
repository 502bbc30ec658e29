#pragma once

// Stage one: statistical scoring weighted by method performance, boosted by
// pathway-level classifier performance, thresholded at mean + 2 sd.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/svm.hpp"

namespace pathmarl {

struct PrefilterParams {
  /// Pathway bonus scaling (beta_prefilter).
  double beta = 0.2;
  std::size_t n_trees = 100;
  /// Genes per method used to measure that method's performance.
  std::size_t top_n = 100;
  std::size_t cv_folds = 5;
  int chi2_bins = 4;
  SvmParams svm{};
  std::uint64_t pathway_seed_offset = 0x9a7;
  /// Fallback floor as a fraction of |G|.
  double min_fraction = 0.02;
  /// Final selection size; the fallback pool is at least 2k.
  std::size_t k = 100;
};

struct MethodScoreTable {
  std::vector<std::string> methods;
  std::vector<Vector> raw_scores;
  /// Per-method min-max normalized scores S_i in [0,1].
  std::vector<Vector> scores;
  std::vector<double> performance;
  std::vector<double> weights;
  bool equal_weight_fallback = false;
};

struct PathwayPerfTable {
  std::map<std::string, double> scores;
};

struct PrefilterResult {
  std::vector<std::string> genes;
  Vector meta_scores;
  /// Mean performance of scored pathways containing the gene; NaN if none.
  Vector pathway_means;
  Vector adjusted_scores;
  double mean = 0.0;
  double sd = 0.0;
  double threshold = 0.0;
  bool fallback_used = false;
  /// Indices into `genes`, ascending.
  IndexList selected;

  std::vector<std::string> selected_genes() const;
};

/// Min-max scaling to [0,1]; constant vectors map to 0.
Vector minmax_normalize(const Vector& v);

/// w_i = perf_i / sum_j perf_j. Non-finite or negative performance counts as
/// 0; if everything is 0 the weights are equal and `fallback` is set.
std::vector<double> method_weights(std::span<const double> performance, bool* fallback = nullptr);

MethodScoreTable score_methods(const ExpressionDataset& train, const std::vector<Split>& folds,
                               const PrefilterParams& params, std::uint64_t seed);

/// Mean k-fold CV AUC of a forest restricted to each pathway's genes.
/// Pathways with no gene in the dataset, or with every fold skipped, are absent.
PathwayPerfTable pathway_performance(const ExpressionDataset& train, const PathwayDB& db,
                                     const PrefilterParams& params, std::uint64_t seed);

PrefilterResult integrative_scores(const MethodScoreTable& table, const PathwayPerfTable& pperf,
                                   const PathwayDB& db, const std::vector<std::string>& genes,
                                   double beta, std::size_t k, double min_fraction = 0.02);

/// The full stage: folds, method scores, pathway scores, thresholding.
PrefilterResult run_prefilter(const ExpressionDataset& train, const PathwayDB& db,
                              const PrefilterParams& params, std::uint64_t seed);

/// TSV columns: gene, meta_score, pathway_mean, adjusted_score, selected.
void write_prefilter_tsv(const PrefilterResult& result, const std::filesystem::path& path);

}  // namespace pathmarl
