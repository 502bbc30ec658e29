#pragma once

#include <cstdint>
#include <vector>

#include "pathmarl/learners/tree.hpp"

namespace pathmarl {

struct ForestParams {
  std::size_t n_trees = 100;
  /// 0 selects the default: floor(sqrt(d)) for classification, max(1, d/3) for regression.
  std::size_t max_features = 0;
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_trees = 0;
  std::size_t n_features = 0;
  TreeTask task = TreeTask::kClassification;
  /// Impurity-based, non-negative, sums to 1 when any tree split.
  Vector feature_importances;
  std::uint64_t seed = 0;
};

/// Bootstrapped Gini forest. Tree t draws from stream derive_seed(seed, t),
/// so the fitted model does not depend on tree build order.
RandomForestModel rf_fit(const Matrix& x, const Labels& y, const ForestParams& params,
                         std::uint64_t seed);
RandomForestModel rf_fit(const Matrix& x, const Labels& y, std::size_t n_trees, std::uint64_t seed);

/// Mean of per-tree leaf class-1 frequencies.
Vector rf_predict_proba(const RandomForestModel& model, const Matrix& x);
const Vector& rf_importances(const RandomForestModel& model);

RandomForestModel rf_regressor_fit(const Matrix& x, const Vector& y, const ForestParams& params,
                                   std::uint64_t seed);
Vector rf_predict(const RandomForestModel& model, const Matrix& x);

/// Mean holdout AUC of a forest over `folds` (indices into x/y). Folds whose
/// train or test side is single-class are skipped; NaN if all are skipped.
double forest_cv_auc(const Matrix& x, const Labels& y, const std::vector<Split>& folds,
                     const ForestParams& params, std::uint64_t seed);

}  // namespace pathmarl
