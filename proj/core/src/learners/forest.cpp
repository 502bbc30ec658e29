#include "pathmarl/learners/forest.hpp"

#include <cmath>
#include <limits>

#include "pathmarl/errors.hpp"
#include "pathmarl/learners/metrics.hpp"

namespace pathmarl {

namespace {

RandomForestModel fit_forest(const Matrix& x, std::span<const double> y, TreeTask task,
                             const ForestParams& params, std::uint64_t seed) {
  if (x.rows() == 0 || x.cols() == 0) throw ValidationError("random forest: empty input");
  if (params.n_trees == 0) throw ValidationError("random forest: n_trees must be >= 1");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());

  TreeParams tp;
  tp.task = task;
  tp.max_depth = params.max_depth;
  tp.min_samples_split = params.min_samples_split;
  if (params.max_features != 0) {
    tp.max_features = params.max_features;
  } else if (task == TreeTask::kClassification) {
    tp.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  } else {
    tp.max_features = std::max<std::size_t>(1, d / 3);
  }

  RandomForestModel model;
  model.n_trees = params.n_trees;
  model.n_features = d;
  model.task = task;
  model.seed = seed;
  model.trees.resize(params.n_trees);
  model.feature_importances = Vector::Zero(x.cols());

  std::vector<std::size_t> rows(n);
  std::size_t split_trees = 0;
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, t));
    for (std::size_t i = 0; i < n; ++i) rows[i] = params.bootstrap ? uniform_index(rng, n) : i;
    model.trees[t].fit(x, y, rows, tp, rng);
    const Vector& dec = model.trees[t].impurity_decrease();
    const double total = dec.sum();
    if (total > 0.0) {
      model.feature_importances += dec / total;
      ++split_trees;
    }
  }
  const double total = model.feature_importances.sum();
  if (split_trees > 0 && total > 0.0) model.feature_importances /= total;
  return model;
}

}  // namespace

RandomForestModel rf_fit(const Matrix& x, const Labels& y, const ForestParams& params,
                         std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("rf_fit: shape mismatch");
  bool has0 = false;
  bool has1 = false;
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ValidationError("rf_fit: labels must be 0 or 1");
    has0 |= y[i] == 0;
    has1 |= y[i] == 1;
    target[i] = y[i];
  }
  if (x.rows() > 0 && !(has0 && has1)) throw ValidationError("rf_fit: both classes must be present");
  return fit_forest(x, target, TreeTask::kClassification, params, seed);
}

RandomForestModel rf_fit(const Matrix& x, const Labels& y, std::size_t n_trees, std::uint64_t seed) {
  ForestParams p;
  p.n_trees = n_trees;
  return rf_fit(x, y, p, seed);
}

Vector rf_predict_proba(const RandomForestModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features)
    throw ValidationError("rf_predict_proba: feature count mismatch");
  Vector out = Vector::Zero(x.rows());
  for (const auto& tree : model.trees) out += tree.predict(x);
  return out / static_cast<double>(model.trees.size());
}

const Vector& rf_importances(const RandomForestModel& model) { return model.feature_importances; }

RandomForestModel rf_regressor_fit(const Matrix& x, const Vector& y, const ForestParams& params,
                                   std::uint64_t seed) {
  if (x.rows() != y.size()) throw ValidationError("rf_regressor_fit: shape mismatch");
  if (!y.allFinite()) throw ValidationError("rf_regressor_fit: non-finite targets");
  return fit_forest(x, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                    TreeTask::kRegression, params, seed);
}

Vector rf_predict(const RandomForestModel& model, const Matrix& x) {
  return rf_predict_proba(model, x);
}

double forest_cv_auc(const Matrix& x, const Labels& y, const std::vector<Split>& folds,
                     const ForestParams& params, std::uint64_t seed) {
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Split& fold = folds[f];
    auto gather = [&](const IndexList& idx, Matrix& xs, Labels& ys) {
      xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
      ys.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
        ys[i] = y[idx[i]];
      }
    };
    Matrix xtr, xte;
    Labels ytr, yte;
    gather(fold.train_idx, xtr, ytr);
    gather(fold.test_idx, xte, yte);
    auto both = [](const Labels& l) {
      bool a = false, b = false;
      for (int v : l) (v == 0 ? a : b) = true;
      return a && b;
    };
    if (!both(ytr) || !both(yte)) continue;
    const auto model = rf_fit(xtr, ytr, params, derive_seed(seed, f));
    total += auc(rf_predict_proba(model, xte), yte);
    ++used;
  }
  return used == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(used);
}

}  // namespace pathmarl
