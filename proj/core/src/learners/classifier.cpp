#include "pathmarl/learners/classifier.hpp"

#include <limits>

#include "pathmarl/errors.hpp"
#include "pathmarl/learners/metrics.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

namespace {

bool has_both_classes(const Labels& y) {
  bool zero = false;
  bool one = false;
  for (int v : y) (v == 0 ? zero : one) = true;
  return zero && one;
}

void gather(const Matrix& x, const Labels& y, const IndexList& idx, Matrix& xs, Labels& ys) {
  xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  ys.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
    ys[i] = y[idx[i]];
  }
}

}  // namespace

void ForestClassifier::fit(const Matrix& x, const Labels& y, std::uint64_t seed) {
  model_ = rf_fit(x, y, params_, seed);
}

Vector ForestClassifier::predict_proba(const Matrix& x) const { return rf_predict_proba(model_, x); }

double cross_validated_auc(const Classifier& prototype, const Matrix& x, const Labels& y,
                           const std::vector<Split>& folds, std::uint64_t seed) {
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Matrix xtr, xte;
    Labels ytr, yte;
    gather(x, y, folds[f].train_idx, xtr, ytr);
    gather(x, y, folds[f].test_idx, xte, yte);
    if (!has_both_classes(ytr) || !has_both_classes(yte)) continue;
    auto model = prototype.clone();
    model->fit(xtr, ytr, derive_seed(seed, f));
    total += auc(model->predict_proba(xte), yte);
    ++used;
  }
  return used == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(used);
}

double holdout_auc(const Classifier& prototype, const Matrix& x_train, const Labels& y_train,
                   const Matrix& x_test, const Labels& y_test, std::uint64_t seed) {
  if (!has_both_classes(y_test)) throw ValidationError("evaluate: test set has a single class");
  if (!has_both_classes(y_train)) throw ValidationError("evaluate: train set has a single class");
  auto model = prototype.clone();
  model->fit(x_train, y_train, seed);
  return auc(model->predict_proba(x_test), y_test);
}

}  // namespace pathmarl
