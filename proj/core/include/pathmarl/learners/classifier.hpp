#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/forest.hpp"

namespace pathmarl {

/// Downstream classifier used to score gene subsets.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& x, const Labels& y, std::uint64_t seed) = 0;
  /// P(y = 1) per row.
  virtual Vector predict_proba(const Matrix& x) const = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;
  virtual std::string name() const = 0;
};

class ForestClassifier final : public Classifier {
 public:
  explicit ForestClassifier(ForestParams params = {}) : params_(params) {}
  void fit(const Matrix& x, const Labels& y, std::uint64_t seed) override;
  Vector predict_proba(const Matrix& x) const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<ForestClassifier>(*this); }
  std::string name() const override { return "random_forest"; }

 private:
  ForestParams params_;
  RandomForestModel model_;
};

/// Mean holdout AUC over folds; fold f uses derive_seed(seed, f). Folds with a
/// single-class side are skipped; NaN if all are skipped.
double cross_validated_auc(const Classifier& prototype, const Matrix& x, const Labels& y,
                           const std::vector<Split>& folds, std::uint64_t seed);

/// Fit on (x_train, y_train), AUC on the test side. Throws on a single-class test set.
double holdout_auc(const Classifier& prototype, const Matrix& x_train, const Labels& y_train,
                   const Matrix& x_test, const Labels& y_test, std::uint64_t seed);

}  // namespace pathmarl
