#pragma once

#include <span>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

enum class TreeTask { kClassification, kRegression };

struct TreeParams {
  TreeTask task = TreeTask::kClassification;
  /// Features examined per split; 0 means all.
  std::size_t max_features = 0;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
};

/// Axis-aligned CART tree. Classification uses Gini impurity on {0,1}
/// targets and stores class-1 frequency at leaves; regression uses squared
/// error and stores the leaf mean.
class DecisionTree {
 public:
  /// Fits on `rows` of `x` (rows may repeat, e.g. a bootstrap draw).
  void fit(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
           const TreeParams& params, Rng& rng);

  double predict_row(const Matrix& x, Eigen::Index row) const;
  Vector predict(const Matrix& x) const;

  /// Total weighted impurity decrease per feature (not normalized).
  const Vector& impurity_decrease() const noexcept { return importance_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool has_split() const noexcept { return nodes_.size() > 1; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  struct Builder;

  std::vector<Node> nodes_;
  Vector importance_;
};

}  // namespace pathmarl
