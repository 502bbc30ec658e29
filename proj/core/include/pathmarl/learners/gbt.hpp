#pragma once

#include <cstdint>
#include <vector>

#include "pathmarl/learners/tree.hpp"

namespace pathmarl {

struct GbtParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
};

/// Squared-error gradient boosting: prediction = base + lr * sum(tree_t).
struct GBTRegressor {
  double base_value = 0.0;
  double learning_rate = 0.0;
  std::vector<DecisionTree> trees;
};

GBTRegressor gbt_fit(const Matrix& x, const Vector& y, const GbtParams& params, std::uint64_t seed);
Vector gbt_predict(const GBTRegressor& model, const Matrix& x);

}  // namespace pathmarl
