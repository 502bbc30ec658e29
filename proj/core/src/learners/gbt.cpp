#include "pathmarl/learners/gbt.hpp"

#include <numeric>

#include "pathmarl/errors.hpp"

namespace pathmarl {

GBTRegressor gbt_fit(const Matrix& x, const Vector& y, const GbtParams& params, std::uint64_t seed) {
  if (x.rows() != y.size()) throw ValidationError("gbt_fit: shape mismatch");
  if (x.rows() == 0) throw ValidationError("gbt_fit: empty input");
  if (!y.allFinite()) throw ValidationError("gbt_fit: non-finite targets");

  GBTRegressor model;
  model.base_value = y.mean();
  model.learning_rate = params.learning_rate;
  if (params.learning_rate == 0.0 || x.cols() == 0) return model;

  TreeParams tp;
  tp.task = TreeTask::kRegression;
  tp.max_depth = params.max_depth;

  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Vector prediction = Vector::Constant(x.rows(), model.base_value);
  Vector residual(x.rows());
  model.trees.reserve(params.n_rounds);
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    residual = y - prediction;
    Rng rng(derive_seed(seed, round));
    DecisionTree tree;
    tree.fit(x, std::span<const double>(residual.data(), static_cast<std::size_t>(residual.size())),
             rows, tp, rng);
    prediction += params.learning_rate * tree.predict(x);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Vector gbt_predict(const GBTRegressor& model, const Matrix& x) {
  Vector out = Vector::Constant(x.rows(), model.base_value);
  for (const auto& tree : model.trees) out += model.learning_rate * tree.predict(x);
  return out;
}

}  // namespace pathmarl
