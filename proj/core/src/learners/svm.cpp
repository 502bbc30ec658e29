#include "pathmarl/learners/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathmarl/errors.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

Vector svm_rank_scores(const Matrix& x, const Labels& y, const SvmParams& params,
                       std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("svm: shape mismatch");
  if (params.lambda <= 0.0) throw ValidationError("svm: lambda must be positive");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  // Standardize; zero-variance columns become all-zero.
  Matrix z(n, d + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
    if (sd > 0.0)
      z.col(j) = (x.col(j).array() - mean) / sd;
    else
      z.col(j).setZero();
  }
  z.col(d).setOnes();  // bias column, regularized like the rest

  Vector w = Vector::Zero(d + 1);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5f3));
  const double radius = 1.0 / std::sqrt(params.lambda);
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (params.lambda * static_cast<double>(t));
      const double sign = y[i] == 1 ? 1.0 : -1.0;
      const auto row = z.row(static_cast<Eigen::Index>(i));
      const double margin = sign * row.dot(w);
      w *= 1.0 - eta * params.lambda;
      if (margin < 1.0) w += eta * sign * row.transpose();
      const double norm = w.norm();
      if (norm > radius) w *= radius / norm;
    }
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sign = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - sign * z.row(i).dot(w));
    }
    const double objective =
        0.5 * params.lambda * w.squaredNorm() + (n > 0 ? hinge / static_cast<double>(n) : 0.0);
    if (!std::isfinite(objective)) throw NumericalError("learners.svm", "hinge objective is not finite");
  }
  return w.head(d).cwiseAbs();
}

}  // namespace pathmarl
