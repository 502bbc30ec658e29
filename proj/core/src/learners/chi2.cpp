#include "pathmarl/learners/chi2.hpp"

#include <algorithm>
#include <vector>

#include "pathmarl/errors.hpp"

namespace pathmarl {

Vector chi2_scores(const Matrix& x, const Labels& y, int bins) {
  if (bins < 2) throw ValidationError("chi2: need at least 2 bins");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("chi2: shape mismatch");
  std::size_t n1 = 0;
  for (int l : y) n1 += l == 1 ? 1 : 0;
  const std::size_t n = y.size();
  if (n1 == 0 || n1 == n) throw ValidationError("chi2: both classes must be present");

  const auto nb = static_cast<std::size_t>(bins);
  const double class_total[2] = {static_cast<double>(n - n1), static_cast<double>(n1)};
  Vector scores = Vector::Zero(x.cols());
  std::vector<double> counts(nb * 2);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (!(hi > lo)) continue;
    std::fill(counts.begin(), counts.end(), 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double scaled = (col(i) - lo) / (hi - lo);
      auto b = static_cast<std::size_t>(scaled * static_cast<double>(nb));
      b = std::min(b, nb - 1);
      counts[b * 2 + static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] += 1.0;
    }
    double stat = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double row = counts[b * 2] + counts[b * 2 + 1];
      if (row == 0.0) continue;
      for (std::size_t c = 0; c < 2; ++c) {
        const double expected = row * class_total[c] / static_cast<double>(n);
        const double diff = counts[b * 2 + c] - expected;
        stat += diff * diff / expected;
      }
    }
    scores(j) = stat;
  }
  return scores;
}

}  // namespace pathmarl
