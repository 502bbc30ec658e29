#pragma once

#include <cstdint>

#include "pathmarl/data.hpp"

namespace pathmarl {

struct SvmParams {
  double lambda = 0.01;
  std::size_t epochs = 200;
};

/// Linear SVM ranking: columns are standardized, a hinge + L2 model is fit by
/// Pegasos-style subgradient descent, and gene g scores |w_g|.
/// Throws NumericalError if the objective becomes non-finite.
Vector svm_rank_scores(const Matrix& x, const Labels& y, const SvmParams& params,
                       std::uint64_t seed);

}  // namespace pathmarl
