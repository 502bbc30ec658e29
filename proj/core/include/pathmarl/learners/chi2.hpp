#pragma once

#include "pathmarl/data.hpp"

namespace pathmarl {

/// Per-column chi-squared association with the label.
///
/// Each column is min-max scaled to [0,1] and cut into `bins` equal-width
/// bins; the score is Pearson's statistic on the bins x 2 contingency table.
/// Constant columns score 0.
Vector chi2_scores(const Matrix& x, const Labels& y, int bins = 4);

}  // namespace pathmarl
