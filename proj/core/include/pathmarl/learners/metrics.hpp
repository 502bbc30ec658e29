#pragma once

#include <span>

#include "pathmarl/data.hpp"

namespace pathmarl {

/// ROC AUC via the Mann-Whitney rank statistic; tied scores contribute 1/2.
/// Throws ValidationError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);
double auc(const Vector& scores, const Labels& labels);

}  // namespace pathmarl
