#include "pathmarl/learners/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "pathmarl/errors.hpp"

namespace pathmarl {

struct DecisionTree::Builder {
  const Matrix& x;
  std::span<const double> y;
  const TreeParams& params;
  Rng& rng;
  std::vector<Node>& nodes;
  Vector& importance;
  std::vector<std::pair<double, double>> scratch;
  std::vector<std::size_t> features;

  // n * impurity of a node with target sum s, squared sum sq, count n.
  double node_cost(double s, double sq, double n) const {
    if (n <= 0.0) return 0.0;
    if (params.task == TreeTask::kClassification) return 2.0 * s * (n - s) / n;
    return std::max(0.0, sq - s * s / n);
  }

  int build(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double s = 0.0;
    double sq = 0.0;
    for (std::size_t r : rows) {
      s += y[r];
      sq += y[r] * y[r];
    }
    const double n = static_cast<double>(rows.size());
    nodes[static_cast<std::size_t>(id)].value = s / n;
    const double cost = node_cost(s, sq, n);

    const bool depth_limited = params.max_depth != 0 && depth >= params.max_depth;
    if (rows.size() < std::max<std::size_t>(2, params.min_samples_split) || depth_limited ||
        cost <= 1e-12 * std::max(1.0, n))
      return id;

    const std::size_t d = static_cast<std::size_t>(x.cols());
    const std::size_t wanted = params.max_features == 0 ? d : std::min(params.max_features, d);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;

    // Draw features without replacement; constant features do not count
    // toward the per-split budget.
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t k = 0; k < d && evaluated < wanted; ++k) {
      const std::size_t pick = k + uniform_index(rng, d - k);
      std::swap(features[k], features[pick]);
      const std::size_t f = features[k];

      scratch.clear();
      for (std::size_t r : rows)
        scratch.emplace_back(x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)), y[r]);
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (scratch.front().first == scratch.back().first) continue;
      ++evaluated;

      double sl = 0.0;
      double sql = 0.0;
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        sl += scratch[i].second;
        sql += scratch[i].second * scratch[i].second;
        if (scratch[i].first == scratch[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double c = node_cost(sl, sql, nl) + node_cost(s - sl, sq - sql, n - nl);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (scratch[i].first + scratch[i + 1].first);
          if (!(mid < scratch[i + 1].first)) mid = scratch[i].first;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    importance(best_feature) += std::max(0.0, cost - best_cost);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (std::size_t r : rows) {
      if (x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[static_cast<std::size_t>(id)].feature = best_feature;
    nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

void DecisionTree::fit(const Matrix& x, std::span<const double> y,
                       std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
  if (x.rows() == 0 || x.cols() == 0 || rows.empty()) throw ValidationError("tree: empty input");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("tree: shape mismatch");
  nodes_.clear();
  importance_ = Vector::Zero(x.cols());
  Builder b{x, y, params, rng, nodes_, importance_, {}, std::vector<std::size_t>(static_cast<std::size_t>(x.cols()))};
  b.scratch.reserve(rows.size());
  std::vector<std::size_t> root(rows.begin(), rows.end());
  b.build(root, 0);
}

double DecisionTree::predict_row(const Matrix& x, Eigen::Index row) const {
  std::size_t node = 0;
  while (nodes_[node].feature >= 0) {
    const Node& n = nodes_[node];
    node = static_cast<std::size_t>(x(row, n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes_[node].value;
}

Vector DecisionTree::predict(const Matrix& x) const {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x, i);
  return out;
}

}  // namespace pathmarl
