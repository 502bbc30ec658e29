#include "pathmarl/prefilter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include "pathmarl/errors.hpp"
#include "pathmarl/learners/chi2.hpp"
#include "pathmarl/learners/forest.hpp"

namespace pathmarl {

namespace {

/// Indices of the `n` largest entries, ties by ascending index.
IndexList top_indices(const Vector& v, std::size_t n) {
  IndexList order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v(static_cast<Eigen::Index>(a)) > v(static_cast<Eigen::Index>(b));
  });
  order.resize(std::min(n, order.size()));
  return order;
}

Matrix gather_columns(const Matrix& x, const IndexList& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

}  // namespace

std::vector<std::string> PrefilterResult::selected_genes() const {
  std::vector<std::string> out;
  out.reserve(selected.size());
  for (std::size_t i : selected) out.push_back(genes[i]);
  return out;
}

Vector minmax_normalize(const Vector& v) {
  if (v.size() == 0) return v;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi > lo)) return Vector::Zero(v.size());
  return (v.array() - lo) / (hi - lo);
}

std::vector<double> method_weights(std::span<const double> performance, bool* fallback) {
  std::vector<double> w(performance.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < performance.size(); ++i) {
    const double p = performance[i];
    w[i] = std::isfinite(p) && p > 0.0 ? p : 0.0;
    total += w[i];
  }
  if (fallback) *fallback = false;
  if (total <= 0.0) {
    if (fallback) *fallback = true;
    std::fill(w.begin(), w.end(), performance.empty() ? 0.0 : 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (double& x : w) x /= total;
  return w;
}

MethodScoreTable score_methods(const ExpressionDataset& train, const std::vector<Split>& folds,
                               const PrefilterParams& params, std::uint64_t seed) {
  if (folds.size() < 2) throw ValidationError("score_methods: need at least 2 folds");
  const Matrix& x = train.x();
  const Labels& y = train.y();

  MethodScoreTable table;
  table.methods = {"chi2", "random_forest", "svm"};
  table.raw_scores.push_back(chi2_scores(x, y, params.chi2_bins));
  ForestParams fp;
  fp.n_trees = params.n_trees;
  table.raw_scores.push_back(rf_importances(rf_fit(x, y, fp, derive_seed(seed, 1))));
  table.raw_scores.push_back(svm_rank_scores(x, y, params.svm, derive_seed(seed, 2)));

  const std::size_t top = std::min(params.top_n, train.n_genes());
  for (std::size_t m = 0; m < table.raw_scores.size(); ++m) {
    table.scores.push_back(minmax_normalize(table.raw_scores[m]));
    const Matrix sub = gather_columns(x, top_indices(table.scores[m], top));
    table.performance.push_back(forest_cv_auc(sub, y, folds, fp, derive_seed(seed, 10 + m)));
  }
  table.weights = method_weights(table.performance, &table.equal_weight_fallback);
  if (table.equal_weight_fallback)
    std::clog << "warning: all method performances are zero; using equal weights\n";
  return table;
}

PathwayPerfTable pathway_performance(const ExpressionDataset& train, const PathwayDB& db,
                                     const PrefilterParams& params, std::uint64_t seed) {
  PathwayPerfTable out;
  const auto folds = make_folds(train, params.cv_folds, derive_seed(seed, params.pathway_seed_offset));
  ForestParams fp;
  fp.n_trees = params.n_trees;
  for (const auto& [id, members] : db.pathways()) {
    IndexList cols;
    for (const auto& g : members) {
      if (auto j = train.gene_index(g)) cols.push_back(*j);
    }
    if (cols.empty()) continue;
    std::sort(cols.begin(), cols.end());
    const double score = forest_cv_auc(gather_columns(train.x(), cols), train.y(), folds, fp,
                                       derive_seed(seed, stable_hash(id)));
    if (std::isfinite(score)) out.scores.emplace(id, score);
  }
  return out;
}

PrefilterResult integrative_scores(const MethodScoreTable& table, const PathwayPerfTable& pperf,
                                   const PathwayDB& db, const std::vector<std::string>& genes,
                                   double beta, std::size_t k, double min_fraction) {
  const auto d = static_cast<Eigen::Index>(genes.size());
  if (table.scores.size() != table.weights.size())
    throw ValidationError("integrative_scores: one weight per method required");
  for (const auto& s : table.scores) {
    if (s.size() != d) throw ValidationError("integrative_scores: score length mismatch");
  }

  PrefilterResult r;
  r.genes = genes;
  r.meta_scores = Vector::Zero(d);
  for (std::size_t m = 0; m < table.scores.size(); ++m) r.meta_scores += table.weights[m] * table.scores[m];

  r.pathway_means = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  r.adjusted_scores = r.meta_scores;
  for (Eigen::Index g = 0; g < d; ++g) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& pid : db.pathways_of(genes[static_cast<std::size_t>(g)])) {
      auto it = pperf.scores.find(pid);
      if (it == pperf.scores.end()) continue;
      total += it->second;
      ++count;
    }
    if (count == 0) continue;
    const double mean = total / static_cast<double>(count);
    r.pathway_means(g) = mean;
    r.adjusted_scores(g) = r.meta_scores(g) * (1.0 + beta * std::log1p(mean));
  }

  if (d == 0) return r;
  r.mean = r.adjusted_scores.mean();
  r.sd = std::sqrt((r.adjusted_scores.array() - r.mean).square().mean());
  r.threshold = r.mean + 2.0 * r.sd;
  for (Eigen::Index g = 0; g < d; ++g) {
    if (r.adjusted_scores(g) > r.threshold) r.selected.push_back(static_cast<std::size_t>(g));
  }

  const auto floor_count = static_cast<std::size_t>(std::floor(min_fraction * static_cast<double>(d)));
  if (r.selected.size() < floor_count || r.selected.size() < 2 * k) {
    r.fallback_used = true;
    r.selected = top_indices(r.adjusted_scores, std::max(2 * k, floor_count));
    std::sort(r.selected.begin(), r.selected.end());
  }
  return r;
}

PrefilterResult run_prefilter(const ExpressionDataset& train, const PathwayDB& db,
                              const PrefilterParams& params, std::uint64_t seed) {
  const auto folds = make_folds(train, params.cv_folds, derive_seed(seed, 0xc5));
  const auto table = score_methods(train, folds, params, seed);
  const auto pperf = pathway_performance(train, db, params, seed);
  return integrative_scores(table, pperf, db, train.genes(), params.beta, params.k,
                            params.min_fraction);
}

void write_prefilter_tsv(const PrefilterResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  std::vector<bool> selected(result.genes.size(), false);
  for (std::size_t i : result.selected) selected[i] = true;
  out << "gene\tmeta_score\tpathway_mean\tadjusted_score\tselected\n";
  out.precision(17);
  for (std::size_t g = 0; g < result.genes.size(); ++g) {
    const auto i = static_cast<Eigen::Index>(g);
    out << result.genes[g] << '\t' << result.meta_scores(i) << '\t';
    if (std::isfinite(result.pathway_means(i)))
      out << result.pathway_means(i);
    else
      out << "NA";
    out << '\t' << result.adjusted_scores(i) << '\t' << (selected[g] ? 1 : 0) << '\n';
  }
}

}  // namespace pathmarl
