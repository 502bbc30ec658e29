#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "pathmarl/data.hpp"
#include "pathmarl/prefilter.hpp"

using namespace pathmarl;

namespace {

PathwayDB toy_db() {
  PathwayDB db;
  db.add("p1", {"a", "b"});
  db.add("p2", {"b", "c"});
  db.add("p3", {"zz"});
  return db;
}

}  // namespace

TEST(Prefilter, MinmaxNormalize) {
  Vector v(4);
  v << 2, 4, 6, 10;
  const Vector n = minmax_normalize(v);
  EXPECT_DOUBLE_EQ(n(0), 0.0);
  EXPECT_DOUBLE_EQ(n(1), 0.25);
  EXPECT_DOUBLE_EQ(n(3), 1.0);
  EXPECT_TRUE(minmax_normalize(Vector::Constant(3, 7.0)).isZero());
}

TEST(Prefilter, MethodWeightsProportionalToPerformance) {
  bool fallback = true;
  const auto w = method_weights(std::vector<double>{0.9, 0.6, 0.75}, &fallback);
  EXPECT_FALSE(fallback);
  EXPECT_NEAR(w[0], 0.4, 1e-12);
  EXPECT_NEAR(w[1], 0.6 / 2.25, 1e-12);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);

  const auto z = method_weights(std::vector<double>{0.0, std::nan(""), -1.0}, &fallback);
  EXPECT_TRUE(fallback);
  for (double x : z) EXPECT_NEAR(x, 1.0 / 3.0, 1e-12);
}

TEST(Prefilter, IntegrativeScoresMatchHandComputation) {
  MethodScoreTable t;
  t.scores = {Vector(4), Vector(4)};
  t.scores[0] << 1.0, 0.5, 0.0, 0.2;
  t.scores[1] << 0.0, 1.0, 0.5, 0.4;
  t.weights = {0.25, 0.75};
  PathwayPerfTable pp;
  pp.scores = {{"p1", 0.8}, {"p2", 0.6}};
  const std::vector<std::string> genes{"a", "b", "c", "d"};
  const auto r = integrative_scores(t, pp, toy_db(), genes, 0.2, 1, 0.0);

  const double meta[4] = {0.25, 0.875, 0.375, 0.35};
  const double pmean[3] = {0.8, 0.7, 0.6};
  for (int g = 0; g < 4; ++g) EXPECT_NEAR(r.meta_scores(g), meta[g], 1e-12);
  for (int g = 0; g < 3; ++g) {
    EXPECT_NEAR(r.pathway_means(g), pmean[g], 1e-12);
    EXPECT_NEAR(r.adjusted_scores(g), meta[g] * (1 + 0.2 * std::log(1 + pmean[g])), 1e-12);
  }
  EXPECT_TRUE(std::isnan(r.pathway_means(3)));
  EXPECT_DOUBLE_EQ(r.adjusted_scores(3), meta[3]);

  double mean = 0, sq = 0;
  for (int g = 0; g < 4; ++g) mean += r.adjusted_scores(g) / 4;
  for (int g = 0; g < 4; ++g) sq += std::pow(r.adjusted_scores(g) - mean, 2) / 4;
  EXPECT_NEAR(r.threshold, mean + 2 * std::sqrt(sq), 1e-12);
  // Nothing clears mean + 2 sd with 4 genes, so the top 2k fallback applies.
  EXPECT_TRUE(r.fallback_used);
  EXPECT_EQ(r.selected, (IndexList{1, 2}));
}

TEST(Prefilter, ThresholdSelectsOutliersWithoutFallback) {
  const std::size_t d = 200;
  MethodScoreTable t;
  t.scores = {Vector::Constant(d, 0.1)};
  for (std::size_t i = 0; i < 10; ++i) t.scores[0](static_cast<Eigen::Index>(i)) = 1.0;
  t.weights = {1.0};
  std::vector<std::string> genes;
  for (std::size_t i = 0; i < d; ++i) genes.push_back("g" + std::to_string(i));
  const auto r = integrative_scores(t, {}, PathwayDB{}, genes, 0.2, 2, 0.02);
  EXPECT_FALSE(r.fallback_used);
  EXPECT_EQ(r.selected.size(), 10u);
  for (std::size_t i : r.selected) EXPECT_GT(r.adjusted_scores(static_cast<Eigen::Index>(i)), r.threshold);
}

TEST(Prefilter, PathwayBonusIsMonotoneInBeta) {
  MethodScoreTable t;
  t.scores = {Vector::Constant(3, 0.5)};
  t.weights = {1.0};
  PathwayPerfTable pp;
  pp.scores = {{"p1", 0.9}};
  const std::vector<std::string> genes{"a", "c", "d"};
  double prev = -1;
  for (double beta : {0.0, 0.1, 0.2, 0.5}) {
    const auto r = integrative_scores(t, pp, toy_db(), genes, beta, 1, 0.0);
    EXPECT_GT(r.adjusted_scores(0), prev);
    prev = r.adjusted_scores(0);
    EXPECT_DOUBLE_EQ(r.adjusted_scores(2), 0.5);
  }
}

TEST(Prefilter, RunOnSyntheticKeepsInformativeGenes) {
  SyntheticParams sp;
  sp.n_samples = 120;
  sp.n_genes = 200;
  sp.n_pathways = 10;
  sp.seed = 3;
  const auto data = generate_synthetic(sp);
  PrefilterParams p;
  p.n_trees = 30;
  p.k = 20;
  const auto a = run_prefilter(data.dataset, data.pathways, p, 5);
  const auto b = run_prefilter(data.dataset, data.pathways, p, 5);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_TRUE(a.adjusted_scores == b.adjusted_scores);
  EXPECT_GE(a.selected.size(), 2 * p.k);
  EXPECT_TRUE(std::is_sorted(a.selected.begin(), a.selected.end()));

  const auto picked = a.selected_genes();
  std::size_t hits = 0;
  for (const auto& g : picked) hits += data.truth.informative_genes.count(g);
  EXPECT_GE(static_cast<double>(hits), 0.9 * static_cast<double>(data.truth.informative_genes.size()));

  const auto path = std::filesystem::temp_directory_path() / "pathmarl_prefilter.tsv";
  write_prefilter_tsv(a, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "gene\tmeta_score\tpathway_mean\tadjusted_score\tselected");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, data.dataset.n_genes());
}

TEST(Prefilter, ScoreMethodsProducesNormalizedScores) {
  SyntheticParams sp;
  sp.n_samples = 80;
  sp.n_genes = 60;
  sp.n_pathways = 3;
  sp.n_informative_pathways = 1;
  sp.seed = 8;
  const auto data = generate_synthetic(sp);
  PrefilterParams p;
  p.n_trees = 20;
  p.top_n = 10;
  const auto folds = make_folds(data.dataset, 5, 1);
  const auto t = score_methods(data.dataset, folds, p, 2);
  ASSERT_EQ(t.scores.size(), t.methods.size());
  ASSERT_EQ(t.weights.size(), t.methods.size());
  double wsum = 0;
  for (std::size_t m = 0; m < t.scores.size(); ++m) {
    EXPECT_NEAR(t.scores[m].minCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(t.scores[m].maxCoeff(), 1.0, 1e-12);
    EXPECT_GT(t.performance[m], 0.7);
    wsum += t.weights[m];
  }
  EXPECT_NEAR(wsum, 1.0, 1e-12);
}
