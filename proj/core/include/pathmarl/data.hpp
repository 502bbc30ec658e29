#pragma once

// Expression matrices, pathway gene sets, stratified splits and the
// planted-signal generator used for end-to-end checks.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace pathmarl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;

/// Samples x genes expression matrix with binary labels.
///
/// Immutable after construction: the constructor validates shape, id
/// uniqueness, label domain and finiteness, and throws ValidationError.
class ExpressionDataset {
 public:
  ExpressionDataset() = default;
  ExpressionDataset(std::vector<std::string> genes, std::vector<std::string> samples, Matrix x,
                    Labels y);

  const std::vector<std::string>& genes() const noexcept { return genes_; }
  const std::vector<std::string>& samples() const noexcept { return samples_; }
  const Matrix& x() const noexcept { return x_; }
  const Labels& y() const noexcept { return y_; }

  std::size_t n_samples() const noexcept { return samples_.size(); }
  std::size_t n_genes() const noexcept { return genes_.size(); }

  /// Column index of a gene id, if present.
  std::optional<std::size_t> gene_index(const std::string& gene) const;

  ExpressionDataset subset_samples(std::span<const std::size_t> rows) const;
  ExpressionDataset subset_genes(std::span<const std::size_t> cols) const;

  /// Number of samples per class {n0, n1}.
  std::array<std::size_t, 2> class_counts() const noexcept;

 private:
  std::vector<std::string> genes_;
  std::vector<std::string> samples_;
  Matrix x_;
  Labels y_;
  std::map<std::string, std::size_t> gene_lookup_;
};

/// Pathway-id -> gene set, with the inverted gene -> pathway index kept in sync.
class PathwayDB {
 public:
  using GeneSet = std::set<std::string>;

  PathwayDB() = default;

  /// Throws ValidationError on duplicate id or empty gene set.
  void add(const std::string& pathway_id, const GeneSet& genes, std::string description = {});

  const std::map<std::string, GeneSet>& pathways() const noexcept { return pathways_; }
  const std::map<std::string, GeneSet>& gene_index() const noexcept { return gene_index_; }
  const std::string& description(const std::string& pathway_id) const;

  /// Pathways containing `gene`; empty set for unmapped genes.
  const GeneSet& pathways_of(const std::string& gene) const;

  std::size_t size() const noexcept { return pathways_.size(); }
  bool empty() const noexcept { return pathways_.empty(); }

 private:
  std::map<std::string, GeneSet> pathways_;
  std::map<std::string, GeneSet> gene_index_;
  std::map<std::string, std::string> descriptions_;
};

struct Split {
  IndexList train_idx;
  IndexList test_idx;
  std::uint64_t seed = 0;
};

struct SyntheticTruth {
  std::set<std::string> informative_genes;
  std::set<std::string> informative_pathways;
  double effect_size = 0.0;
};

struct SyntheticParams {
  std::size_t n_samples = 300;
  std::size_t n_genes = 400;
  std::size_t n_pathways = 20;
  std::size_t genes_per_pathway = 20;
  std::size_t n_informative_pathways = 2;
  double effect_size = 2.0;
  std::uint64_t seed = 0;
  /// Allow pathways to share genes when n_pathways * genes_per_pathway > n_genes.
  bool allow_overlap = false;
};

struct SyntheticData {
  ExpressionDataset dataset;
  PathwayDB pathways;
  SyntheticTruth truth;
};

// ---- ingestion -------------------------------------------------------------

/// CSV: optional leading "sample_id" column, gene columns, trailing "label".
ExpressionDataset load_expression(const std::filesystem::path& path);
void save_expression(const ExpressionDataset& ds, const std::filesystem::path& path);

/// GMT: pathway-id TAB description TAB gene...
PathwayDB load_pathways(const std::filesystem::path& path);
void save_pathways(const PathwayDB& db, const std::filesystem::path& path);

// ---- splitting -------------------------------------------------------------

/// Stratified holdout split; per-class test counts by largest remainder.
Split make_split(const ExpressionDataset& ds, double test_fraction, std::uint64_t seed);

/// Stratified k-fold partition of sample indices.
std::vector<Split> make_folds(const ExpressionDataset& ds, std::size_t k, std::uint64_t seed);
std::vector<Split> make_folds(const Labels& y, std::size_t k, std::uint64_t seed);

// ---- synthetic -------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticParams& params);

void save_truth(const SyntheticTruth& truth, const std::filesystem::path& path);
SyntheticTruth load_truth(const std::filesystem::path& path);

}  // namespace pathmarl
