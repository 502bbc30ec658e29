#include "pathmarl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pathmarl/errors.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || t.empty())
    throw ParseError("cannot parse numeric cell '" + text + "'", line);
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

// ---- ExpressionDataset -----------------------------------------------------

ExpressionDataset::ExpressionDataset(std::vector<std::string> genes,
                                     std::vector<std::string> samples, Matrix x, Labels y)
    : genes_(std::move(genes)), samples_(std::move(samples)), x_(std::move(x)), y_(std::move(y)) {
  if (static_cast<std::size_t>(x_.cols()) != genes_.size())
    throw ValidationError("gene count does not match matrix columns");
  if (static_cast<std::size_t>(x_.rows()) != samples_.size() || samples_.size() != y_.size())
    throw ValidationError("sample count does not match matrix rows / labels");
  for (std::size_t j = 0; j < genes_.size(); ++j) {
    if (!gene_lookup_.emplace(genes_[j], j).second)
      throw ValidationError("duplicate gene id '" + genes_[j] + "'");
  }
  std::set<std::string> seen;
  for (const auto& s : samples_) {
    if (!seen.insert(s).second) throw ValidationError("duplicate sample id '" + s + "'");
  }
  for (int label : y_) {
    if (label != 0 && label != 1) throw ValidationError("labels must be 0 or 1");
  }
  if (!x_.allFinite()) throw ValidationError("expression matrix contains non-finite values");
}

std::optional<std::size_t> ExpressionDataset::gene_index(const std::string& gene) const {
  auto it = gene_lookup_.find(gene);
  if (it == gene_lookup_.end()) return std::nullopt;
  return it->second;
}

ExpressionDataset ExpressionDataset::subset_samples(std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), x_.cols());
  std::vector<std::string> samples;
  Labels y;
  samples.reserve(rows.size());
  y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(rows[r]));
    samples.push_back(samples_.at(rows[r]));
    y.push_back(y_[rows[r]]);
  }
  return ExpressionDataset(genes_, std::move(samples), std::move(x), std::move(y));
}

ExpressionDataset ExpressionDataset::subset_genes(std::span<const std::size_t> cols) const {
  Matrix x(x_.rows(), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> genes;
  genes.reserve(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = x_.col(static_cast<Eigen::Index>(cols[c]));
    genes.push_back(genes_.at(cols[c]));
  }
  return ExpressionDataset(std::move(genes), samples_, std::move(x), y_);
}

std::array<std::size_t, 2> ExpressionDataset::class_counts() const noexcept {
  std::array<std::size_t, 2> counts{0, 0};
  for (int label : y_) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

// ---- PathwayDB -------------------------------------------------------------

void PathwayDB::add(const std::string& pathway_id, const GeneSet& genes, std::string description) {
  if (genes.empty()) throw ValidationError("pathway '" + pathway_id + "' has no genes");
  if (pathways_.contains(pathway_id))
    throw ValidationError("duplicate pathway id '" + pathway_id + "'");
  pathways_.emplace(pathway_id, genes);
  descriptions_.emplace(pathway_id, std::move(description));
  for (const auto& g : genes) gene_index_[g].insert(pathway_id);
}

const std::string& PathwayDB::description(const std::string& pathway_id) const {
  return descriptions_.at(pathway_id);
}

const PathwayDB::GeneSet& PathwayDB::pathways_of(const std::string& gene) const {
  static const GeneSet kEmpty;
  auto it = gene_index_.find(gene);
  return it == gene_index_.end() ? kEmpty : it->second;
}

// ---- file formats ----------------------------------------------------------

ExpressionDataset load_expression(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open expression file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("expression file is empty", 1);
  strip_cr(line);
  auto header = split_line(line, ',');
  for (auto& h : header) h = trim(h);
  if (header.empty() || header.back() != "label")
    throw ParseError("last header column must be 'label'", 1);

  const bool has_ids = header.front() == "sample_id";
  const std::size_t first_gene = has_ids ? 1 : 0;
  if (header.size() < first_gene + 1) throw ParseError("header has no gene columns", 1);
  std::vector<std::string> genes(header.begin() + static_cast<std::ptrdiff_t>(first_gene),
                                 header.end() - 1);
  const std::size_t n_genes = genes.size();
  {
    std::set<std::string> seen;
    for (const auto& g : genes) {
      if (g.empty()) throw ParseError("empty gene id in header", 1);
      if (!seen.insert(g).second) throw ValidationError("duplicate gene id '" + g + "' in header");
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> samples;
  Labels y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    std::vector<double> values(n_genes);
    for (std::size_t j = 0; j < n_genes; ++j) {
      values[j] = parse_double(fields[first_gene + j], line_no);
      if (!std::isfinite(values[j]))
        throw ValidationError("non-finite expression value at line " + std::to_string(line_no));
    }
    const double label = parse_double(fields.back(), line_no);
    if (label != 0.0 && label != 1.0)
      throw ValidationError("label must be 0 or 1 at line " + std::to_string(line_no) + ", got '" +
                            trim(fields.back()) + "'");
    y.push_back(static_cast<int>(label));
    samples.push_back(has_ids ? trim(fields.front()) : "s" + std::to_string(rows.size()));
    rows.push_back(std::move(values));
  }

  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_genes));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n_genes; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return ExpressionDataset(std::move(genes), std::move(samples), std::move(x), std::move(y));
}

void save_expression(const ExpressionDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "sample_id";
  for (const auto& g : ds.genes()) out << ',' << g;
  out << ",label\n";
  for (std::size_t i = 0; i < ds.n_samples(); ++i) {
    out << ds.samples()[i];
    for (std::size_t j = 0; j < ds.n_genes(); ++j)
      out << ',' << format_double(ds.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << ',' << ds.y()[i] << '\n';
  }
}

PathwayDB load_pathways(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pathway file " + path.string());
  PathwayDB db;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (trim(line).empty()) continue;
    auto fields = split_line(line, '\t');
    if (fields.size() < 3) throw ParseError("GMT line needs id, description and >=1 gene", line_no);
    PathwayDB::GeneSet genes;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      auto g = trim(fields[f]);
      if (!g.empty()) genes.insert(std::move(g));
    }
    if (genes.empty()) throw ParseError("GMT line has no gene ids", line_no);
    const auto id = trim(fields[0]);
    if (id.empty()) throw ParseError("empty pathway id", line_no);
    if (db.pathways().contains(id))
      throw ValidationError("duplicate pathway id '" + id + "' at line " + std::to_string(line_no));
    db.add(id, genes, fields[1]);
  }
  return db;
}

void save_pathways(const PathwayDB& db, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& [id, genes] : db.pathways()) {
    const auto& desc = db.description(id);
    out << id << '\t' << (desc.empty() ? "na" : desc);
    for (const auto& g : genes) out << '\t' << g;
    out << '\n';
  }
}

// ---- splits ----------------------------------------------------------------

Split make_split(const ExpressionDataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("test_fraction must lie in (0,1)");
  if (ds.n_samples() < 4) throw ValidationError("split needs at least 4 samples");

  std::array<IndexList, 2> by_class;
  for (std::size_t i = 0; i < ds.n_samples(); ++i)
    by_class[static_cast<std::size_t>(ds.y()[i])].push_back(i);
  for (const auto& members : by_class) {
    if (members.size() < 2) throw ValidationError("each class needs at least 2 samples to split");
  }

  // Largest-remainder allocation of the rounded total across classes.
  const std::size_t total = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(ds.n_samples())));
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double exact = test_fraction * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  while (assigned < total) {
    const std::size_t c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }
  for (std::size_t c = 0; c < 2; ++c)
    quota[c] = std::clamp<std::size_t>(quota[c], 1, by_class[c].size() - 1);

  Rng rng(derive_seed(seed, 0x5e11));
  Split split;
  split.seed = seed;
  for (std::size_t c = 0; c < 2; ++c) {
    auto members = by_class[c];
    shuffle(members, rng);
    split.test_idx.insert(split.test_idx.end(), members.begin(),
                          members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    split.train_idx.insert(split.train_idx.end(),
                           members.begin() + static_cast<std::ptrdiff_t>(quota[c]), members.end());
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

std::vector<Split> make_folds(const Labels& y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold needs k >= 2");
  std::array<IndexList, 2> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ValidationError("labels must be 0 or 1");
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  }
  if (std::min(by_class[0].size(), by_class[1].size()) < k)
    throw ValidationError("k=" + std::to_string(k) + " exceeds the smaller class count");

  Rng rng(derive_seed(seed, 0xf01d));
  std::vector<std::size_t> fold_of(y.size());
  std::size_t position = 0;
  for (auto& members : by_class) {
    shuffle(members, rng);
    for (std::size_t idx : members) fold_of[idx] = position++ % k;
  }

  std::vector<Split> folds(k);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_of[i] == f)
        folds[f].test_idx.push_back(i);
      else
        folds[f].train_idx.push_back(i);
    }
  }
  for (auto& f : folds) f.seed = seed;
  return folds;
}

std::vector<Split> make_folds(const ExpressionDataset& ds, std::size_t k, std::uint64_t seed) {
  return make_folds(ds.y(), k, seed);
}

// ---- synthetic -------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticParams& p) {
  if (p.n_informative_pathways > p.n_pathways)
    throw ValidationError("n_informative_pathways exceeds n_pathways");
  if (p.n_samples < 4 || p.n_genes == 0) throw ValidationError("synthetic data too small");
  if (p.genes_per_pathway == 0 || p.genes_per_pathway > p.n_genes)
    throw ValidationError("genes_per_pathway must lie in [1, n_genes]");
  if (p.n_pathways * p.genes_per_pathway > p.n_genes && !p.allow_overlap)
    throw ValidationError("n_genes too small for disjoint pathways; enable allow_overlap");

  Rng rng(derive_seed(p.seed, 0x5717));

  const int width = static_cast<int>(std::to_string(p.n_genes).size());
  std::vector<std::string> genes(p.n_genes);
  for (std::size_t j = 0; j < p.n_genes; ++j) {
    std::string num = std::to_string(j);
    genes[j] = "g" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
  }
  std::vector<std::string> samples(p.n_samples);
  for (std::size_t i = 0; i < p.n_samples; ++i) samples[i] = "s" + std::to_string(i);

  Labels y(p.n_samples);
  for (std::size_t i = 0; i < p.n_samples; ++i) y[i] = i < p.n_samples / 2 ? 0 : 1;
  shuffle(y, rng);

  // Pathway membership: disjoint blocks of a shuffled gene order, or
  // independent draws per pathway when overlap is allowed.
  std::vector<std::vector<std::size_t>> members(p.n_pathways);
  std::vector<std::size_t> order(p.n_genes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (p.n_pathways * p.genes_per_pathway <= p.n_genes) {
    shuffle(order, rng);
    for (std::size_t k = 0; k < p.n_pathways; ++k)
      members[k].assign(order.begin() + static_cast<std::ptrdiff_t>(k * p.genes_per_pathway),
                        order.begin() + static_cast<std::ptrdiff_t>((k + 1) * p.genes_per_pathway));
  } else {
    for (std::size_t k = 0; k < p.n_pathways; ++k) {
      shuffle(order, rng);
      members[k].assign(order.begin(),
                        order.begin() + static_cast<std::ptrdiff_t>(p.genes_per_pathway));
    }
  }

  const int pw_width = static_cast<int>(std::to_string(p.n_pathways).size());
  SyntheticData out;
  std::vector<std::size_t> pathway_order(p.n_pathways);
  std::iota(pathway_order.begin(), pathway_order.end(), std::size_t{0});
  shuffle(pathway_order, rng);
  std::vector<bool> informative_gene(p.n_genes, false);
  for (std::size_t k = 0; k < p.n_pathways; ++k) {
    std::string num = std::to_string(k);
    std::string id = "pw" + std::string(static_cast<std::size_t>(pw_width) - num.size(), '0') + num;
    PathwayDB::GeneSet set;
    for (std::size_t j : members[k]) set.insert(genes[j]);
    out.pathways.add(id, set, "synthetic");
    const bool informative =
        std::find(pathway_order.begin(),
                  pathway_order.begin() + static_cast<std::ptrdiff_t>(p.n_informative_pathways),
                  k) != pathway_order.begin() + static_cast<std::ptrdiff_t>(p.n_informative_pathways);
    if (informative) {
      out.truth.informative_pathways.insert(id);
      for (std::size_t j : members[k]) {
        informative_gene[j] = true;
        out.truth.informative_genes.insert(genes[j]);
      }
    }
  }
  out.truth.effect_size = p.effect_size;

  Matrix x(static_cast<Eigen::Index>(p.n_samples), static_cast<Eigen::Index>(p.n_genes));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = standard_normal(rng);
      if (informative_gene[static_cast<std::size_t>(j)] && y[static_cast<std::size_t>(i)] == 1)
        v += p.effect_size;
      x(i, j) = v;
    }
  }
  out.dataset = ExpressionDataset(std::move(genes), std::move(samples), std::move(x), std::move(y));
  return out;
}

void save_truth(const SyntheticTruth& truth, const std::filesystem::path& path) {
  nlohmann::json j;
  j["informative_genes"] = truth.informative_genes;
  j["informative_pathways"] = truth.informative_pathways;
  j["effect_size"] = truth.effect_size;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

SyntheticTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open truth file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("truth file: ") + e.what());
  }
  SyntheticTruth t;
  t.informative_genes = j.at("informative_genes").get<std::set<std::string>>();
  t.informative_pathways = j.at("informative_pathways").get<std::set<std::string>>();
  t.effect_size = j.value("effect_size", 0.0);
  return t;
}

}  // namespace pathmarl
