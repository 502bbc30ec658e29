#include "pathmarl/state_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pathmarl/errors.hpp"

namespace pathmarl {

Matrix jaccard_matrix(const PathwayDB& db, const std::vector<std::string>& genes) {
  const auto n = static_cast<Eigen::Index>(genes.size());
  Matrix j = Matrix::Zero(n, n);
  std::vector<const PathwayDB::GeneSet*> sets;
  sets.reserve(genes.size());
  for (const auto& g : genes) sets.push_back(&db.pathways_of(g));
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& pa = *sets[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a; b < n; ++b) {
      const auto& pb = *sets[static_cast<std::size_t>(b)];
      if (pa.empty() || pb.empty()) continue;
      std::size_t inter = 0;
      for (const auto& p : pa) inter += pb.count(p);
      const double uni = static_cast<double>(pa.size() + pb.size() - inter);
      j(a, b) = j(b, a) = static_cast<double>(inter) / uni;
    }
  }
  return j;
}

Matrix pearson_matrix(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix centered = x.rowwise() - x.colwise().mean();
  Vector norms = centered.colwise().norm();
  const double scale = n > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index c = 0; c < d; ++c) {
    // Treat columns whose spread is at rounding level as constant.
    if (norms(c) <= 1e-12 * std::max(1.0, scale) * std::sqrt(static_cast<double>(n))) {
      centered.col(c).setZero();
    } else {
      centered.col(c) /= norms(c);
    }
  }
  Matrix c = centered.transpose() * centered;
  c = (c.array().min(1.0).max(-1.0)).matrix();
  for (Eigen::Index i = 0; i < d; ++i) c(i, i) = centered.col(i).squaredNorm() > 0.0 ? 1.0 : 0.0;
  return c;
}

Matrix blend_edges(const Matrix& correlation, const Matrix& jaccard, double correlation_weight) {
  if (correlation.rows() != jaccard.rows() || correlation.cols() != jaccard.cols())
    throw ValidationError("blend_edges: shape mismatch");
  Matrix e = correlation_weight * correlation + (1.0 - correlation_weight) * jaccard;
  e.diagonal().setZero();
  return e;
}

Matrix normalize_adjacency(const Matrix& weights) {
  Matrix a = weights;
  a.diagonal().array() += 1.0;
  const Vector inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

GeneGraph build_graph(const Matrix& x, const PathwayDB& db, const std::vector<std::string>& genes,
                      double correlation_weight) {
  if (x.rows() < 2) throw ValidationError("build_graph: need at least 2 samples");
  if (static_cast<std::size_t>(x.cols()) != genes.size())
    throw ValidationError("build_graph: expression columns do not match gene list");
  if (!(correlation_weight >= 0.0 && correlation_weight <= 1.0))
    throw ValidationError("build_graph: correlation weight must lie in [0,1]");

  GeneGraph g;
  g.genes = genes;
  g.correlation_weight = correlation_weight;
  g.correlation = pearson_matrix(x);
  g.jaccard = jaccard_matrix(db, genes);
  g.edges = blend_edges(g.correlation, g.jaccard, correlation_weight);
  g.kept_edges = g.edges.cwiseMax(0.0);
  g.adjacency = normalize_adjacency(g.kept_edges);
  return g;
}

Matrix pathway_embeddings(const PathwayDB& db, const std::vector<std::string>& genes,
                          std::size_t dim, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(dim);
  std::map<std::string, Vector> vectors;
  for (const auto& entry : db.pathways()) {
    Rng rng(derive_seed(seed, stable_hash(entry.first)));
    Vector v(d);
    for (Eigen::Index k = 0; k < d; ++k) v(k) = standard_normal(rng);
    const double norm = v.norm();
    vectors.emplace(entry.first, norm > 0.0 ? Vector(v / norm) : v);
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(genes.size()), d);
  for (std::size_t g = 0; g < genes.size(); ++g) {
    const auto& member_of = db.pathways_of(genes[g]);
    if (member_of.empty()) continue;
    Vector sum = Vector::Zero(d);
    for (const auto& p : member_of) sum += vectors.at(p);
    out.row(static_cast<Eigen::Index>(g)) = sum.transpose() / static_cast<double>(member_of.size());
  }
  return out;
}

Matrix node_features(const Vector& expression, const Vector& scores, const std::vector<int>& selection,
                     const Matrix& embeddings) {
  const Eigen::Index n = embeddings.rows();
  if (expression.size() != n || scores.size() != n || static_cast<Eigen::Index>(selection.size()) != n)
    throw ValidationError("node_features: inconsistent gene counts");
  Matrix f(n, 3 + embeddings.cols());
  f.col(0) = expression;
  f.col(1) = scores;
  for (Eigen::Index i = 0; i < n; ++i) f(i, 2) = selection[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  f.rightCols(embeddings.cols()) = embeddings;
  return f;
}

Vector StateSnapshot::agent_state(std::size_t i) const {
  Vector s(static_cast<Eigen::Index>(state_dim()));
  s << global_state, node_embeddings.row(static_cast<Eigen::Index>(i)).transpose();
  return s;
}

Vector StateEncoding::agent_state(std::size_t i) const {
  Vector s(global_state.size() + node_embeddings.cols());
  s << global_state, node_embeddings.row(static_cast<Eigen::Index>(i)).transpose();
  return s;
}

StateEncoding encode_state(const Matrix& adjacency, const Matrix& features, const Matrix& w0,
                           const Matrix& w1) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() != features.rows())
    throw ValidationError("encode_state: adjacency and features disagree on node count");
  if (features.cols() != w0.rows() || w0.cols() != w1.rows())
    throw ValidationError("encode_state: weight shapes do not chain");
  if (features.rows() == 0) throw ValidationError("encode_state: empty graph");
  StateEncoding e;
  e.propagated_input = adjacency * features;
  e.hidden_pre = e.propagated_input * w0;
  e.hidden = e.hidden_pre.cwiseMax(0.0);
  e.propagated_hidden = adjacency * e.hidden;
  e.output_pre = e.propagated_hidden * w1;
  e.node_embeddings = e.output_pre.cwiseMax(0.0);
  e.global_state = e.node_embeddings.colwise().mean().transpose();
  return e;
}

GnnEncoder::GnnEncoder(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  auto glorot = [&](std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    return w;
  };
  w0_ = glorot(input_dim, hidden_dim);
  w1_ = glorot(hidden_dim, hidden_dim);
  adam_.resize(static_cast<std::size_t>(w0_.size() + w1_.size()));
}

void GnnEncoder::backward(const Matrix& adjacency, const StateEncoding& enc, const Vector& d_global,
                          Matrix& d_w0, Matrix& d_w1) const {
  const auto n = static_cast<double>(enc.node_embeddings.rows());
  Matrix d_out = (enc.output_pre.array() > 0.0)
                     .select(Matrix(d_global.transpose().replicate(enc.output_pre.rows(), 1) / n), 0.0);
  d_w1 = enc.propagated_hidden.transpose() * d_out;
  Matrix d_hidden = adjacency.transpose() * (d_out * w1_.transpose());
  Matrix d_pre = (enc.hidden_pre.array() > 0.0).select(d_hidden, 0.0);
  d_w0 = enc.propagated_input.transpose() * d_pre;
}

void GnnEncoder::adam_step(const Matrix& d_w0, const Matrix& d_w1, double lr) {
  std::vector<double> params(static_cast<std::size_t>(w0_.size() + w1_.size()));
  std::vector<double> grads(params.size());
  std::copy(w0_.data(), w0_.data() + w0_.size(), params.begin());
  std::copy(w1_.data(), w1_.data() + w1_.size(), params.begin() + w0_.size());
  std::copy(d_w0.data(), d_w0.data() + d_w0.size(), grads.begin());
  std::copy(d_w1.data(), d_w1.data() + d_w1.size(), grads.begin() + d_w0.size());
  adam_.step(params, grads, lr);
  std::copy(params.begin(), params.begin() + w0_.size(), w0_.data());
  std::copy(params.begin() + w0_.size(), params.end(), w1_.data());
}

void write_edge_tsv(const GeneGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "i\tj\tcorrelation\tjaccard\tweight\n";
  const Eigen::Index n = graph.kept_edges.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (graph.kept_edges(i, j) <= 0.0) continue;
      out << graph.genes[static_cast<std::size_t>(i)] << '\t' << graph.genes[static_cast<std::size_t>(j)]
          << '\t' << graph.correlation(i, j) << '\t' << graph.jaccard(i, j) << '\t' << graph.edges(i, j)
          << '\n';
    }
  }
}

}  // namespace pathmarl
