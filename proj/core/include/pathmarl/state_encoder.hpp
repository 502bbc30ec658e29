#pragma once

// Gene graph (correlation blended with pathway-membership overlap) and the
// two-layer graph convolution that turns per-gene features into agent states.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/mlp.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

struct GeneGraph {
  std::vector<std::string> genes;
  double correlation_weight = 0.7;
  Matrix correlation;
  Matrix jaccard;
  /// rho * C + (1 - rho) * J, diagonal zeroed.
  Matrix edges;
  /// Edges with positive weight only.
  Matrix kept_edges;
  /// D^-1/2 (E+ + I) D^-1/2.
  Matrix adjacency;
};

/// |P_i n P_j| / |P_i u P_j|; 0 when either gene is unmapped.
Matrix jaccard_matrix(const PathwayDB& db, const std::vector<std::string>& genes);

/// Pearson correlation of the columns of x. Constant columns correlate 0 with
/// everything, including themselves.
Matrix pearson_matrix(const Matrix& x);

/// rho * C + (1 - rho) * J with the diagonal zeroed.
Matrix blend_edges(const Matrix& correlation, const Matrix& jaccard, double correlation_weight);

/// Symmetric normalization with self-loops of a non-negative weight matrix.
Matrix normalize_adjacency(const Matrix& weights);

/// `x` holds the expression of `genes`, one column per gene, train samples only.
GeneGraph build_graph(const Matrix& x, const PathwayDB& db, const std::vector<std::string>& genes,
                      double correlation_weight = 0.7);

/// Row g: mean of fixed random unit vectors of g's pathways (zero if unmapped).
/// The vector of a pathway depends only on (seed, pathway id).
Matrix pathway_embeddings(const PathwayDB& db, const std::vector<std::string>& genes,
                          std::size_t dim, std::uint64_t seed);

/// [expression summary, prefilter score, selection bit, embedding] per gene.
Matrix node_features(const Vector& expression, const Vector& scores, const std::vector<int>& selection,
                     const Matrix& embeddings);

/// Agent-facing part of an encoding: s_i = [global, node_i].
struct StateSnapshot {
  Vector global_state;
  Matrix node_embeddings;

  std::size_t n_agents() const { return static_cast<std::size_t>(node_embeddings.rows()); }
  std::size_t state_dim() const {
    return static_cast<std::size_t>(global_state.size() + node_embeddings.cols());
  }
  Vector agent_state(std::size_t i) const;
};

struct StateEncoding {
  Matrix node_embeddings;
  Vector global_state;

  // Forward intermediates for the backward pass.
  Matrix propagated_input;   // A F
  Matrix hidden_pre;         // A F W0
  Matrix hidden;             // relu(A F W0)
  Matrix propagated_hidden;  // A H1
  Matrix output_pre;         // A H1 W1

  Vector agent_state(std::size_t i) const;
  StateSnapshot snapshot() const { return {global_state, node_embeddings}; }
};

StateEncoding encode_state(const Matrix& adjacency, const Matrix& features, const Matrix& w0,
                           const Matrix& w1);

/// Trainable graph convolution weights plus their Adam state.
class GnnEncoder {
 public:
  GnnEncoder() = default;
  /// Glorot-uniform initialization.
  GnnEncoder(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  StateEncoding encode(const Matrix& adjacency, const Matrix& features) const {
    return encode_state(adjacency, features, w0_, w1_);
  }

  /// Gradients of a loss w.r.t. W0 and W1 given d loss / d global_state.
  void backward(const Matrix& adjacency, const StateEncoding& enc, const Vector& d_global,
                Matrix& d_w0, Matrix& d_w1) const;

  void adam_step(const Matrix& d_w0, const Matrix& d_w1, double lr);

  const Matrix& w0() const { return w0_; }
  const Matrix& w1() const { return w1_; }
  Matrix& w0() { return w0_; }
  Matrix& w1() { return w1_; }

 private:
  Matrix w0_;
  Matrix w1_;
  AdamState adam_;
};

/// Upper-triangle edges: i, j, C_ij, J_ij, E_ij (kept edges only).
void write_edge_tsv(const GeneGraph& graph, const std::filesystem::path& path);

}  // namespace pathmarl
