#pragma once

// Per-agent reward: a performance term from single-flip counterfactuals
// (predicted by an ensemble meta-learner, or evaluated exactly), pathway
// centrality and coverage deltas, and their weighted combination.

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "pathmarl/data.hpp"
#include "pathmarl/learners/forest.hpp"
#include "pathmarl/learners/gbt.hpp"
#include "pathmarl/learners/mlp.hpp"

namespace pathmarl {

struct RewardWeights {
  double performance = 0.5;  // omega
  double centrality = 0.25;  // xi
  double coverage = 0.25;    // zeta
};

/// Row i is `a` with bit i flipped.
Matrix perturbation_matrix(std::span<const int> a);

// ---- meta-learner ----------------------------------------------------------

struct MetaLearnerParams {
  std::size_t rf_trees = 50;
  GbtParams gbt{};
  std::vector<std::size_t> mlp_hidden{256, 128, 64, 32};
  std::size_t mlp_epochs = 100;
  std::size_t mlp_batch = 64;
  double mlp_learning_rate = 1e-3;
  /// Ridge penalty of the stacking combiner.
  double ridge = 0.01;
  std::size_t oof_folds = 3;
  std::size_t min_buffer = 16;
  std::size_t buffer_capacity = 500;
  std::size_t update_every = 50;
};

/// Stacked ensemble of a forest, boosted trees and an MLP over selection
/// vectors. The combiner is a ridge regression (unpenalized intercept) on
/// out-of-fold member predictions.
class MetaLearner {
 public:
  struct Prediction {
    Vector mean;
    /// Population std across member predictions.
    Vector uncertainty;
    /// rows x members.
    Matrix members;
  };

  MetaLearner() = default;
  MetaLearner(std::size_t n_genes, MetaLearnerParams params, std::uint64_t seed);

  /// Appends (a, R); the oldest entry is dropped past capacity.
  void add(std::span<const int> a, double performance);
  std::size_t buffer_size() const { return inputs_.size(); }

  bool fitted() const { return fitted_; }
  std::size_t fit_count() const { return fit_count_; }

  /// Refits members and combiner on the buffer; returns the buffer MSE.
  double fit();

  Prediction predict(const Matrix& rows) const;

  const Vector& combiner_weights() const { return weights_; }
  double combiner_intercept() const { return intercept_; }
  void set_combiner(const Vector& weights, double intercept);

  static constexpr std::size_t kMembers = 3;

 private:
  struct Members {
    RandomForestModel forest;
    GBTRegressor boosted;
    Mlp network;
  };

  Members fit_members(const Matrix& x, const Vector& y, std::uint64_t seed) const;
  Matrix member_predictions(const Members& m, const Matrix& x) const;

  std::size_t n_genes_ = 0;
  MetaLearnerParams params_;
  std::uint64_t seed_ = 0;
  std::deque<std::vector<int>> inputs_;
  std::deque<double> targets_;
  Members members_;
  Vector weights_;
  double intercept_ = 0.0;
  bool fitted_ = false;
  std::size_t fit_count_ = 0;
};

/// Combiner output and population std across member columns (rows x members).
MetaLearner::Prediction combine_members(Matrix members, const Vector& weights, double intercept);

/// Ridge regression with an unpenalized intercept (columns centered).
void ridge_fit(const Matrix& x, const Vector& y, double lambda, Vector& weights, double& intercept);

struct MetaDelta {
  Vector delta;
  Vector uncertainty;
};

/// delta_i = f(D_i) - R; throws if the learner was never fit.
MetaDelta meta_predict(const MetaLearner& learner, const Matrix& perturbations, double current);

/// delta * 1/(1+u) - log(1+u) + I.
Vector base_rewards(const Vector& delta, const Vector& uncertainty, double improvement);

// ---- pathway terms ---------------------------------------------------------

/// Pathway membership restricted to the candidate pool. Pathway sizes count
/// members present in the dataset, which may exceed those in the pool.
struct PathwayStructure {
  std::vector<std::string> pathway_ids;
  std::vector<std::vector<std::size_t>> gene_pathways;  // per pool gene
  std::vector<std::vector<std::size_t>> members;        // pool indices per pathway
  std::vector<std::size_t> sizes;                       // |G_p| within the dataset
  std::size_t max_size = 0;

  std::size_t n_genes() const { return gene_pathways.size(); }
  std::size_t membership_count(std::size_t i) const { return gene_pathways.at(i).size(); }
};

PathwayStructure build_pathway_structure(const PathwayDB& db, const std::vector<std::string>& pool,
                                         const std::vector<std::string>& dataset_genes);

/// n_i * sum_p (pool co-members of i in p).
double centrality_phi(std::size_t i, const PathwayStructure& ps);
/// sum_{i in S} n_i * sum_{p in P_i} |co-members of i in p, within S|.
double aggregate_centrality(std::span<const int> selection, const PathwayStructure& ps);
/// Phi(S u {i}) - Phi(S) for unselected i, Phi(S) - Phi(S \ {i}) for selected i.
double delta_phi(std::size_t i, std::span<const int> selection, const PathwayStructure& ps);

/// |S n G_p| / |G_p|.
double coverage(std::size_t p, std::span<const int> selection, const PathwayStructure& ps);
/// Sum over i's pathways of the coverage change from adding (or removing) i.
double delta_psi(std::size_t i, std::span<const int> selection, const PathwayStructure& ps);

double combine(double base, double centrality, double coverage, const RewardWeights& w) noexcept;

struct RewardBreakdown {
  Vector delta;
  Vector uncertainty;
  Vector base;
  Vector delta_phi;
  Vector delta_psi;
  Vector reward;
};

struct RewardInputs {
  std::span<const int> actions;
  /// Predicted or evaluated R(flip_i a) - R(a).
  Vector delta;
  Vector uncertainty;
  double improvement = 0.0;
  /// Per-agent additive novelty bonus (already zero where not applicable).
  Vector bonus;
  const PathwayStructure* pathways = nullptr;
  RewardWeights weights{};
  bool pathway_terms = true;
};

/// Counterfactual orientation: the performance credit for agent i's realized
/// action is R(a) - R(flip_i a), and the pathway deltas count positively for
/// a selected gene and negatively for an unselected one.
RewardBreakdown compute_rewards(const RewardInputs& in);

}  // namespace pathmarl
