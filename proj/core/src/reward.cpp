#include "pathmarl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pathmarl/errors.hpp"
#include "pathmarl/random.hpp"

namespace pathmarl {

Matrix perturbation_matrix(std::span<const int> a) {
  if (a.empty()) throw ValidationError("perturbation_matrix: empty selection");
  const auto d = static_cast<Eigen::Index>(a.size());
  Matrix out(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) out(r, c) = a[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    out(r, r) = 1.0 - out(r, r);
  }
  return out;
}

// ---- meta-learner ----------------------------------------------------------

void ridge_fit(const Matrix& x, const Vector& y, double lambda, Vector& weights, double& intercept) {
  const Eigen::RowVectorXd mean_x = x.colwise().mean();
  const double mean_y = y.mean();
  const Matrix xc = x.rowwise() - mean_x;
  const Vector yc = y.array() - mean_y;
  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  weights = gram.ldlt().solve(xc.transpose() * yc);
  intercept = mean_y - mean_x.dot(weights);
}

MetaLearner::MetaLearner(std::size_t n_genes, MetaLearnerParams params, std::uint64_t seed)
    : n_genes_(n_genes), params_(std::move(params)), seed_(seed) {
  if (params_.buffer_capacity < params_.min_buffer)
    throw ValidationError("meta-learner: buffer capacity below minimum fit size");
}

void MetaLearner::add(std::span<const int> a, double performance) {
  if (a.size() != n_genes_) throw ValidationError("meta-learner: selection length mismatch");
  inputs_.emplace_back(a.begin(), a.end());
  targets_.push_back(performance);
  while (inputs_.size() > params_.buffer_capacity) {
    inputs_.pop_front();
    targets_.pop_front();
  }
}

MetaLearner::Members MetaLearner::fit_members(const Matrix& x, const Vector& y, std::uint64_t seed) const {
  Members m;
  ForestParams fp;
  fp.n_trees = params_.rf_trees;
  m.forest = rf_regressor_fit(x, y, fp, derive_seed(seed, 0));
  m.boosted = gbt_fit(x, y, params_.gbt, derive_seed(seed, 1));

  std::vector<std::size_t> sizes{static_cast<std::size_t>(x.cols())};
  sizes.insert(sizes.end(), params_.mlp_hidden.begin(), params_.mlp_hidden.end());
  sizes.push_back(1);
  Rng rng(derive_seed(seed, 2));
  m.network = Mlp(sizes, false, rng);
  // Residual target around the buffer mean keeps the output layer near zero.
  const double mean = y.mean();
  m.network.bias(m.network.layer_sizes().size() - 2)(0) = mean;
  const Matrix xt = x.transpose();
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::max<std::size_t>(1, params_.mlp_batch);
  for (std::size_t epoch = 0; epoch < params_.mlp_epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Matrix bx(xt.rows(), static_cast<Eigen::Index>(end - start));
      Matrix by(1, bx.cols());
      for (std::size_t k = start; k < end; ++k) {
        bx.col(static_cast<Eigen::Index>(k - start)) = xt.col(static_cast<Eigen::Index>(order[k]));
        by(0, static_cast<Eigen::Index>(k - start)) = y(static_cast<Eigen::Index>(order[k]));
      }
      m.network.train_step(bx, by, LossKind::kMse, params_.mlp_learning_rate, OptimizerKind::kAdam);
    }
  }
  return m;
}

Matrix MetaLearner::member_predictions(const Members& m, const Matrix& x) const {
  Matrix p(x.rows(), static_cast<Eigen::Index>(kMembers));
  p.col(0) = rf_predict(m.forest, x);
  p.col(1) = gbt_predict(m.boosted, x);
  p.col(2) = m.network.forward(Matrix(x.transpose())).row(0).transpose();
  return p;
}

double MetaLearner::fit() {
  const std::size_t n = inputs_.size();
  if (n < params_.min_buffer) throw ValidationError("meta-learner: buffer below minimum fit size");
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_genes_));
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n_genes_; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = inputs_[r][c];
    y(static_cast<Eigen::Index>(r)) = targets_[r];
  }
  const std::uint64_t round = derive_seed(seed_, fit_count_);

  // Out-of-fold member predictions for the combiner.
  const std::size_t k = std::clamp<std::size_t>(params_.oof_folds, 2, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(round, 99));
  shuffle(order, rng);
  Matrix oof(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kMembers));
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t pos = 0; pos < n; ++pos) (pos % k == f ? te : tr).push_back(order[pos]);
    Matrix xtr(static_cast<Eigen::Index>(tr.size()), x.cols()), xte(static_cast<Eigen::Index>(te.size()), x.cols());
    Vector ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t r = 0; r < tr.size(); ++r) {
      xtr.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(tr[r]));
      ytr(static_cast<Eigen::Index>(r)) = y(static_cast<Eigen::Index>(tr[r]));
    }
    for (std::size_t r = 0; r < te.size(); ++r) xte.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(te[r]));
    const Matrix p = member_predictions(fit_members(xtr, ytr, derive_seed(round, 10 + f)), xte);
    for (std::size_t r = 0; r < te.size(); ++r) oof.row(static_cast<Eigen::Index>(te[r])) = p.row(static_cast<Eigen::Index>(r));
  }
  ridge_fit(oof, y, params_.ridge, weights_, intercept_);

  members_ = fit_members(x, y, derive_seed(round, 1));
  fitted_ = true;
  ++fit_count_;
  const Vector pred = predict(x).mean;
  const double mse = (pred - y).squaredNorm() / static_cast<double>(n);
  if (!std::isfinite(mse)) throw NumericalError("reward", "non-finite meta-learner loss");
  return mse;
}

MetaLearner::Prediction combine_members(Matrix members, const Vector& weights, double intercept) {
  if (members.cols() != weights.size()) throw ValidationError("meta-learner: one weight per member");
  MetaLearner::Prediction out;
  out.mean = (members * weights).array() + intercept;
  const Vector avg = members.rowwise().mean();
  out.uncertainty =
      ((members.colwise() - avg).array().square().rowwise().sum() / static_cast<double>(members.cols())).sqrt();
  out.members = std::move(members);
  return out;
}

MetaLearner::Prediction MetaLearner::predict(const Matrix& rows) const {
  if (!fitted_) throw ValidationError("meta-learner: predict before fit");
  if (static_cast<std::size_t>(rows.cols()) != n_genes_) throw ValidationError("meta-learner: row length mismatch");
  return combine_members(member_predictions(members_, rows), weights_, intercept_);
}

void MetaLearner::set_combiner(const Vector& weights, double intercept) {
  if (weights.size() != static_cast<Eigen::Index>(kMembers)) throw ValidationError("meta-learner: one weight per member");
  weights_ = weights;
  intercept_ = intercept;
}

MetaDelta meta_predict(const MetaLearner& learner, const Matrix& perturbations, double current) {
  const auto p = learner.predict(perturbations);
  return {p.mean.array() - current, p.uncertainty};
}

Vector base_rewards(const Vector& delta, const Vector& uncertainty, double improvement) {
  if (delta.size() != uncertainty.size()) throw ValidationError("base_rewards: size mismatch");
  if ((uncertainty.array() < 0.0).any()) throw ValidationError("base_rewards: negative uncertainty");
  const auto u = uncertainty.array();
  return (delta.array() / (1.0 + u) - (1.0 + u).log() + improvement).matrix();
}

// ---- pathway terms ---------------------------------------------------------

PathwayStructure build_pathway_structure(const PathwayDB& db, const std::vector<std::string>& pool,
                                         const std::vector<std::string>& dataset_genes) {
  std::set<std::string> in_dataset(dataset_genes.begin(), dataset_genes.end());
  std::map<std::string, std::size_t> pool_index;
  for (std::size_t i = 0; i < pool.size(); ++i) pool_index.emplace(pool[i], i);

  PathwayStructure ps;
  ps.gene_pathways.resize(pool.size());
  for (const auto& [id, genes] : db.pathways()) {
    std::vector<std::size_t> members;
    std::size_t present = 0;
    for (const auto& g : genes) {
      present += in_dataset.count(g);
      if (auto it = pool_index.find(g); it != pool_index.end()) members.push_back(it->second);
    }
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    const std::size_t p = ps.pathway_ids.size();
    ps.pathway_ids.push_back(id);
    for (std::size_t i : members) ps.gene_pathways[i].push_back(p);
    ps.members.push_back(std::move(members));
    ps.sizes.push_back(present);
    ps.max_size = std::max(ps.max_size, present);
  }
  return ps;
}

double centrality_phi(std::size_t i, const PathwayStructure& ps) {
  const auto& mine = ps.gene_pathways.at(i);
  double co = 0.0;
  for (std::size_t p : mine) co += static_cast<double>(ps.members[p].size() - 1);
  return static_cast<double>(mine.size()) * co;
}

namespace {

std::size_t selected_in(std::size_t p, std::span<const int> s, const PathwayStructure& ps) {
  std::size_t c = 0;
  for (std::size_t j : ps.members[p]) c += s[j] ? 1 : 0;
  return c;
}

void check_selection(std::span<const int> s, const PathwayStructure& ps) {
  if (s.size() != ps.n_genes()) throw ValidationError("pathway terms: selection length mismatch");
}

}  // namespace

double aggregate_centrality(std::span<const int> selection, const PathwayStructure& ps) {
  check_selection(selection, ps);
  double total = 0.0;
  for (std::size_t i = 0; i < selection.size(); ++i) {
    if (!selection[i]) continue;
    double co = 0.0;
    for (std::size_t p : ps.gene_pathways[i]) co += static_cast<double>(selected_in(p, selection, ps) - 1);
    total += static_cast<double>(ps.gene_pathways[i].size()) * co;
  }
  return total;
}

double delta_phi(std::size_t i, std::span<const int> selection, const PathwayStructure& ps) {
  check_selection(selection, ps);
  const double n_i = static_cast<double>(ps.gene_pathways.at(i).size());
  double total = 0.0;
  for (std::size_t p : ps.gene_pathways[i]) {
    for (std::size_t j : ps.members[p]) {
      if (j == i || !selection[j]) continue;
      total += n_i + static_cast<double>(ps.gene_pathways[j].size());
    }
  }
  return total;
}

double coverage(std::size_t p, std::span<const int> selection, const PathwayStructure& ps) {
  check_selection(selection, ps);
  return static_cast<double>(selected_in(p, selection, ps)) / static_cast<double>(ps.sizes.at(p));
}

double delta_psi(std::size_t i, std::span<const int> selection, const PathwayStructure& ps) {
  check_selection(selection, ps);
  double total = 0.0;
  for (std::size_t p : ps.gene_pathways.at(i)) total += 1.0 / static_cast<double>(ps.sizes[p]);
  return total;
}

double combine(double base, double centrality, double coverage, const RewardWeights& w) noexcept {
  return w.performance * base + w.centrality * centrality + w.coverage * coverage;
}

RewardBreakdown compute_rewards(const RewardInputs& in) {
  const auto d = static_cast<Eigen::Index>(in.actions.size());
  if (in.delta.size() != d || in.uncertainty.size() != d)
    throw ValidationError("compute_rewards: one delta and uncertainty per agent required");
  if (in.bonus.size() != 0 && in.bonus.size() != d) throw ValidationError("compute_rewards: bonus size mismatch");
  if (in.pathway_terms && (!in.pathways || in.pathways->n_genes() != in.actions.size()))
    throw ValidationError("compute_rewards: pathway structure missing or mismatched");

  RewardBreakdown out;
  out.delta = in.delta;
  out.uncertainty = in.uncertainty;
  out.base = base_rewards(-in.delta, in.uncertainty, in.improvement);
  if (in.bonus.size() == d) out.base += in.bonus;
  out.delta_phi = Vector::Zero(d);
  out.delta_psi = Vector::Zero(d);
  out.reward = Vector::Zero(d);

  double phi_norm = 1.0;
  if (in.pathway_terms) {
    const auto selected = std::count_if(in.actions.begin(), in.actions.end(), [](int a) { return a != 0; });
    phi_norm = std::max(1.0, static_cast<double>(selected) * static_cast<double>(in.pathways->max_size));
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    double phi = 0.0;
    double psi = 0.0;
    if (in.pathway_terms) {
      const auto gi = static_cast<std::size_t>(i);
      out.delta_phi(i) = delta_phi(gi, in.actions, *in.pathways);
      out.delta_psi(i) = delta_psi(gi, in.actions, *in.pathways);
      const double sign = in.actions[gi] ? 1.0 : -1.0;
      phi = sign * out.delta_phi(i) / phi_norm;
      psi = sign * out.delta_psi(i) / std::max(1.0, static_cast<double>(in.pathways->membership_count(gi)));
    }
    out.reward(i) = combine(out.base(i), phi, psi, in.weights);
  }
  if (!out.reward.allFinite()) throw NumericalError("reward", "non-finite reward");
  return out;
}

}  // namespace pathmarl
