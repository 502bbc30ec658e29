#include "trivial_examples.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pathmarl/agents.hpp"
#include "pathmarl/config.hpp"
#include "pathmarl/coordination.hpp"
#include "pathmarl/errors.hpp"
#include "pathmarl/learners/chi2.hpp"
#include "pathmarl/learners/forest.hpp"
#include "pathmarl/learners/gbt.hpp"
#include "pathmarl/learners/metrics.hpp"
#include "pathmarl/learners/mlp.hpp"
#include "pathmarl/learners/svm.hpp"
#include "pathmarl/pipeline.hpp"
#include "pathmarl/prefilter.hpp"
#include "pathmarl/reward.hpp"
#include "pathmarl/state_encoder.hpp"

namespace pathmarl::testing {
namespace {

namespace fs = std::filesystem;

void check(bool ok, const std::string& what) {
  if (!ok) throw ExampleFailure(what);
}

void near(double got, double want, double tol, const std::string& what) {
  if (!(std::abs(got - want) <= tol)) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
    throw ExampleFailure(os.str());
  }
}

template <typename Fn>
void throws(Fn&& fn, const std::string& what) {
  try {
    fn();
  } catch (const std::exception&) {
    return;
  }
  throw ExampleFailure(what + ": expected an error");
}

fs::path scratch(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("pathmarl_example_" + name);
  std::ofstream(p) << text;
  return p;
}

ExpressionDataset balanced(std::size_t n, std::size_t genes, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::vector<std::string> names, samples;
  for (std::size_t g = 0; g < genes; ++g) names.push_back("g" + std::to_string(g));
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(genes));
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples.push_back("s" + std::to_string(i));
    y[i] = static_cast<int>(i % 2);
    for (std::size_t g = 0; g < genes; ++g)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = standard_normal(rng) + (g == 0 ? shift * y[i] : 0.0);
  }
  return {names, samples, x, y};
}

Labels labels_of(std::initializer_list<int> v) { return Labels(v); }

// Pool {i, a, b, c, d}: i in p1 = {i, a, b, c} and p2 = {i, d}; u unmapped.
PathwayStructure phi_structure() {
  PathwayDB db;
  db.add("p1", {"i", "a", "b", "c"});
  db.add("p2", {"i", "d"});
  const std::vector<std::string> pool{"i", "a", "b", "c", "d", "u"};
  return build_pathway_structure(db, pool, pool);
}

AgentParams tiny_agent() {
  AgentParams p;
  p.hidden = {6};
  p.batch_size = 2;
  p.replay_capacity = 1700;
  return p;
}

RunConfig toy_run_config() {
  RunConfig c;
  c.seed = 5;
  c.prefilter.n_trees = 5;
  c.prefilter.cv_folds = 3;
  c.graph.embedding_dim = 4;
  c.graph.hidden_dim = 4;
  c.agents.hidden = {4};
  c.critic.compressed_dim = 4;
  c.critic.head_dim = 2;
  c.evaluator.n_trees = 5;
  c.evaluator.cv_folds = 3;
  c.schedule.episodes = 1;
  c.schedule.steps_per_episode = 1;
  c.schedule.exploration_steps = 1;
  c.schedule.k = 3;
  c.evaluation.n_trees = 10;
  return c;
}

void add(std::vector<Example>& out, std::string module, std::string name, std::function<void()> fn) {
  out.push_back({std::move(module), std::move(name), std::move(fn)});
}

void data_examples(std::vector<Example>& ex) {
  add(ex, "data", "3x2 CSV echoes shape", [] {
    const auto ds = load_expression(scratch("3x2.csv", "g1,g2,label\n1,2,1\n3,4,0\n5,6,1\n"));
    check(ds.n_samples() == 3 && ds.n_genes() == 2, "shape");
    check(ds.y() == labels_of({1, 0, 1}), "labels");
  });
  add(ex, "data", "duplicate gene header is an error",
      [] { throws([] { load_expression(scratch("dup.csv", "g1,g1,label\n1,2,1\n")); }, "duplicate header"); });
  add(ex, "data", "label 2 is a validation error", [] {
    try {
      load_expression(scratch("label2.csv", "g1,g2,label\n1,2,2\n"));
    } catch (const ValidationError&) {
      return;
    }
    throw ExampleFailure("expected ValidationError");
  });
  add(ex, "data", "single GMT line", [] {
    const auto db = load_pathways(scratch("one.gmt", "p1\tdesc\tg1\tg2\n"));
    check(db.pathways() == std::map<std::string, PathwayDB::GeneSet>{{"p1", {"g1", "g2"}}}, "pathways");
    check(db.gene_index() == std::map<std::string, PathwayDB::GeneSet>{{"g1", {"p1"}}, {"g2", {"p1"}}}, "index");
  });
  add(ex, "data", "shared gene indexes both pathways", [] {
    const auto db = load_pathways(scratch("two.gmt", "p1\td\tg1\tg2\np2\td\tg2\tg3\n"));
    check(db.pathways_of("g2") == PathwayDB::GeneSet{"p1", "p2"}, "g2 pathways");
  });
  add(ex, "data", "empty GMT gives empty database", [] { check(load_pathways(scratch("empty.gmt", "")).empty(), "empty"); });
  add(ex, "data", "10 samples, 0.3 split", [] {
    const auto ds = balanced(10, 2, 1);
    const auto s = make_split(ds, 0.3, 7);
    check(s.train_idx.size() == 7 && s.test_idx.size() == 3, "sizes");
    std::size_t pos = 0;
    for (std::size_t i : s.test_idx) pos += static_cast<std::size_t>(ds.y()[i]);
    check(pos == 1 || pos == 2, "per-class test count");
  });
  add(ex, "data", "split is deterministic", [] {
    const auto ds = balanced(10, 2, 1);
    const auto a = make_split(ds, 0.3, 7), b = make_split(ds, 0.3, 7);
    check(a.train_idx == b.train_idx && a.test_idx == b.test_idx, "indices");
  });
  add(ex, "data", "half split of 2/2", [] {
    const auto ds = balanced(4, 2, 1);
    const auto s = make_split(ds, 0.5, 3);
    for (const auto* side : {&s.train_idx, &s.test_idx}) {
      check(side->size() == 2, "side size");
      check(ds.y()[(*side)[0]] != ds.y()[(*side)[1]], "one of each class");
    }
  });
  add(ex, "data", "5 folds of 10 samples", [] {
    const auto folds = make_folds(balanced(10, 2, 1), 5, 1);
    check(folds.size() == 5, "count");
    for (const auto& f : folds) check(f.test_idx.size() == 2, "fold size");
  });
  add(ex, "data", "folds partition the samples", [] {
    const auto folds = make_folds(balanced(10, 2, 1), 5, 1);
    std::multiset<std::size_t> all;
    for (const auto& f : folds) all.insert(f.test_idx.begin(), f.test_idx.end());
    check(all.size() == 10 && std::set<std::size_t>(all.begin(), all.end()).size() == 10, "partition");
  });
  add(ex, "data", "fold seed changes assignment, not sizes", [] {
    const auto ds = balanced(10, 2, 1);
    const auto a = make_folds(ds, 5, 1), b = make_folds(ds, 5, 2);
    bool differs = false;
    for (std::size_t f = 0; f < 5; ++f) {
      check(a[f].test_idx.size() == b[f].test_idx.size(), "size profile");
      differs |= a[f].test_idx != b[f].test_idx;
    }
    check(differs, "assignment changes");
  });
  add(ex, "data", "null effect leaves informative genes unshifted", [] {
    SyntheticParams sp;
    sp.effect_size = 0.0;
    const auto d = generate_synthetic(sp);
    double diff = 0.0;
    for (const auto& g : d.truth.informative_genes) {
      const auto c = static_cast<Eigen::Index>(*d.dataset.gene_index(g));
      double m[2] = {0, 0}, n[2] = {0, 0};
      for (Eigen::Index r = 0; r < d.dataset.x().rows(); ++r) {
        const int y = d.dataset.y()[static_cast<std::size_t>(r)];
        m[y] += d.dataset.x()(r, c);
        n[y] += 1;
      }
      diff += m[1] / n[1] - m[0] / n[0];
    }
    // Mean of 40 class-mean differences: sd = sqrt(2/150/40) ~ 0.018.
    near(diff / static_cast<double>(d.truth.informative_genes.size()), 0.0, 0.08, "mean shift");
  });
  add(ex, "data", "synthetic is bit-identical per seed", [] {
    SyntheticParams sp;
    sp.seed = 99;
    check(generate_synthetic(sp).dataset.x() == generate_synthetic(sp).dataset.x(), "matrix");
  });
}

void learner_examples(std::vector<Example>& ex) {
  add(ex, "learners", "chi2 of 2x2 perfect table is 4", [] {
    Matrix x(4, 1);
    x << 0, 0, 1, 1;
    near(chi2_scores(x, labels_of({0, 0, 1, 1}), 4)(0), 4.0, kExactTol, "chi2");
  });
  add(ex, "learners", "chi2 of constant column is 0", [] {
    near(chi2_scores(Matrix::Constant(4, 1, 3.0), labels_of({0, 0, 1, 1}), 4)(0), 0.0, 0.0, "chi2");
  });
  add(ex, "learners", "single-tree forest is deterministic", [] {
    const auto ds = balanced(30, 4, 2, 1.0);
    const auto a = rf_fit(ds.x(), ds.y(), 1, 3), b = rf_fit(ds.x(), ds.y(), 1, 3);
    check(rf_predict_proba(a, ds.x()) == rf_predict_proba(b, ds.x()), "predictions");
  });
  add(ex, "learners", "svm on all-zero columns scores 0", [] {
    check(svm_rank_scores(Matrix::Zero(6, 3), labels_of({0, 1, 0, 1, 0, 1}), {}, 1).isZero(0.0), "scores");
  });
  add(ex, "learners", "zero-weight layer outputs its bias", [] {
    Mlp m = Mlp::zeros({3, 2});
    m.bias(0) << 0.5, -1.0;
    const Vector out = m.forward(Vector(Vector::Constant(3, 7.0)));
    near(out(0), 0.5, kExactTol, "out0");
    near(out(1), -1.0, kExactTol, "out1");
  });
  add(ex, "learners", "small-step MSE loss is non-increasing", [] {
    Rng rng(4);
    Mlp m({3, 5, 1}, false, rng);
    Matrix x(3, 1), t(1, 1);
    x << 0.3, -0.2, 0.9;
    t << 2.0;
    double prev = m.loss(x, t, LossKind::kMse);
    for (int s = 0; s < 100; ++s) {
      m.train_step(x, t, LossKind::kMse, 1e-3);
      const double now = m.loss(x, t, LossKind::kMse);
      check(now <= prev + 1e-15, "loss increased at step " + std::to_string(s));
      prev = now;
    }
  });
  add(ex, "learners", "boosting on constant target predicts it", [] {
    const auto ds = balanced(20, 3, 5);
    const auto m = gbt_fit(ds.x(), Vector::Constant(20, 0.37), {}, 1);
    const Vector p = gbt_predict(m, ds.x());
    check((p.array() - 0.37).abs().maxCoeff() <= kPipelineTol, "prediction");
  });
  add(ex, "learners", "boosting with zero rate predicts the mean", [] {
    const auto ds = balanced(20, 3, 5);
    Vector y(20);
    for (int i = 0; i < 20; ++i) y(i) = i;
    GbtParams p;
    p.learning_rate = 0.0;
    const Vector pred = gbt_predict(gbt_fit(ds.x(), y, p, 1), ds.x());
    check((pred.array() - 9.5).abs().maxCoeff() <= kExactTol, "prediction");
  });
  add(ex, "learners", "AUC perfect ranking", [] {
    near(auc(std::vector<double>{0.9, 0.8, 0.3, 0.2}, std::vector<int>{1, 1, 0, 0}), 1.0, kExactTol, "auc");
  });
  add(ex, "learners", "AUC three of four pairs", [] {
    near(auc(std::vector<double>{0.9, 0.2, 0.8, 0.3}, std::vector<int>{1, 0, 0, 1}), 0.75, kExactTol, "auc");
  });
  add(ex, "learners", "AUC full ties", [] {
    near(auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{1, 0, 0, 1}), 0.5, kExactTol, "auc");
  });
}

void prefilter_examples(std::vector<Example>& ex) {
  add(ex, "prefilter", "weights normalize performances", [] {
    const auto w = method_weights(std::vector<double>{0.8, 0.8, 0.4});
    near(w[0], 0.4, kExactTol, "w0");
    near(w[1], 0.4, kExactTol, "w1");
    near(w[2], 0.2, kExactTol, "w2");
  });
  add(ex, "prefilter", "identical methods weigh equally", [] {
    const auto w = method_weights(std::vector<double>{0.7, 0.7, 0.7});
    for (double v : w) near(v, 1.0 / 3.0, kExactTol, "w");
  });
  add(ex, "prefilter", "zero-performance method gets weight 0", [] {
    const auto w = method_weights(std::vector<double>{0.0, 0.8, 0.4});
    near(w[0], 0.0, 0.0, "w0");
    near(w[1], 2.0 / 3.0, kExactTol, "w1");
    near(w[2], 1.0 / 3.0, kExactTol, "w2");
  });
  add(ex, "prefilter", "pathway without dataset genes is absent", [] {
    PathwayDB db;
    db.add("elsewhere", {"x1", "x2"});
    db.add("here", {"g0", "g1"});
    PrefilterParams p;
    p.n_trees = 5;
    const auto t = pathway_performance(balanced(30, 3, 1, 2.0), db, p, 1);
    check(!t.scores.contains("elsewhere") && t.scores.contains("here"), "membership");
  });

  auto one_method = [](std::vector<double> scores) {
    MethodScoreTable t;
    t.scores = {Eigen::Map<Vector>(scores.data(), static_cast<Eigen::Index>(scores.size()))};
    t.weights = {1.0};
    return t;
  };
  add(ex, "prefilter", "weighted sum of method scores", [] {
    MethodScoreTable t;
    t.scores = {Vector::Constant(1, 1.0), Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
    t.weights = {0.5, 0.3, 0.2};
    near(integrative_scores(t, {}, PathwayDB{}, {"g"}, 0.2, 1).meta_scores(0), 0.7, kExactTol, "m_g");
  });
  add(ex, "prefilter", "pathway boost with mean e-1", [one_method] {
    PathwayDB db;
    db.add("p", {"g"});
    PathwayPerfTable pp;
    pp.scores["p"] = std::exp(1.0) - 1.0;
    near(integrative_scores(one_method({1.0}), pp, db, {"g"}, 0.2, 1).adjusted_scores(0), 1.2, kExactTol, "s_g");
  });
  add(ex, "prefilter", "unmapped gene keeps its meta-score", [one_method] {
    near(integrative_scores(one_method({0.4}), {}, PathwayDB{}, {"g"}, 0.2, 1).adjusted_scores(0), 0.4, kExactTol, "s_g");
  });
  add(ex, "prefilter", "mean + 2 sd threshold and fallback", [one_method] {
    const auto r = integrative_scores(one_method({1, 1, 1, 1, 10}), {}, PathwayDB{}, {"a", "b", "c", "d", "e"}, 0.2, 1);
    near(r.mean, 2.8, kExactTol, "mean");
    near(r.sd, 3.6, kExactTol, "sd");
    near(r.threshold, 10.0, kExactTol, "threshold");
    check(r.fallback_used, "fallback");
  });
}

void state_examples(std::vector<Example>& ex) {
  add(ex, "state_encoder", "Jaccard of {p1,p2} and {p2,p3}", [] {
    PathwayDB db;
    db.add("p1", {"i"});
    db.add("p2", {"i", "j"});
    db.add("p3", {"j"});
    near(jaccard_matrix(db, {"i", "j"})(0, 1), 1.0 / 3.0, kExactTol, "J");
  });
  add(ex, "state_encoder", "identical membership gives Jaccard 1", [] {
    PathwayDB db;
    db.add("p1", {"i", "j"});
    near(jaccard_matrix(db, {"i", "j"})(0, 1), 1.0, kExactTol, "J");
  });
  add(ex, "state_encoder", "unmapped gene gives Jaccard 0", [] {
    PathwayDB db;
    db.add("p1", {"i"});
    near(jaccard_matrix(db, {"i", "u"})(0, 1), 0.0, 0.0, "J");
  });
  add(ex, "state_encoder", "edge blend 0.7/0.5/1/3", [] {
    Matrix c = Matrix::Identity(2, 2), j = Matrix::Identity(2, 2);
    c(0, 1) = c(1, 0) = 0.5;
    j(0, 1) = j(1, 0) = 1.0 / 3.0;
    near(blend_edges(c, j, 0.7)(0, 1), 0.45, kExactTol, "E");
  });
  add(ex, "state_encoder", "rho 1 reproduces correlation", [] {
    const auto ds = balanced(20, 4, 3);
    PathwayDB db;
    db.add("p", {"g0", "g1"});
    const auto g = build_graph(ds.x(), db, ds.genes(), 1.0);
    Matrix c = g.correlation;
    c.diagonal().setZero();
    check(g.edges == c, "E == C");
  });
  add(ex, "state_encoder", "isolated node keeps a unit self-loop", [] {
    Matrix w = Matrix::Zero(3, 3);
    w(0, 1) = w(1, 0) = 0.8;
    const Matrix a = normalize_adjacency(w);
    near(a(2, 2), 1.0, kExactTol, "self loop");
    near(a.row(2).sum(), 1.0, kExactTol, "row");
  });
  add(ex, "state_encoder", "unmapped gene embeds to zero", [] {
    PathwayDB db;
    db.add("p", {"a"});
    check(pathway_embeddings(db, {"a", "u"}, 8, 1).row(1).isZero(0.0), "zero row");
  });
  add(ex, "state_encoder", "identical memberships embed identically", [] {
    PathwayDB db;
    db.add("p", {"a", "b"});
    db.add("q", {"a", "b"});
    const Matrix e = pathway_embeddings(db, {"a", "b"}, 8, 1);
    check(e.row(0) == e.row(1), "rows");
  });
  add(ex, "state_encoder", "single pathway embedding has unit norm", [] {
    PathwayDB db;
    db.add("p", {"a"});
    near(pathway_embeddings(db, {"a"}, 16, 1).row(0).norm(), 1.0, kExactTol, "norm");
  });
  add(ex, "state_encoder", "zero weights give zero state", [] {
    const Matrix a = normalize_adjacency(Matrix::Ones(3, 3));
    const auto e = encode_state(a, Matrix::Ones(3, 4), Matrix::Zero(4, 5), Matrix::Zero(5, 5));
    check(e.node_embeddings.isZero(0.0) && e.global_state.isZero(0.0), "zero");
  });
  add(ex, "state_encoder", "identity adjacency does not mix nodes", [] {
    Rng rng(3);
    Matrix f = Matrix::Random(4, 3).cwiseAbs();
    Matrix w0(3, 3);
    for (Eigen::Index i = 0; i < w0.size(); ++i) w0.data()[i] = uniform01(rng);
    const Matrix id = Matrix::Identity(4, 4);
    const auto e1 = encode_state(id, f, w0, Matrix::Identity(3, 3));
    f.row(3).setConstant(9.0);
    const auto e2 = encode_state(id, f, w0, Matrix::Identity(3, 3));
    check(e1.node_embeddings.topRows(3) == e2.node_embeddings.topRows(3), "rows 0..2 unchanged");
    check(e1.node_embeddings.row(0).isApprox((f.row(0) * w0).cwiseMax(0.0)), "per-node transform");
  });
}

void agent_examples(std::vector<Example>& ex) {
  add(ex, "agents", "zero Q, zero bias selects with probability 1/2", [] {
    Rng rng(1);
    int ones = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) ones += choose_action(0.0, 0.0, 0.0, rng);
    near(static_cast<double>(ones) / n, 0.5, 0.01, "rate");
  });
  add(ex, "agents", "saturated Q always selects", [] {
    Rng rng(1);
    for (int k = 0; k < 10000; ++k) check(choose_action(1e6, 0.0, 0.0, rng) == 1, "action");
  });
  add(ex, "agents", "epsilon at t=0 is 0.95", [] { near(epsilon(0), 0.95, kExactTol, "eps"); });
  add(ex, "agents", "epsilon at t=1 is 0.9405", [] { near(epsilon(1), 0.9405, kExactTol, "eps"); });
  add(ex, "agents", "epsilon floors at 0.1", [] { near(epsilon(1000000), 0.1, 0.0, "eps"); });
  add(ex, "agents", "replay evicts the oldest past capacity", [] {
    PrioritizedReplay r(1700);
    for (int k = 0; k < 1701; ++k) {
      Transition t;
      t.reward = k;
      r.push(t);
    }
    check(r.size() == 1700, "size");
    near(r.at(0).reward, 1700.0, 0.0, "slot 0 overwritten");
    near(r.at(1).reward, 1.0, 0.0, "slot 1 kept");
  });
  add(ex, "agents", "targets equal to predictions leave parameters", [] {
    AgentPool pool(1, 4, tiny_agent(), 3);
    auto s = std::make_shared<StateSnapshot>();
    s->global_state = Vector::Constant(2, 0.3);
    s->node_embeddings = Matrix::Constant(1, 2, -0.4);
    for (int a : {0, 1}) {
      Transition t;
      t.state = t.next_state = s;
      t.action = a;
      pool.replay(0).push(t);
    }
    const Matrix q = pool.online(0).forward(Matrix(s->agent_state(0)));
    const auto before = pool.online(0).parameters();
    PrioritizedReplay::Batch b{{0, 1}, {0.5, 0.5}, {1.0, 1.0}};
    const std::vector<double> targets{q(0, 0), q(1, 0)};
    near(pool.train_on(0, b, targets), 0.0, 0.0, "loss");
    check(pool.online(0).parameters() == before, "parameters unchanged");
  });
  add(ex, "agents", "Huber gradient bounded where MSE is not", [] {
    Rng rng(2);
    const Mlp m({2, 4, 1}, false, rng);
    Matrix x(2, 1), t(1, 1);
    x << 0.5, -0.5;
    t << 1e6;
    Mlp::Gradients gh, gm;
    m.loss_and_gradients(x, t, LossKind::kHuber, gh);
    m.loss_and_gradients(x, t, LossKind::kMse, gm);
    const auto fh = Mlp::flatten(gh, false), fm = Mlp::flatten(gm, false);
    const double nh = Eigen::Map<const Vector>(fh.data(), static_cast<Eigen::Index>(fh.size())).norm();
    const double nm = Eigen::Map<const Vector>(fm.data(), static_cast<Eigen::Index>(fm.size())).norm();
    // d loss / d output is at most 1 in magnitude for Huber.
    Mlp::Gradients unit;
    m.loss_and_gradients(x, Matrix::Constant(1, 1, m.forward(x)(0, 0) + 1.0), LossKind::kHuber, unit);
    const auto fu = Mlp::flatten(unit, false);
    const double nu = Eigen::Map<const Vector>(fu.data(), static_cast<Eigen::Index>(fu.size())).norm();
    near(nh, nu, 1e-9 * std::max(1.0, nu), "Huber norm equals the unit-slope norm");
    check(nm > 1e5 * nh, "MSE gradient grows with the outlier");
  });
  add(ex, "agents", "step 0 target equals online", [] { check(AgentPool(2, 4, tiny_agent(), 1).targets_synced(), "synced"); });
  add(ex, "agents", "target copies at step 50, frozen 51..99", [] {
    AgentPool pool(1, 4, tiny_agent(), 1);
    auto bump = [&pool] {
      auto p = pool.online(0).parameters();
      for (double& v : p) v += 0.01;
      pool.online(0).set_parameters(p);
    };
    bump();
    check(!pool.maybe_sync(49), "no sync at 49");
    check(pool.maybe_sync(50) && pool.targets_synced(), "sync at 50");
    const auto frozen = pool.target(0).parameters();
    for (std::uint64_t s = 51; s < 100; ++s) {
      bump();
      check(!pool.maybe_sync(s), "no sync between");
      check(pool.target(0).parameters() == frozen, "target frozen");
    }
    check(pool.maybe_sync(100) && pool.targets_synced(), "sync at 100");
  });
}

void coordination_examples(std::vector<Example>& ex) {
  add(ex, "coordination", "zero-weight critic outputs its bias", [] {
    Critic c = Critic::zeros(4);
    c.params().bo = 0.25;
    near(c.value(Vector::Constant(4, 3.0)), 0.25, 0.0, "v");
  });
  add(ex, "coordination", "critic is pure", [] {
    Rng rng(1);
    const Critic c(4, 3, 2, rng);
    const Vector x = Vector::LinSpaced(4, -1, 1);
    check(c.value(x) == c.value(x), "same output");
  });
  add(ex, "coordination", "zero input evaluates at the origin", [] {
    Rng rng(1);
    const Critic c(4, 3, 2, rng);
    check(c.value(Vector(Vector::LinSpaced(4, -1, 1) * 0.0)) == c.value(Vector::Zero(4)), "origin");
  });
  add(ex, "coordination", "critic at target has zero loss and no change", [] {
    Rng rng(1);
    Critic c(4, 3, 2, rng);
    const Vector x = Vector::LinSpaced(4, -1, 1);
    const auto before = c.parameters();
    near(c.update(x, c.value(x), 1e-3), 0.0, 0.0, "loss");
    check(c.parameters() == before, "parameters");
  });
  add(ex, "coordination", "blended target 2.19", [] { near(blend_target(1, 2, 1), 2.19, kExactTol, "y"); });
  add(ex, "coordination", "lambda (1,0) gives the Bellman target",
      [] { near(blend_target(0.3, 1.5, 9.0, 0.85, 1.0, 0.0), 0.3 + 0.85 * 1.5, kExactTol, "y"); });
  add(ex, "coordination", "zero target", [] { near(blend_target(0, 0, 0), 0.0, 0.0, "y"); });
  add(ex, "coordination", "history keeps max, synergy sums", [] {
    SharedMemory m(3);
    const std::vector<std::size_t> s{1, 2};
    m.record(s, 0.3);
    m.record(s, 0.3);
    near(*m.history(s), 0.3, kExactTol, "H");
    near(m.synergy()(1, 2), 0.6, kExactTol, "M");
  });
  add(ex, "coordination", "negative improvement skips synergy", [] {
    SharedMemory m(3);
    const std::vector<std::size_t> s{0, 1};
    m.record(s, -0.1);
    near(*m.history(s), -0.1, 0.0, "H");
    check(m.synergy().isZero(0.0), "M");
  });
  add(ex, "coordination", "singleton updates history only", [] {
    SharedMemory m(3);
    const std::vector<std::size_t> s{2};
    m.record(s, 0.5);
    check(m.history(s).has_value() && m.synergy().isZero(0.0), "H only");
  });
  add(ex, "coordination", "one decay multiplies by 0.99", [] {
    SharedMemory m(2);
    m.record(std::vector<std::size_t>{0, 1}, 1.0);
    m.decay();
    near(m.synergy()(0, 1), 0.99, kExactTol, "M");
  });
  add(ex, "coordination", "100 decays", [] {
    SharedMemory m(2);
    m.record(std::vector<std::size_t>{0, 1}, 1.0);
    for (int k = 0; k < 100; ++k) m.decay();
    near(m.synergy()(0, 1), std::pow(0.99, 100), kExactTol, "M");
    near(m.synergy()(0, 1), 0.366, 1e-3, "approx");
  });
  add(ex, "coordination", "decay fixes the zero matrix", [] {
    SharedMemory m(3);
    m.decay();
    check(m.synergy().isZero(0.0), "M");
  });
  add(ex, "coordination", "synergy bias top-2 of {0.3,0.1,0.05}", [] {
    SharedMemory m(4);
    m.record(std::vector<std::size_t>{0, 1}, 0.3);
    m.record(std::vector<std::size_t>{0, 2}, 0.1);
    m.record(std::vector<std::size_t>{0, 3}, 0.05);
    near(m.synergy_bias(0, 2, 0.08), 0.032, kExactTol, "bias");
  });
  add(ex, "coordination", "zero row gives zero bias", [] { near(SharedMemory(4).synergy_bias(1, 5, 0.3), 0.0, 0.0, "bias"); });
  add(ex, "coordination", "eta reaches 0.3 at the end of exploration", [] { near(eta_schedule(3000, 3000), 0.3, 0.0, "eta"); });
}

void reward_examples(std::vector<Example>& ex) {
  add(ex, "reward", "perturbation rows of [1,0,1]", [] {
    Matrix want(3, 3);
    want << 0, 0, 1, 1, 1, 1, 1, 0, 0;
    check(perturbation_matrix(std::vector<int>{1, 0, 1}) == want, "rows");
  });
  add(ex, "reward", "perturbation of zeros is identity",
      [] { check(perturbation_matrix(std::vector<int>{0, 0}) == Matrix::Identity(2, 2), "identity"); });
  add(ex, "reward", "flipping twice restores the selection", [] {
    const std::vector<int> a{1, 0, 0, 1, 1};
    const Matrix d = perturbation_matrix(a);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      std::vector<int> row(a.size());
      for (std::size_t c = 0; c < a.size(); ++c) row[c] = static_cast<int>(d(i, static_cast<Eigen::Index>(c)));
      check(perturbation_matrix(row).row(i).cast<int>() == Eigen::Map<const Eigen::RowVectorXi>(a.data(), 5), "involution");
    }
  });
  add(ex, "reward", "members all at R give zero delta and spread", [] {
    const auto p = combine_members(Matrix::Constant(3, 3, 0.7), Vector::Constant(3, 1.0 / 3.0), 0.0);
    check((p.mean.array() - 0.7).abs().maxCoeff() <= kExactTol, "delta");
    check(p.uncertainty.isZero(kExactTol), "u");
  });
  add(ex, "reward", "spread of {0.6,0.8,1.0}", [] {
    Matrix m(1, 3);
    m << 0.6, 0.8, 1.0;
    near(combine_members(m, Vector::Constant(3, 1.0 / 3.0), 0.0).uncertainty(0), std::sqrt(0.08 / 3.0), kExactTol, "u");
    near(combine_members(m, Vector::Constant(3, 1.0 / 3.0), 0.0).uncertainty(0), 0.163, 1e-3, "approx");
  });
  add(ex, "reward", "combiner (1,0,0) returns the first member", [] {
    Matrix m(2, 3);
    m << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
    check(combine_members(m, Vector::Unit(3, 0), 0.0).mean == m.col(0), "mean");
  });
  add(ex, "reward", "base reward 0.15", [] {
    near(base_rewards(Vector::Constant(1, 0.1), Vector::Zero(1), 0.05)(0), 0.15, kExactTol, "r");
  });
  add(ex, "reward", "unit uncertainty halves and penalizes log 2", [] {
    near(base_rewards(Vector::Constant(1, 1.0), Vector::Ones(1), 0.0)(0), 0.5 - std::log(2.0), kExactTol, "r");
  });
  add(ex, "reward", "zero base reward", [] { near(base_rewards(Vector::Zero(1), Vector::Zero(1), 0.0)(0), 0.0, 0.0, "r"); });
  add(ex, "reward", "huge ridge penalty leaves the intercept", [] {
    Matrix x(4, 2);
    x << 1, 0, 0, 1, 1, 1, 0, 0;
    Vector y(4);
    y << 0.6, 0.7, 0.9, 0.4;
    Vector w;
    double b;
    ridge_fit(x, y, 1e12, w, b);
    check(w.cwiseAbs().maxCoeff() < 1e-9, "weights");
    near(b, y.mean(), 1e-9, "intercept");
  });
  add(ex, "reward", "own centrality term 2*(3+1)", [] {
    const auto ps = phi_structure();
    const std::vector<int> s{1, 1, 1, 1, 1, 0};
    // Co-members a, b, c contribute 1*3 each and d contributes 1*1.
    near(aggregate_centrality(s, ps) - (3 * 3.0 + 1.0), 8.0, kExactTol, "own term");
  });
  add(ex, "reward", "unmapped gene has no centrality", [] {
    const auto ps = phi_structure();
    near(centrality_phi(5, ps), 0.0, 0.0, "phi");
    near(delta_phi(5, std::vector<int>{1, 1, 1, 1, 1, 0}, ps), 0.0, 0.0, "dphi");
  });
  add(ex, "reward", "first gene added to an empty set gains no centrality",
      [] { near(delta_phi(0, std::vector<int>(6, 0), phi_structure()), 0.0, 0.0, "dphi"); });
  add(ex, "reward", "coverage gain 1/4", [] {
    PathwayDB db;
    db.add("p", {"a", "b", "c", "d"});
    const auto ps = build_pathway_structure(db, {"a", "b", "c", "d"}, {"a", "b", "c", "d"});
    near(delta_psi(2, std::vector<int>{1, 1, 0, 0}, ps), 0.25, kExactTol, "dpsi");
  });
  add(ex, "reward", "completing pathways gains sum of 1/size", [] {
    const auto ps = phi_structure();
    near(delta_psi(0, std::vector<int>{0, 1, 1, 1, 1, 0}, ps), 0.25 + 0.5, kExactTol, "dpsi");
  });
  add(ex, "reward", "unmapped gene has no coverage gain",
      [] { near(delta_psi(5, std::vector<int>{1, 1, 1, 1, 1, 0}, phi_structure()), 0.0, 0.0, "dpsi"); });
  add(ex, "reward", "weighted combination 0.2", [] { near(combine(0.2, 0.4, 0.0, {}), 0.2, kExactTol, "r"); });
  add(ex, "reward", "all-zero combination", [] { near(combine(0.0, 0.0, 0.0, {}), 0.0, 0.0, "r"); });
  add(ex, "reward", "no pathway weights gives the base reward", [] {
    const std::vector<int> a{1, 0, 1};
    RewardInputs in;
    in.actions = a;
    in.delta = Vector::LinSpaced(3, -0.1, 0.1);
    in.uncertainty = Vector::Constant(3, 0.2);
    in.improvement = 0.02;
    in.weights = {1.0, 0.0, 0.0};
    in.pathway_terms = false;
    const auto r = compute_rewards(in);
    check(r.reward == r.base, "r == r_base");
  });
}

void pipeline_examples(std::vector<Example>& ex) {
  auto toy = [] {
    auto ds = balanced(24, 5, 8, 2.0);
    PathwayDB db;
    db.add("p", {"g0", "g1"});
    return std::pair{ds, db};
  };
  add(ex, "pipeline", "one-step toy run ranks all 5 genes", [toy] {
    const auto [ds, db] = toy();
    const auto r = select_genes(toy_run_config(), ds, db);
    check(r.ranked_genes.size() == 5, "ranking size");
    check(r.selected.size() == 3, "|G_opt| = min(k, 5)");
  });
  add(ex, "pipeline", "toy run is deterministic", [toy] {
    const auto [ds, db] = toy();
    const auto a = run(toy_run_config(), ds, db), b = run(toy_run_config(), ds, db);
    check(a.selection.ranked_genes == b.selection.ranked_genes, "ranking");
    check(a.selection.importance == b.selection.importance, "weights");
    check(a.evaluation.holdout_auc == b.evaluation.holdout_auc, "auc");
  });
  add(ex, "pipeline", "importance with decay 0.5", [] {
    Matrix d(1, 2);
    d << 1, 1;
    near(importance_weights(d, 0.5)(0), 1.5, kExactTol, "w");
  });
  add(ex, "pipeline", "zero differences give zero weight",
      [] { check(importance_weights(Matrix::Zero(3, 4), 0.99).isZero(0.0), "w"); });
  add(ex, "pipeline", "decay 0 keeps the last difference", [] {
    Matrix d(1, 3);
    d << 4, 5, 6;
    near(importance_weights(d, 0.0)(0), 6.0, 0.0, "w");
  });
  add(ex, "pipeline", "top-2 of [3,1,2]", [] {
    Vector w(3);
    w << 3, 1, 2;
    check(select_top_k(w, 2) == IndexList{0, 2}, "ranking");
  });
  add(ex, "pipeline", "equal weights break ties by index",
      [] { check(select_top_k(Vector::Ones(4), 2) == IndexList{0, 1}, "ranking"); });
  add(ex, "pipeline", "k beyond the gene count returns all",
      [] { check(select_top_k(Vector::LinSpaced(3, 0, 1), 10).size() == 3, "size"); });
  add(ex, "pipeline", "evaluation is deterministic per seed", [] {
    const auto tr = balanced(40, 4, 1, 1.5), te = balanced(20, 4, 2, 1.5);
    const auto a = evaluate({"g0", "g1"}, tr, te, 3, 20, 2), b = evaluate({"g0", "g1"}, tr, te, 3, 20, 2);
    check(a.holdout_runs == b.holdout_runs && a.cv_auc == b.cv_auc, "report");
  });
}

}  // namespace

std::vector<Example> trivial_examples() {
  std::vector<Example> ex;
  data_examples(ex);
  learner_examples(ex);
  prefilter_examples(ex);
  state_examples(ex);
  agent_examples(ex);
  coordination_examples(ex);
  reward_examples(ex);
  pipeline_examples(ex);
  return ex;
}

}  // namespace pathmarl::testing
