// Command-line front end: synth, prefilter, select, evaluate, ablate.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pathmarl/config.hpp"
#include "pathmarl/data.hpp"
#include "pathmarl/errors.hpp"
#include "pathmarl/pipeline.hpp"
#include "pathmarl/prefilter.hpp"

namespace fs = std::filesystem;
using namespace pathmarl;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> exploration_steps;
  std::optional<std::size_t> k;
  std::optional<std::size_t> eval_trees;
  std::optional<std::size_t> repeats;
  std::optional<double> test_fraction;
  std::optional<double> correlation_weight;
  std::optional<double> beta;
  bool exact_flip = false;
  bool no_bonus = false;
  bool no_rwd = false;
  bool no_crt = false;
  bool no_mem = false;
  bool debug = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--episodes", o.episodes, "Episodes E");
  cmd->add_option("--steps", o.steps, "Steps per episode T");
  cmd->add_option("--exploration-steps", o.exploration_steps, "Length of the eta / IS-beta ramps");
  cmd->add_option("-k,--k", o.k, "Final selection size");
  cmd->add_option("--evaluator-trees", o.eval_trees, "Trees in the per-step subset evaluator");
  cmd->add_option("--correlation-weight", o.correlation_weight, "Graph mixing weight in [0,1]");
  cmd->add_option("--beta", o.beta, "Pathway bonus scaling of the prefilter");
  cmd->add_flag("--exact-flip-labels", o.exact_flip, "Evaluate every single-flip neighbour directly");
  cmd->add_flag("--no-exploration-bonus", o.no_bonus, "Disable the novelty bonus");
  cmd->add_flag("--no-rwd", o.no_rwd, "Performance-only reward");
  cmd->add_flag("--no-crt", o.no_crt, "Disable the critic");
  cmd->add_flag("--no-mem", o.no_mem, "Disable shared memory");
  cmd->add_flag("--debug-checks", o.debug, "Per-step invariant checks");
}

RunConfig resolve(const std::string& config_path, const Overrides& o) {
  RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.episodes) c.schedule.episodes = *o.episodes;
  if (o.steps) c.schedule.steps_per_episode = *o.steps;
  if (o.exploration_steps) c.schedule.exploration_steps = *o.exploration_steps;
  if (o.k) c.schedule.k = *o.k;
  if (o.eval_trees) c.evaluator.n_trees = *o.eval_trees;
  if (o.repeats) c.evaluation.repeats = *o.repeats;
  if (o.test_fraction) c.evaluation.test_fraction = *o.test_fraction;
  if (o.correlation_weight) c.graph.correlation_weight = *o.correlation_weight;
  if (o.beta) c.prefilter.beta = *o.beta;
  if (o.exact_flip) c.flags.exact_flip_labels = true;
  if (o.no_bonus) c.flags.exploration_bonus = false;
  if (o.debug) c.flags.debug_checks = true;
  if (o.no_rwd) c = with_ablation(c, Ablation::kNoReward);
  if (o.no_crt) c = with_ablation(c, Ablation::kNoCritic);
  if (o.no_mem) c = with_ablation(c, Ablation::kNoMemory);
  validate(c);
  return c;
}

/// First column of a TSV with a header row, or one gene per line.
std::vector<std::string> read_gene_list(const fs::path& path, std::size_t k) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::vector<std::string> genes;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string gene = line.substr(0, line.find('\t'));
    if (first && line.find('\t') != std::string::npos && gene == "gene") {
      first = false;
      continue;
    }
    first = false;
    genes.push_back(gene);
    if (k > 0 && genes.size() == k) break;
  }
  if (genes.empty()) throw ValidationError("no genes in " + path.string());
  return genes;
}

void print_report(const EvaluationReport& r) {
  std::cout << "genes\t" << r.n_genes << "\nholdout_auc\t" << r.holdout_auc << "\nholdout_sd\t" << r.holdout_sd
            << "\ntrain_cv_auc\t" << r.cv_auc << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathway-guided multi-agent gene selection"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path;
  bool print_config = false;
  Overrides o;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_flag("--print-config", print_config, "Print the fully resolved configuration and exit");
  app.add_option("--seed", o.seed, "Run seed");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted-signal dataset, pathways and truth");
  SyntheticParams sp;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--samples", sp.n_samples);
  synth->add_option("--genes", sp.n_genes);
  synth->add_option("--pathways", sp.n_pathways);
  synth->add_option("--pathway-size", sp.genes_per_pathway);
  synth->add_option("--informative", sp.n_informative_pathways);
  synth->add_option("--effect", sp.effect_size);
  synth->add_flag("--allow-overlap", sp.allow_overlap);

  std::string data_path, gmt_path, out_path, out_dir, truth_path, genes_path, reward_log, edge_dump, synergy_dump,
      checkpoint;

  auto* prefilter = app.add_subcommand("prefilter", "Stage-one scoring on the training split");
  prefilter->add_option("--data", data_path, "Expression CSV")->required()->check(CLI::ExistingFile);
  prefilter->add_option("--pathways", gmt_path, "Pathway GMT")->required()->check(CLI::ExistingFile);
  prefilter->add_option("--out", out_path, "Output TSV")->required();
  prefilter->add_option("-k,--k", o.k, "Final selection size (sets the fallback pool)");
  prefilter->add_option("--beta", o.beta);

  auto* select = app.add_subcommand("select", "Full pipeline on the training split, then holdout evaluation");
  select->add_option("--data", data_path, "Expression CSV")->required()->check(CLI::ExistingFile);
  select->add_option("--pathways", gmt_path, "Pathway GMT")->required()->check(CLI::ExistingFile);
  select->add_option("--out-dir", out_dir, "Directory for artifacts")->required();
  select->add_option("--repeats", o.repeats, "Holdout evaluation repeats");
  select->add_option("--test-fraction", o.test_fraction);
  select->add_option("--reward-log", reward_log, "Per-step reward TSV");
  select->add_option("--dump-edges", edge_dump, "Gene graph edge TSV");
  select->add_option("--dump-synergy", synergy_dump, "Top synergy pairs TSV");
  select->add_option("--checkpoint", checkpoint, "Agent checkpoint written at the end");
  add_run_flags(select, o);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Holdout AUC of a gene list");
  std::size_t top_k = 0;
  evaluate_cmd->add_option("--data", data_path, "Expression CSV")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--genes", genes_path, "Ranked TSV or one gene per line")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--top", top_k, "Use only the first N genes");
  evaluate_cmd->add_option("--repeats", o.repeats);
  evaluate_cmd->add_option("--test-fraction", o.test_fraction);

  auto* ablate = app.add_subcommand("ablate", "Full model and the three ablations on one split");
  ablate->add_option("--data", data_path, "Expression CSV")->required()->check(CLI::ExistingFile);
  ablate->add_option("--pathways", gmt_path, "Pathway GMT")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", out_path, "Report TSV")->required();
  ablate->add_option("--truth", truth_path, "Planted truth JSON for recovery columns")->check(CLI::ExistingFile);
  add_run_flags(ablate, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = resolve(config_path, o);
    if (print_config) {
      std::cout << config_to_json(config) << '\n';
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }

    if (synth->parsed()) {
      sp.seed = config.seed;
      const auto data = generate_synthetic(sp);
      fs::create_directories(synth_out);
      save_expression(data.dataset, fs::path(synth_out) / "expression.csv");
      save_pathways(data.pathways, fs::path(synth_out) / "pathways.gmt");
      save_truth(data.truth, fs::path(synth_out) / "truth.json");
      std::cout << "wrote " << synth_out << '\n';
    } else if (prefilter->parsed()) {
      const auto ds = load_expression(data_path);
      const auto db = load_pathways(gmt_path);
      const auto split = holdout_split(config, ds);
      PrefilterParams pp = config.prefilter;
      pp.k = config.schedule.k;
      const auto r = run_prefilter(ds.subset_samples(split.train_idx), db, pp, derive_seed(config.seed, 1));
      write_prefilter_tsv(r, out_path);
      std::cout << "selected " << r.selected.size() << " of " << r.genes.size() << " genes"
                << (r.fallback_used ? " (fallback)" : "") << '\n';
    } else if (select->parsed()) {
      if (!o.seed) throw ValidationError("select: --seed is required");
      const auto ds = load_expression(data_path);
      const auto db = load_pathways(gmt_path);
      fs::create_directories(out_dir);
      RunOptions opts;
      opts.edge_dump = edge_dump;
      opts.synergy_dump = synergy_dump;
      opts.checkpoint = checkpoint;
      if (!reward_log.empty()) {
        auto stream = std::make_shared<std::ofstream>(reward_log);
        if (!*stream) throw ValidationError("cannot write " + reward_log);
        opts.on_step = reward_logger(stream);
      }
      const auto result = run(config, ds, db, std::move(opts));
      const fs::path dir(out_dir);
      write_ranked_tsv(result.selection, dir / "ranked.tsv");
      write_trace_tsv(result.selection.trace, dir / "trace.tsv");
      write_heatmap_csv(ds, result.selection.selected, dir / "heatmap.csv");
      write_result_json(config, result, dir / "result.json");
      print_report(result.evaluation);
    } else if (evaluate_cmd->parsed()) {
      const auto ds = load_expression(data_path);
      const auto genes = read_gene_list(genes_path, top_k);
      const auto split = holdout_split(config, ds);
      const auto report = evaluate(genes, ds.subset_samples(split.train_idx), ds.subset_samples(split.test_idx),
                                   derive_seed(config.seed, 9), config.evaluation.n_trees, config.evaluation.repeats);
      print_report(report);
    } else if (ablate->parsed()) {
      const auto ds = load_expression(data_path);
      const auto db = load_pathways(gmt_path);
      std::optional<SyntheticTruth> truth;
      if (!truth_path.empty()) truth = load_truth(truth_path);
      const auto split = holdout_split(config, ds);
      const auto train = ds.subset_samples(split.train_idx);
      const auto test = ds.subset_samples(split.test_idx);
      PrefilterParams pp = config.prefilter;
      pp.k = config.schedule.k;
      const auto pre = run_prefilter(train, db, pp, derive_seed(config.seed, 1));
      std::ofstream out(out_path);
      if (!out) throw ValidationError("cannot write " + out_path);
      out << "variant\tholdout_auc\ttrain_cv_auc\tn_selected";
      if (truth) out << "\trecovery\tcovered_pathways";
      out << '\n';
      for (Ablation a : {Ablation::kNone, Ablation::kNoReward, Ablation::kNoCritic, Ablation::kNoMemory}) {
        const RunConfig c = with_ablation(config, a);
        RunOptions opts;
        opts.prefilter = &pre;
        const auto sel = select_genes(c, train, db, std::move(opts));
        const auto rep = evaluate(sel.selected, train, test, derive_seed(c.seed, 9), c.evaluation.n_trees,
                                  c.evaluation.repeats);
        out << ablation_name(a) << '\t' << rep.holdout_auc << '\t' << rep.cv_auc << '\t' << sel.selected.size();
        if (truth)
          out << '\t' << recovery(sel.selected, truth->informative_genes) << '\t'
              << covered_pathways(sel.selected, db, truth->informative_pathways, ds.genes());
        out << '\n';
        std::cout << ablation_name(a) << "\tholdout_auc=" << rep.holdout_auc << '\n';
      }
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
