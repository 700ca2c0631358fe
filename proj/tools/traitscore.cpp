#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "traitscore/harness.hpp"
#include "traitscore/llm.hpp"

namespace fs = std::filesystem;
using namespace traitscore;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path.string());
  }
  out << content;
}

Corpus load_corpus(const ExperimentConfig& cfg, std::vector<std::string>* warnings = nullptr) {
  if (cfg.corpus_path.empty()) {
    throw ConfigError("config lacks [corpus] path");
  }
  return parse_corpus(read_file(cfg.corpus_path), cfg.schema, warnings);
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Run artifacts live under <out>/<config-hash>-<timestamp>/ unless an exact
// directory was requested.
fs::path resolve_run_dir(const ExperimentConfig& cfg, const ConfigFile& file,
                         const std::string& out_override) {
  if (!out_override.empty()) return fs::path(out_override);
  return fs::path(cfg.out_dir) / (config_content_hash(file) + "-" + timestamp_utc());
}

std::string checkpoint_filename(HeadKind head, Trait trait, std::uint64_t seed) {
  return "checkpoint_" + std::string(head_kind_name(head)) + "_" + std::string(trait_name(trait)) +
         "_seed" + std::to_string(seed) + ".txt";
}

int cmd_ingest(const std::string& config_path, const std::string& out_dir) {
  const ConfigFile file = ConfigFile::load(config_path);
  const ExperimentConfig cfg = ExperimentConfig::from_file(file);
  std::vector<std::string> warnings;
  const Corpus corpus = load_corpus(cfg, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "corpus: " << corpus.size() << " essays\n";
  for (Trait t : kAllTraits) {
    const auto dist = class_distribution(corpus, t);
    std::cout << "  " << trait_display_name(t) << ": weak " << dist.at(Band::Weak) << ", fair "
              << dist.at(Band::Fair) << ", strong " << dist.at(Band::Strong) << "\n";
  }
  if (!out_dir.empty()) {
    const fs::path path = fs::path(out_dir) / "corpus.tsv";
    write_file(path, write_corpus_tsv(corpus, cfg.schema));
    std::cout << "canonical corpus written to " << path.string() << "\n";
  }
  return 0;
}

int cmd_split(const std::string& config_path, const std::string& out_dir) {
  const ConfigFile file = ConfigFile::load(config_path);
  const ExperimentConfig cfg = ExperimentConfig::from_file(file);
  const Corpus corpus = load_corpus(cfg);
  const SplitAssignment assignment = split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);
  std::cout << "split: train " << assignment.counts.n_train << ", val " << assignment.counts.n_val
            << ", test " << assignment.counts.n_test << " (seed " << cfg.split_seed << ")\n";
  const fs::path path = fs::path(out_dir.empty() ? "." : out_dir) / "split_manifest.tsv";
  write_file(path, write_split_manifest(assignment, corpus));
  std::cout << "manifest written to " << path.string() << "\n";
  return 0;
}

void apply_overrides(ExperimentConfig& cfg, const std::string& trait, const std::string& head,
                     const std::vector<std::uint64_t>& seeds, double grid_step) {
  if (!trait.empty()) cfg.traits = {trait_from_name(trait)};
  if (!head.empty()) cfg.heads = {head_kind_from_name(head)};
  if (!seeds.empty()) cfg.seeds = seeds;
  if (grid_step > 0.0) cfg.train.cutoff_grid_step = grid_step;
}

int cmd_train(const std::string& config_path, const std::string& trait, const std::string& head,
              const std::vector<std::uint64_t>& seeds, double grid_step,
              const std::string& out_override) {
  const ConfigFile file = ConfigFile::load(config_path);
  ExperimentConfig cfg = ExperimentConfig::from_file(file);
  apply_overrides(cfg, trait, head, seeds, grid_step);
  const Corpus corpus = load_corpus(cfg);

  const fs::path run_dir = resolve_run_dir(cfg, file, out_override);
  fs::create_directories(run_dir);

  const SplitAssignment assignment = split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);
  write_file(run_dir / "split_manifest.tsv", write_split_manifest(assignment, corpus));

  const RunResults results = multi_seed_run(cfg, corpus);
  for (const MethodTraitCell& cell : results.cells) {
    for (const SeedOutcome& outcome : cell.outcomes) {
      if (outcome.failed) {
        std::cerr << "seed " << outcome.seed << " (" << head_kind_name(cell.head) << ", "
                  << trait_name(cell.trait) << ") failed: " << outcome.error << "\n";
        continue;
      }
      write_file(run_dir / checkpoint_filename(cell.head, cell.trait, outcome.seed),
                 write_checkpoint(outcome.checkpoint));
    }
    write_file(run_dir / ("seed_metrics_" + std::string(head_kind_name(cell.head)) + "_" +
                          std::string(trait_name(cell.trait)) + ".csv"),
               seed_metrics_csv(cell));
  }
  write_file(run_dir / "results.csv", results_csv(results));
  write_file(run_dir / "table.txt", results_table(results));
  std::cout << results_table(results);
  std::cout << "run artifacts in " << run_dir.string() << "\n";
  return 0;
}

int cmd_tune(const std::string& config_path, const std::string& trait,
             const std::string& checkpoint_path, double grid_step, const std::string& out_path) {
  const ConfigFile file = ConfigFile::load(config_path);
  ExperimentConfig cfg = ExperimentConfig::from_file(file);
  if (!trait.empty()) cfg.traits = {trait_from_name(trait)};
  if (grid_step > 0.0) cfg.train.cutoff_grid_step = grid_step;
  const Corpus corpus = load_corpus(cfg);
  Checkpoint ckpt = parse_checkpoint(read_file(checkpoint_path));

  const SplitAssignment assignment = split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);
  const PreparedData prepared = prepare_datasets(corpus, assignment, cfg.traits.front(), cfg);
  const TuneResult tuned = tune_checkpoint(ckpt, prepared.val, cfg.train.cutoff_grid_step);
  std::printf("tuned cutoffs: (%.2f, %.2f), validation QWK %.4f\n", tuned.cutoffs.c1(),
              tuned.cutoffs.c2(), tuned.qwk);
  ckpt.cutoffs = tuned.cutoffs;
  ckpt.val_tuned_qwk = tuned.qwk;
  const std::string target = out_path.empty() ? checkpoint_path : out_path;
  write_file(target, write_checkpoint(ckpt));
  std::cout << "checkpoint updated: " << target << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& trait,
             const std::string& checkpoint_path, const std::string& out_path) {
  const ConfigFile file = ConfigFile::load(config_path);
  ExperimentConfig cfg = ExperimentConfig::from_file(file);
  if (!trait.empty()) cfg.traits = {trait_from_name(trait)};
  const Corpus corpus = load_corpus(cfg);
  const Checkpoint ckpt = parse_checkpoint(read_file(checkpoint_path));

  const SplitAssignment assignment = split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);
  const PreparedData prepared = prepare_datasets(corpus, assignment, cfg.traits.front(), cfg);
  const MetricReport report = evaluate_checkpoint(ckpt, prepared.test.data);
  const std::string csv = metrics_csv(report);
  if (!out_path.empty()) {
    write_file(out_path, csv);
  }
  std::cout << csv;
  return 0;
}

int cmd_llm_score(const std::string& config_path, const std::string& trait_name_arg,
                  const std::string& split_name, int limit, int reps_override,
                  const std::string& out_dir) {
  const ConfigFile file = ConfigFile::load(config_path);
  ExperimentConfig cfg = ExperimentConfig::from_file(file);
  if (!trait_name_arg.empty()) cfg.traits = {trait_from_name(trait_name_arg)};
  if (!cfg.llm) {
    throw ConfigError("config lacks an [llm] section with an endpoint");
  }
  const Trait trait = cfg.traits.front();
  const Corpus corpus = load_corpus(cfg);
  const SplitAssignment assignment = split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);

  const SplitKind kind = split_kind_from_name(split_name);
  std::vector<LabeledEssay> essays;
  for (const std::string& id : assignment.ids_for(kind, corpus)) {
    const EssayRecord* rec = corpus.find(id);
    essays.push_back({rec->id, rec->text, rec->band(trait)});
    if (limit > 0 && static_cast<int>(essays.size()) >= limit) break;
  }

  const PromptTemplate tmpl =
      load_prompt_template(cfg.prompt_assets_dir, trait, cfg.llm_role_text, cfg.llm_task_text);
  const int reps = reps_override > 0 ? reps_override : cfg.reps;
  const TraitEvaluation eval = run_trait_evaluation(*cfg.llm, essays, tmpl, reps);

  for (std::size_t r = 0; r < eval.reps.size(); ++r) {
    const RepResult& rep = eval.reps[r];
    std::printf("rep %zu: QWK %.4f, weighted F1 %.4f, failures %d/%zu\n", r + 1, rep.report.qwk,
                rep.report.weighted_f1, rep.failures, rep.records.size());
  }
  if (eval.qwk_agg) {
    std::printf("QWK %.2f ± %.2f, weighted F1 %.2f ± %.2f over %d reps\n",
                eval.qwk_agg->mean, eval.qwk_agg->stddev, eval.f1_agg->mean, eval.f1_agg->stddev,
                eval.qwk_agg->k);
  }
  if (eval.confidence.n > 0) {
    std::printf("confidence: min %.2f, mean %.2f, max %.2f over %d replies\n", eval.confidence.min,
                eval.confidence.mean, eval.confidence.max, eval.confidence.n);
  }
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  write_file(dir / "predictions.csv", predictions_csv(eval, essays, trait));
  std::cout << "predictions written to " << (dir / "predictions.csv").string() << "\n";
  return 0;
}

int cmd_ttest(const std::string& a_path, const std::string& b_path, const std::string& metric) {
  const SeedMetricsFile a = parse_seed_metrics_csv(read_file(a_path));
  const SeedMetricsFile b = parse_seed_metrics_csv(read_file(b_path));
  auto ait = a.by_metric.find(metric);
  auto bit = b.by_metric.find(metric);
  if (ait == a.by_metric.end() || bit == b.by_metric.end()) {
    throw ConfigError("metric '" + metric + "' not present in both files");
  }
  try {
    const TTestResult result = paired_t_test(ait->second, bit->second);
    std::printf("paired t-test on %s: t = %.4f, df = %d, p = %.4f (%s at 0.05)\n", metric.c_str(),
                result.t, result.df, result.p_two_sided,
                result.p_two_sided < 0.05 ? "significant" : "not significant");
  } catch (const ZeroVarianceError&) {
    std::cout << "paired t-test on " << metric
              << ": undefined (zero variance: every paired difference is identical)\n";
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  RunResults results;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("seed_metrics_", 0) != 0 || entry.path().extension() != ".csv") continue;
    std::string stem = name.substr(std::string("seed_metrics_").size());
    stem = stem.substr(0, stem.size() - 4);
    MethodTraitCell cell;
    bool recognized = false;
    for (HeadKind h : {HeadKind::Coral, HeadKind::Nominal, HeadKind::Regression}) {
      const std::string prefix = std::string(head_kind_name(h)) + "_";
      if (stem.rfind(prefix, 0) == 0) {
        cell.head = h;
        cell.trait = trait_from_name(stem.substr(prefix.size()));
        recognized = true;
        break;
      }
    }
    if (!recognized) continue;
    const SeedMetricsFile metrics = parse_seed_metrics_csv(read_file(entry.path().string()));
    for (std::size_t i = 0; i < metrics.seeds.size(); ++i) {
      SeedOutcome outcome;
      outcome.seed = metrics.seeds[i];
      outcome.test_report.qwk = metrics.by_metric.at("qwk")[i];
      outcome.test_report.qwk_band = qwk_band(outcome.test_report.qwk);
      outcome.test_report.weighted_f1 = metrics.by_metric.at("weighted_f1")[i];
      if (i < metrics.by_metric.at("kendall_tau").size()) {
        outcome.test_report.kendall_tau = metrics.by_metric.at("kendall_tau")[i];
      }
      cell.outcomes.push_back(outcome);
    }
    results.cells.push_back(std::move(cell));
  }
  if (results.cells.empty()) {
    throw ConfigError("no seed_metrics_*.csv files found in " + run_dir);
  }
  std::sort(results.cells.begin(), results.cells.end(),
            [](const MethodTraitCell& a, const MethodTraitCell& b) {
              if (a.trait != b.trait) return static_cast<int>(a.trait) < static_cast<int>(b.trait);
              return static_cast<int>(a.head) < static_cast<int>(b.head);
            });
  write_file(fs::path(run_dir) / "results.csv", results_csv(results));
  write_file(fs::path(run_dir) / "table.txt", results_table(results));
  std::cout << results_table(results);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trait-based essay scoring toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trait;
  std::string head;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string checkpoint_path;
  double grid_step = 0.0;

  auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a corpus");
  ingest->add_option("--config", config_path, "experiment config file")->required();
  ingest->add_option("--out", out, "output directory");

  auto* split_cmd = app.add_subcommand("split", "write the train/val/test manifest");
  split_cmd->add_option("--config", config_path, "experiment config file")->required();
  split_cmd->add_option("--out", out, "output directory");

  auto* train_cmd = app.add_subcommand("train", "train, tune, and evaluate heads over seeds");
  train_cmd->add_option("--config", config_path, "experiment config file")->required();
  train_cmd->add_option("--trait", trait, "restrict to one trait");
  train_cmd->add_option("--head", head, "coral|nominal|regression");
  train_cmd->add_option("--seed", seeds, "single seed")->expected(1);
  train_cmd->add_option("--seeds", [&seeds](const std::vector<std::string>& vals) {
    for (const std::string& v : vals) {
      std::stringstream ss(v);
      std::string part;
      while (std::getline(ss, part, ',')) {
        if (!part.empty()) seeds.push_back(std::strtoull(part.c_str(), nullptr, 10));
      }
    }
    return true;
  }, "comma-separated seed list");
  train_cmd->add_option("--grid-step", grid_step, "cutoff grid resolution");
  train_cmd->add_option("--out", out, "run directory (defaults to hash+timestamp)");

  auto* tune_cmd = app.add_subcommand("tune", "re-run cutoff search for a checkpoint");
  tune_cmd->add_option("--config", config_path, "experiment config file")->required();
  tune_cmd->add_option("--trait", trait, "trait the checkpoint was trained on");
  tune_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  tune_cmd->add_option("--grid-step", grid_step, "cutoff grid resolution");
  tune_cmd->add_option("--out", out, "write updated checkpoint here instead of in place");

  auto* eval_cmd = app.add_subcommand("eval", "apply a checkpoint to the test split");
  eval_cmd->add_option("--config", config_path, "experiment config file")->required();
  eval_cmd->add_option("--trait", trait, "trait the checkpoint was trained on");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--out", out, "metrics csv path");

  std::string split_name = "test";
  int limit = 0;
  int reps = 0;
  auto* llm_cmd = app.add_subcommand("llm-score", "score essays through the LLM pipeline");
  llm_cmd->add_option("--config", config_path, "experiment config file")->required();
  llm_cmd->add_option("--trait", trait, "trait to score");
  llm_cmd->add_option("--split", split_name, "train|val|test (default test)");
  llm_cmd->add_option("--limit", limit, "score at most this many essays");
  llm_cmd->add_option("--reps", reps, "repetitions (overrides config)");
  llm_cmd->add_option("--out", out, "output directory");

  std::string a_path;
  std::string b_path;
  std::string metric = "qwk";
  auto* ttest_cmd = app.add_subcommand("ttest", "paired t-test between two seed-metrics files");
  ttest_cmd->add_option("--a", a_path, "first seed metrics csv")->required();
  ttest_cmd->add_option("--b", b_path, "second seed metrics csv")->required();
  ttest_cmd->add_option("--metric", metric, "qwk|weighted_f1|kendall_tau");

  std::string run_dir;
  auto* report_cmd = app.add_subcommand("report", "render results table from a run directory");
  report_cmd->add_option("--run", run_dir, "run directory with seed_metrics files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(config_path, out);
    if (*split_cmd) return cmd_split(config_path, out);
    if (*train_cmd) return cmd_train(config_path, trait, head, seeds, grid_step, out);
    if (*tune_cmd) return cmd_tune(config_path, trait, checkpoint_path, grid_step, out);
    if (*eval_cmd) return cmd_eval(config_path, trait, checkpoint_path, out);
    if (*llm_cmd) return cmd_llm_score(config_path, trait, split_name, limit, reps, out);
    if (*ttest_cmd) return cmd_ttest(a_path, b_path, metric);
    if (*report_cmd) return cmd_report(run_dir);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
