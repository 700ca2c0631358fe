#include "traitscore/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "common/synthetic.hpp"
#include "doctest.h"

using namespace traitscore;
using namespace traitscore::testing;

namespace {

std::string fixture_path(const char* name) {
  return std::string(TRAITSCORE_TEST_DATA) + "/" + name;
}

std::string read_fixture(const char* name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Builds a small text corpus whose wording tracks the band, so hashed n-gram
// features carry signal.
Corpus worded_corpus(std::size_t n) {
  const char* snippets[3] = {
      "it was ok i guess computers fine maybe stuff",
      "computers help with homework and balance screen time at school",
      "the evidence decisively demonstrates profound societal advantages of computers",
  };
  std::vector<EssayRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    const int band = static_cast<int>(i % 3);
    EssayRecord rec;
    rec.id = "w" + std::to_string(i);
    rec.prompt_id = 1;
    rec.text = std::string(snippets[band]) + " variant " + std::to_string(i / 3);
    for (Trait t : kAllTraits) rec.raw_scores[t] = band * 2 + 1 + static_cast<int>(i % 2);
    records.push_back(std::move(rec));
  }
  return Corpus(std::move(records));
}

ExperimentConfig smoke_config() {
  ExperimentConfig cfg = ExperimentConfig::load(fixture_path("smoke_config.ini"));
  cfg.corpus_path = fixture_path("smoke_corpus.tsv");
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
  const ConfigFile file = ConfigFile::parse(
      "# comment\n"
      "[train]\n"
      "learning_rate = 0.25\n"
      "batch_size=16\n"
      "\n"
      "[run]\n"
      "traits = content, organization\n",
      "test.ini");
  CHECK(file.get_double_or("train", "learning_rate", 0.0) == doctest::Approx(0.25));
  CHECK(file.get_int("train", "batch_size") == 16);
  CHECK(file.get_string("run", "traits") == "content, organization");
  CHECK(file.get_int_or("train", "missing", 7) == 7);
  CHECK_FALSE(file.has("train", "missing"));
}

TEST_CASE("config errors carry file, section, and key") {
  const ConfigFile file = ConfigFile::parse("[train]\nlearning_rate = fast\n", "exp.ini");
  try {
    file.get_double_or("train", "learning_rate", 0.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("exp.ini") != std::string::npos);
    CHECK(msg.find("[train]") != std::string::npos);
    CHECK(msg.find("learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(ConfigFile::parse("[broken\n", "x.ini"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("keyless value\n", "x.ini"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/path.ini"), ConfigError);
}

TEST_CASE("experiment config resolves the smoke fixture") {
  const ExperimentConfig cfg = smoke_config();
  CHECK(cfg.split_counts.n_train == 18);
  CHECK(cfg.split_counts.n_val == 6);
  CHECK(cfg.split_counts.n_test == 6);
  CHECK(cfg.encoder.dim == 256);
  CHECK(cfg.train.eval_interval == 3);
  CHECK(cfg.traits == std::vector<Trait>{Trait::Content});
  CHECK(cfg.heads == std::vector<HeadKind>{HeadKind::Coral});
  CHECK(cfg.schema.filter_prompt_id == 1);
}

TEST_CASE("config content hash is stable and content sensitive") {
  const ConfigFile a = ConfigFile::parse("[x]\nk = 1\n");
  const ConfigFile b = ConfigFile::parse("# different comment\n[x]\nk = 1\n");
  const ConfigFile c = ConfigFile::parse("[x]\nk = 2\n");
  CHECK(config_content_hash(a) == config_content_hash(b));
  CHECK(config_content_hash(a) != config_content_hash(c));
  CHECK(config_content_hash(a).size() == 16);
}

TEST_CASE("idf fitting sees only the training split") {
  ExperimentConfig cfg = smoke_config();
  cfg.encoder.dim = 512;
  const Corpus base = worded_corpus(30);
  cfg.split_counts = {18, 6, 6};

  // Same corpus with the val/test essays' texts perturbed: identical train
  // split must produce an identical idf table.
  const SplitAssignment assignment = split(base, cfg.split_counts, cfg.split_seed);
  std::vector<EssayRecord> perturbed;
  for (const EssayRecord& rec : base.records()) {
    EssayRecord copy = rec;
    if (assignment.of(rec.id) != SplitKind::Train) {
      copy.text += " perturbed wording that must not leak into fitting";
    }
    perturbed.push_back(std::move(copy));
  }
  const Corpus other(std::move(perturbed));

  const PreparedData a = prepare_datasets(base, assignment, Trait::Content, cfg);
  const PreparedData b = prepare_datasets(other, assignment, Trait::Content, cfg);
  CHECK(a.fitted_encoder.idf == b.fitted_encoder.idf);
  CHECK(a.train_ids.size() == 18);
  CHECK(a.val_ids.size() == 6);
  CHECK(a.test_ids.size() == 6);
}

TEST_CASE("external embeddings feed the datasets by essay id") {
  ExperimentConfig cfg = smoke_config();
  cfg.encoder.kind = EncoderKind::External;
  cfg.encoder.dim = 3;
  const Corpus corpus = worded_corpus(12);
  cfg.split_counts = {6, 3, 3};

  // Embedding file keyed by id: value encodes the record index.
  std::string file;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    file += corpus.at(i).id + "\t" + std::to_string(i) + ".0,0.5,-1.0\n";
  }
  const std::string path =
      (std::filesystem::temp_directory_path() / "traitscore_test_embeddings.tsv").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << file;
  }
  cfg.embeddings_path = path;

  const SplitAssignment assignment = split(corpus, cfg.split_counts, 2);
  const PreparedData prepared = prepare_datasets(corpus, assignment, Trait::Content, cfg);
  REQUIRE(prepared.train.data.size() == 6);
  REQUIRE(prepared.train.data.dim() == 3);
  // Features line up with the ids, not with split position.
  for (std::size_t i = 0; i < prepared.train_ids.size(); ++i) {
    const std::string& id = prepared.train_ids[i];
    const double expected = std::strtod(id.c_str() + 1, nullptr);  // "w<k>"
    CHECK(prepared.train.data.features[i][0] == doctest::Approx(expected));
  }

  // A corpus id missing from the file is an error at preparation time.
  cfg.embeddings_path = path;
  std::vector<EssayRecord> extra(corpus.records());
  EssayRecord unknown;
  unknown.id = "unmapped";
  unknown.prompt_id = 1;
  unknown.text = "text";
  for (Trait t : kAllTraits) unknown.raw_scores[t] = 3;
  extra.push_back(unknown);
  const Corpus bigger(std::move(extra));
  const SplitAssignment assignment2 = split(bigger, SplitCounts{7, 3, 3}, 2);
  CHECK_THROWS_AS(prepare_datasets(bigger, assignment2, Trait::Content, cfg), MissingIdError);
}

TEST_CASE("training and tuning refuse test-tagged data") {
  const SyntheticSplits data = make_ordered_synthetic(8, 60, 20, 20, 13, 3.0);
  TaggedDataset train_ds{data.train, SplitKind::Train};
  TaggedDataset val_ds{data.val, SplitKind::Val};
  TaggedDataset test_ds{data.test, SplitKind::Test};
  TrainConfig cfg;
  cfg.eval_interval = 5;
  cfg.cutoff_grid_step = 0.05;

  CHECK_THROWS_AS(train_head(HeadKind::Coral, test_ds, val_ds, cfg), LabelProvenanceError);
  CHECK_THROWS_AS(train_head(HeadKind::Coral, train_ds, test_ds, cfg), LabelProvenanceError);

  const auto [ckpt, history] = train_head(HeadKind::Coral, train_ds, val_ds, cfg);
  CHECK(ckpt.dim == 8);
  CHECK_THROWS_AS(tune_checkpoint(ckpt, test_ds), LabelProvenanceError);
  const TuneResult tuned = tune_checkpoint(ckpt, val_ds, 0.05);
  CHECK(tuned.qwk >= 0.0);

  const MetricReport report = evaluate_checkpoint(ckpt, test_ds.data);
  CHECK(report.n == 20);
}

TEST_CASE("metrics csv bytes are deterministic") {
  const SyntheticSplits data = make_ordered_synthetic(8, 60, 20, 20, 17, 3.0);
  TrainConfig cfg;
  cfg.eval_interval = 5;
  cfg.cutoff_grid_step = 0.05;
  const auto [ckpt, history] =
      train_head(HeadKind::Coral, {data.train, SplitKind::Train}, {data.val, SplitKind::Val}, cfg);
  const std::string once = metrics_csv(evaluate_checkpoint(ckpt, data.test));
  const std::string twice = metrics_csv(evaluate_checkpoint(ckpt, data.test));
  CHECK(once == twice);
  CHECK(once.find("qwk,") != std::string::npos);
  CHECK(once.find("weighted_f1,") != std::string::npos);
  CHECK(once.find("kendall_tau,") != std::string::npos);
}

TEST_CASE("multi_seed_run aggregates per-seed outcomes deterministically") {
  ExperimentConfig cfg = smoke_config();
  cfg.seeds = {1, 2, 3};
  const Corpus corpus = parse_corpus(read_fixture("smoke_corpus.tsv"), cfg.schema);

  const RunResults first = multi_seed_run(cfg, corpus);
  REQUIRE(first.cells.size() == 1);
  REQUIRE(first.cells[0].outcomes.size() == 3);
  for (const SeedOutcome& outcome : first.cells[0].outcomes) {
    INFO("seed ", outcome.seed, " error: ", outcome.error);
    CHECK_FALSE(outcome.failed);
  }

  const RunResults second = multi_seed_run(cfg, corpus);
  CHECK(results_csv(first) == results_csv(second));

  const std::string csv = results_csv(first);
  CHECK(csv.find("coral,content,qwk,") != std::string::npos);
  CHECK(csv.rfind("method,trait,metric,mean,std,k\n", 0) == 0);

  const std::string table = results_table(first);
  CHECK(table.find("== QWK ==") != std::string::npos);
  CHECK(table.find("±") != std::string::npos);
}

TEST_CASE("single-seed runs omit the aggregate") {
  ExperimentConfig cfg = smoke_config();
  cfg.seeds = {1};
  const Corpus corpus = parse_corpus(read_fixture("smoke_corpus.tsv"), cfg.schema);
  const RunResults results = multi_seed_run(cfg, corpus);
  const std::string csv = results_csv(results);
  CHECK(csv.find(",,1\n") != std::string::npos);  // single value, empty std
  const std::string table = results_table(results);
  CHECK(table.find("(single run)") != std::string::npos);
}

TEST_CASE("seed metrics files round-trip") {
  MethodTraitCell cell;
  cell.head = HeadKind::Coral;
  cell.trait = Trait::Content;
  for (int i = 0; i < 3; ++i) {
    SeedOutcome outcome;
    outcome.seed = static_cast<std::uint64_t>(i + 1);
    outcome.test_report.qwk = 0.5 + 0.01 * i;
    outcome.test_report.weighted_f1 = 0.7 + 0.01 * i;
    outcome.test_report.kendall_tau = 0.6 + 0.01 * i;
    outcome.test_report.n = 20;
    cell.outcomes.push_back(outcome);
  }
  const std::string csv = seed_metrics_csv(cell);
  const SeedMetricsFile parsed = parse_seed_metrics_csv(csv);
  REQUIRE(parsed.seeds.size() == 3);
  CHECK(parsed.seeds[2] == 3);
  CHECK(parsed.by_metric.at("qwk")[1] == doctest::Approx(0.51));
  CHECK(parsed.by_metric.at("weighted_f1")[0] == doctest::Approx(0.7));
  CHECK(parsed.by_metric.at("kendall_tau")[2] == doctest::Approx(0.62));
  CHECK(cell.metric_values("qwk") == parsed.by_metric.at("qwk"));

  CHECK_THROWS_AS(parse_seed_metrics_csv("bogus\n"), ConfigError);
}
