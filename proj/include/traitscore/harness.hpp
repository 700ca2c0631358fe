#ifndef TRAITSCORE_HARNESS_HPP
#define TRAITSCORE_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "traitscore/config.hpp"
#include "traitscore/corpus.hpp"
#include "traitscore/decoding.hpp"
#include "traitscore/metrics.hpp"
#include "traitscore/ordinal.hpp"

namespace traitscore {

struct LabelProvenanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A dataset that remembers which split it came from, so training and tuning
// can refuse test-labeled data outright.
struct TaggedDataset {
  Dataset data;
  SplitKind origin = SplitKind::Train;
};

struct PreparedData {
  TaggedDataset train;
  TaggedDataset val;
  TaggedDataset test;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  EncoderSpec fitted_encoder;  // idf fitted on training texts only
};

// Encodes the corpus for one trait under the configured encoder. Hashed
// n-gram idf tables are fitted on the training split only; external
// embeddings are joined by essay id.
PreparedData prepare_datasets(const Corpus& corpus, const SplitAssignment& assignment, Trait trait,
                              const ExperimentConfig& cfg);

// Training and cutoff tuning accept only train/val-tagged data; feeding the
// test split here is a LabelProvenanceError.
std::pair<Checkpoint, TrainHistory> train_head(HeadKind kind, const TaggedDataset& train_data,
                                               const TaggedDataset& val_data,
                                               const TrainConfig& cfg);
TuneResult tune_checkpoint(const Checkpoint& ckpt, const TaggedDataset& val_data,
                           double grid_step = 0.01);

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const Dataset& data);

// Deterministic machine-readable rendering (17 significant digits): byte
// identical across runs for identical inputs.
std::string metrics_csv(const MetricReport& report);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  MetricReport test_report;
  Checkpoint checkpoint;
};

struct MethodTraitCell {
  HeadKind head = HeadKind::Coral;
  Trait trait = Trait::Content;
  std::vector<SeedOutcome> outcomes;

  std::vector<double> metric_values(const std::string& metric) const;  // successful seeds only
};

struct RunResults {
  std::vector<MethodTraitCell> cells;
};

// One full train/tune/eval per (head, trait, seed) from the config. A failed
// seed is recorded and skipped; remaining seeds still run.
RunResults multi_seed_run(const ExperimentConfig& cfg, const Corpus& corpus);

// results.csv: method,trait,metric,mean,std,k (std empty for single runs).
std::string results_csv(const RunResults& results);

// Aligned text table, one section per displayed metric (QWK, weighted F1),
// cells as "0.59 ± 0.01"; Kendall's tau stays CSV-only.
std::string results_table(const RunResults& results);

// Per-seed metric vectors for one (head, trait) cell:
//   seed,qwk,weighted_f1,kendall_tau
std::string seed_metrics_csv(const MethodTraitCell& cell);

struct SeedMetricsFile {
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::vector<double>> by_metric;
};

SeedMetricsFile parse_seed_metrics_csv(std::string_view text);

}  // namespace traitscore

#endif  // TRAITSCORE_HARNESS_HPP
