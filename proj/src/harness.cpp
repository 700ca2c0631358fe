#include "traitscore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "traitscore/features.hpp"

namespace traitscore {
namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void require_not_test(const TaggedDataset& ds, const char* role) {
  if (ds.origin == SplitKind::Test) {
    throw LabelProvenanceError(std::string("test-split labels must not reach ") + role +
                               "; only validation labels may drive selection");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open file: " + path);
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

PreparedData prepare_datasets(const Corpus& corpus, const SplitAssignment& assignment, Trait trait,
                              const ExperimentConfig& cfg) {
  PreparedData prepared;
  prepared.train.origin = SplitKind::Train;
  prepared.val.origin = SplitKind::Val;
  prepared.test.origin = SplitKind::Test;
  prepared.train_ids = assignment.ids_for(SplitKind::Train, corpus);
  prepared.val_ids = assignment.ids_for(SplitKind::Val, corpus);
  prepared.test_ids = assignment.ids_for(SplitKind::Test, corpus);

  auto fill_bands = [&](const std::vector<std::string>& ids, Dataset& ds) {
    ds.bands.reserve(ids.size());
    for (const std::string& id : ids) ds.bands.push_back(corpus.find(id)->band(trait));
  };
  fill_bands(prepared.train_ids, prepared.train.data);
  fill_bands(prepared.val_ids, prepared.val.data);
  fill_bands(prepared.test_ids, prepared.test.data);

  if (cfg.encoder.kind == EncoderKind::HashedNgram) {
    std::vector<std::string> train_texts;
    train_texts.reserve(prepared.train_ids.size());
    for (const std::string& id : prepared.train_ids) {
      train_texts.push_back(corpus.find(id)->text);
    }
    prepared.fitted_encoder = fit_idf(train_texts, cfg.encoder);
    auto fill = [&](const std::vector<std::string>& ids, Dataset& ds) {
      ds.features.reserve(ids.size());
      for (const std::string& id : ids) {
        ds.features.push_back(encode(corpus.find(id)->text, prepared.fitted_encoder));
      }
    };
    fill(prepared.train_ids, prepared.train.data);
    fill(prepared.val_ids, prepared.val.data);
    fill(prepared.test_ids, prepared.test.data);
  } else {
    const EmbeddingTable table =
        load_external_embeddings(read_file(cfg.embeddings_path), cfg.encoder.dim);
    auto fill = [&](const std::vector<std::string>& ids, Dataset& ds) {
      ds.features.reserve(ids.size());
      for (const std::string& id : ids) ds.features.push_back(embedding_for(table, id));
    };
    fill(prepared.train_ids, prepared.train.data);
    fill(prepared.val_ids, prepared.val.data);
    fill(prepared.test_ids, prepared.test.data);
  }
  return prepared;
}

std::pair<Checkpoint, TrainHistory> train_head(HeadKind kind, const TaggedDataset& train_data,
                                               const TaggedDataset& val_data,
                                               const TrainConfig& cfg) {
  require_not_test(train_data, "training");
  require_not_test(val_data, "checkpoint selection");
  TrainConfig effective = cfg;
  if (kind == HeadKind::Coral) {
    effective.pos_weights = compute_pos_weights(train_data.data.bands);
  }
  return train(kind, train_data.data, val_data.data, effective);
}

TuneResult tune_checkpoint(const Checkpoint& ckpt, const TaggedDataset& val_data, double grid_step) {
  require_not_test(val_data, "cutoff tuning");
  if (ckpt.kind != HeadKind::Coral) {
    throw std::invalid_argument("cutoff tuning applies to coral checkpoints only");
  }
  const OrdinalHead head = coral_from_checkpoint(ckpt);
  std::vector<ThresholdProbs> probs(val_data.data.size());
  for (std::size_t i = 0; i < val_data.data.size(); ++i) {
    probs[i] = coral_forward(head, val_data.data.features[i]).probs;
  }
  return tune_cutoffs(probs, val_data.data.bands, grid_step);
}

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const Dataset& data) {
  const std::vector<Band> preds = predict_all(ckpt, data.features);
  return compute_report(preds, data.bands);
}

std::string metrics_csv(const MetricReport& report) {
  std::string out = "metric,value\n";
  out += "qwk," + fmt17(report.qwk) + '\n';
  out += "qwk_band," + std::string(agreement_name(report.qwk_band.label)) +
         (report.qwk_band.negative ? " (negative)" : "") + '\n';
  out += "weighted_f1," + fmt17(report.weighted_f1) + '\n';
  out += "kendall_tau," + (report.kendall_tau ? fmt17(*report.kendall_tau) : std::string()) + '\n';
  out += "n," + std::to_string(report.n) + '\n';
  return out;
}

std::vector<double> MethodTraitCell::metric_values(const std::string& metric) const {
  std::vector<double> values;
  for (const SeedOutcome& outcome : outcomes) {
    if (outcome.failed) continue;
    if (metric == "qwk") {
      values.push_back(outcome.test_report.qwk);
    } else if (metric == "weighted_f1") {
      values.push_back(outcome.test_report.weighted_f1);
    } else if (metric == "kendall_tau") {
      if (outcome.test_report.kendall_tau) values.push_back(*outcome.test_report.kendall_tau);
    } else {
      throw std::invalid_argument("unknown metric '" + metric + "'");
    }
  }
  return values;
}

RunResults multi_seed_run(const ExperimentConfig& cfg, const Corpus& corpus) {
  const SplitAssignment assignment =
      split(corpus, cfg.split_counts, cfg.split_seed, cfg.stratify_trait);
  RunResults results;
  for (Trait trait : cfg.traits) {
    const PreparedData prepared = prepare_datasets(corpus, assignment, trait, cfg);
    for (HeadKind head : cfg.heads) {
      MethodTraitCell cell;
      cell.head = head;
      cell.trait = trait;
      for (std::uint64_t seed : cfg.seeds) {
        SeedOutcome outcome;
        outcome.seed = seed;
        try {
          TrainConfig train_cfg = cfg.train;
          train_cfg.seed = seed;
          auto [ckpt, history] = train_head(head, prepared.train, prepared.val, train_cfg);
          outcome.checkpoint = ckpt;
          outcome.test_report = evaluate_checkpoint(ckpt, prepared.test.data);
        } catch (const std::exception& err) {
          outcome.failed = true;
          outcome.error = err.what();
        }
        cell.outcomes.push_back(std::move(outcome));
      }
      results.cells.push_back(std::move(cell));
    }
  }
  return results;
}

namespace {

struct AggregateRow {
  std::optional<RunAggregate> agg;  // nullopt for k == 1
  double single_value = 0.0;
  int k = 0;
};

AggregateRow aggregate_metric(const MethodTraitCell& cell, const std::string& metric) {
  AggregateRow row;
  const std::vector<double> values = cell.metric_values(metric);
  row.k = static_cast<int>(values.size());
  if (values.size() >= 2) {
    row.agg = aggregate(values);
  } else if (values.size() == 1) {
    row.single_value = values.front();
  }
  return row;
}

}  // namespace

std::string results_csv(const RunResults& results) {
  std::string out = "method,trait,metric,mean,std,k\n";
  for (const MethodTraitCell& cell : results.cells) {
    for (const char* metric : {"qwk", "weighted_f1", "kendall_tau"}) {
      const AggregateRow row = aggregate_metric(cell, metric);
      out += std::string(head_kind_name(cell.head)) + ',' + std::string(trait_name(cell.trait)) +
             ',' + metric + ',';
      if (row.agg) {
        out += fmt17(row.agg->mean) + ',' + fmt17(row.agg->stddev) + ',' + std::to_string(row.agg->k);
      } else if (row.k == 1) {
        out += fmt17(row.single_value) + ",,1";
      } else {
        out += ",,0";
      }
      out += '\n';
    }
  }
  return out;
}

std::string results_table(const RunResults& results) {
  // Column per trait present in the results, row per method.
  std::vector<Trait> traits;
  std::vector<HeadKind> heads;
  for (const MethodTraitCell& cell : results.cells) {
    if (std::find(traits.begin(), traits.end(), cell.trait) == traits.end()) {
      traits.push_back(cell.trait);
    }
    if (std::find(heads.begin(), heads.end(), cell.head) == heads.end()) {
      heads.push_back(cell.head);
    }
  }
  auto find_cell = [&](HeadKind h, Trait t) -> const MethodTraitCell* {
    for (const MethodTraitCell& cell : results.cells) {
      if (cell.head == h && cell.trait == t) return &cell;
    }
    return nullptr;
  };

  constexpr int kMethodWidth = 14;
  constexpr int kCellWidth = 18;
  std::ostringstream out;
  for (const auto& [metric, title] :
       std::vector<std::pair<std::string, std::string>>{{"qwk", "QWK"},
                                                        {"weighted_f1", "Weighted F1"}}) {
    out << "== " << title << " ==\n";
    out << std::left;
    out.width(kMethodWidth);
    out << "method";
    for (Trait t : traits) {
      out.width(kCellWidth);
      out << trait_display_name(t);
    }
    out << '\n';
    for (HeadKind h : heads) {
      out.width(kMethodWidth);
      out << head_kind_name(h);
      for (Trait t : traits) {
        std::string cell_text = "-";
        if (const MethodTraitCell* cell = find_cell(h, t)) {
          const AggregateRow row = aggregate_metric(*cell, metric);
          if (row.agg) {
            cell_text = fmt2(row.agg->mean) + " ± " + fmt2(row.agg->stddev);
          } else if (row.k == 1) {
            cell_text = fmt2(row.single_value) + " (single run)";
          } else {
            cell_text = "failed";
          }
        }
        // The ± glyph is two bytes; pad on display width.
        int pad = kCellWidth - static_cast<int>(cell_text.size());
        if (cell_text.find("±") != std::string::npos) pad += 1;
        out << cell_text << std::string(std::max(1, pad), ' ');
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

std::string seed_metrics_csv(const MethodTraitCell& cell) {
  std::string out = "seed,qwk,weighted_f1,kendall_tau\n";
  for (const SeedOutcome& outcome : cell.outcomes) {
    if (outcome.failed) continue;
    out += std::to_string(outcome.seed) + ',' + fmt17(outcome.test_report.qwk) + ',' +
           fmt17(outcome.test_report.weighted_f1) + ',' +
           (outcome.test_report.kendall_tau ? fmt17(*outcome.test_report.kendall_tau)
                                            : std::string()) +
           '\n';
  }
  return out;
}

SeedMetricsFile parse_seed_metrics_csv(std::string_view text) {
  SeedMetricsFile file;
  file.by_metric["qwk"] = {};
  file.by_metric["weighted_f1"] = {};
  file.by_metric["kendall_tau"] = {};
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("seed,", 0) != 0) {
    throw ConfigError("seed metrics file lacks the expected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<std::string> parts;
    while (std::getline(fields, field, ',')) parts.push_back(field);
    while (parts.size() < 4) parts.emplace_back();
    file.seeds.push_back(std::strtoull(parts[0].c_str(), nullptr, 10));
    file.by_metric["qwk"].push_back(std::strtod(parts[1].c_str(), nullptr));
    file.by_metric["weighted_f1"].push_back(std::strtod(parts[2].c_str(), nullptr));
    if (!parts[3].empty()) {
      file.by_metric["kendall_tau"].push_back(std::strtod(parts[3].c_str(), nullptr));
    }
  }
  return file;
}

}  // namespace traitscore
