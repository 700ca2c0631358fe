#include "traitscore/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "traitscore/features.hpp"

namespace traitscore {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t comma = value.find(',', start);
    std::string part = trim(comma == std::string::npos ? value.substr(start)
                                                       : value.substr(start, comma - start));
    if (!part.empty()) parts.push_back(std::move(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source_name) {
  ConfigFile file;
  file.source_name_ = source_name;
  std::string section;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string line = trim(nl == std::string_view::npos ? text.substr(start)
                                                         : text.substr(start, nl - start));
    ++line_no;
    if (!line.empty() && line[0] != '#' && line[0] != ';') {
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw ConfigError(source_name + ":" + std::to_string(line_no) + ": malformed section header");
        }
        section = trim(std::string_view(line).substr(1, line.size() - 2));
      } else {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
          throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
          throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key");
        }
        file.sections_[section][key] = value;
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return file;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(content, path);
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

void ConfigFile::fail(const std::string& section, const std::string& key,
                      const std::string& what) const {
  throw ConfigError(source_name_ + ": [" + section + "] " + key + ": " + what);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required setting");
  return *v;
}

std::string ConfigFile::get_string_or(const std::string& section, const std::string& key,
                                      const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

long ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required setting");
  char* end = nullptr;
  const long value = std::strtol(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size()) fail(section, key, "not an integer: '" + *v + "'");
  return value;
}

long ConfigFile::get_int_or(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double ConfigFile::get_double_or(const std::string& section, const std::string& key,
                                 double fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  char* end = nullptr;
  const double value = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size()) fail(section, key, "not a number: '" + *v + "'");
  return value;
}

bool ConfigFile::get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  fail(section, key, "not a boolean: '" + *v + "'");
}

ExperimentConfig ExperimentConfig::from_file(const ConfigFile& file) {
  ExperimentConfig cfg;

  cfg.corpus_path = file.get_string_or("corpus", "path", "");
  cfg.schema.id_column = file.get_string_or("corpus", "id_column", cfg.schema.id_column);
  cfg.schema.prompt_column = file.get_string_or("corpus", "prompt_column", cfg.schema.prompt_column);
  cfg.schema.text_column = file.get_string_or("corpus", "text_column", cfg.schema.text_column);
  for (Trait t : kAllTraits) {
    const std::string key = std::string(trait_name(t)) + "_column";
    cfg.schema.trait_columns[t] = file.get_string_or("corpus", key, cfg.schema.trait_columns[t]);
  }
  if (file.has("corpus", "filter_prompt")) {
    cfg.schema.filter_prompt_id = static_cast<int>(file.get_int("corpus", "filter_prompt"));
  }
  cfg.schema.skip_bad_rows = file.get_bool_or("corpus", "skip_bad_rows", false);

  cfg.split_counts.n_train = static_cast<std::size_t>(file.get_int_or("split", "train", 0));
  cfg.split_counts.n_val = static_cast<std::size_t>(file.get_int_or("split", "val", 0));
  cfg.split_counts.n_test = static_cast<std::size_t>(file.get_int_or("split", "test", 0));
  cfg.split_seed = static_cast<std::uint64_t>(file.get_int_or("split", "seed", 7));
  const std::string stratify = file.get_string_or("split", "stratify", "");
  if (!stratify.empty() && stratify != "none") {
    cfg.stratify_trait = trait_from_name(stratify);
  }

  const std::string enc_kind = file.get_string_or("encoder", "kind", "hashed_ngram");
  if (enc_kind == "hashed_ngram") {
    cfg.encoder.kind = EncoderKind::HashedNgram;
  } else if (enc_kind == "external") {
    cfg.encoder.kind = EncoderKind::External;
    cfg.embeddings_path = file.get_string("encoder", "embeddings_path");
  } else {
    throw ConfigError(file.source_name() + ": [encoder] kind: unknown encoder '" + enc_kind + "'");
  }
  cfg.encoder.dim = static_cast<std::size_t>(file.get_int_or("encoder", "dim", 1L << 15));
  cfg.encoder.ngram_range.first = static_cast<int>(file.get_int_or("encoder", "ngram_low", 1));
  cfg.encoder.ngram_range.second = static_cast<int>(file.get_int_or("encoder", "ngram_high", 2));
  cfg.encoder.lowercase = file.get_bool_or("encoder", "lowercase", true);

  cfg.train.learning_rate = file.get_double_or("train", "learning_rate", 0.05);
  cfg.train.batch_size = static_cast<std::size_t>(file.get_int_or("train", "batch_size", 32));
  cfg.train.max_epochs = static_cast<int>(file.get_int_or("train", "max_epochs", 6));
  cfg.train.eval_interval = static_cast<int>(file.get_int_or("train", "eval_interval", 50));
  cfg.train.patience = static_cast<int>(file.get_int_or("train", "patience", 2));
  cfg.train.dropout_rate = file.get_double_or("train", "dropout", 0.1);
  cfg.train.cutoff_grid_step = file.get_double_or("train", "grid_step", 0.01);

  if (file.has("llm", "endpoint")) {
    LlmConfig llm;
    llm.endpoint_url = file.get_string("llm", "endpoint");
    llm.model_name = file.get_string("llm", "model");
    llm.temperature = file.get_double_or("llm", "temperature", 0.8);
    llm.max_tokens = static_cast<int>(file.get_int_or("llm", "max_tokens", 10000));
    llm.max_transport_retries = static_cast<int>(file.get_int_or("llm", "transport_retries", 3));
    llm.max_reask = static_cast<int>(file.get_int_or("llm", "reask", 2));
    llm.parallelism = static_cast<int>(file.get_int_or("llm", "parallelism", 4));
    llm.backoff_base_ms = static_cast<int>(file.get_int_or("llm", "backoff_ms", 1000));
    llm.timeout_s = static_cast<int>(file.get_int_or("llm", "timeout_s", 120));
    cfg.llm = llm;
    cfg.prompt_assets_dir = file.get_string_or("llm", "assets_dir", "prompt_assets");
    cfg.llm_role_text = file.get_string_or(
        "llm", "role_text",
        "You are an expert evaluator of students' argumentative essays. Follow the scoring rubric "
        "exactly and be fair, objective, and consistent across evaluations.");
    cfg.llm_task_text = file.get_string_or(
        "llm", "task_text",
        "You will read one argumentative essay written by a 13-year-old student and assign a score "
        "for a single writing trait. Calibrate your expectations to this age group. Score the essay "
        "only on the trait defined below, using the rubric and the example essays as reference "
        "points.");
  }

  for (const std::string& name : split_csv(file.get_string_or("run", "traits", "content"))) {
    cfg.traits.push_back(trait_from_name(name));
  }
  for (const std::string& name : split_csv(file.get_string_or("run", "heads", "coral"))) {
    cfg.heads.push_back(head_kind_from_name(name));
  }
  for (const std::string& s : split_csv(file.get_string_or("run", "seeds", "1"))) {
    cfg.seeds.push_back(static_cast<std::uint64_t>(std::strtoull(s.c_str(), nullptr, 10)));
  }
  cfg.reps = static_cast<int>(file.get_int_or("run", "reps", 6));
  cfg.out_dir = file.get_string_or("run", "out", "runs");

  if (cfg.traits.empty()) throw ConfigError("config selects no traits");
  if (cfg.seeds.empty()) throw ConfigError("config selects no seeds");
  if (cfg.reps < 1) throw ConfigError("config requires reps >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_file(ConfigFile::load(path));
}

std::string config_content_hash(const ConfigFile& file) {
  std::string canonical;
  for (const auto& [section, entries] : file.sections()) {
    for (const auto& [key, value] : entries) {
      canonical += section;
      canonical += '\x1f';
      canonical += key;
      canonical += '\x1f';
      canonical += value;
      canonical += '\n';
    }
  }
  const std::uint64_t h = stable_hash64(canonical);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace traitscore
