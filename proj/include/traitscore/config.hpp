#ifndef TRAITSCORE_CONFIG_HPP
#define TRAITSCORE_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "traitscore/corpus.hpp"
#include "traitscore/features.hpp"
#include "traitscore/llm.hpp"
#include "traitscore/ordinal.hpp"

namespace traitscore {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sectioned key-value text:
//   # comment
//   [section]
//   key = value
// Values keep inner whitespace; surrounding whitespace is trimmed.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, const std::string& source_name = "<config>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int_or(const std::string& section, const std::string& key, long fallback) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }
  const std::string& source_name() const { return source_name_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string source_name_;

  const std::string* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& what) const;
};

// Fully resolved experiment settings; see docs/ examples for the grammar.
struct ExperimentConfig {
  // [corpus]
  std::string corpus_path;
  CorpusSchema schema;

  // [split]
  SplitCounts split_counts;
  std::uint64_t split_seed = 7;
  std::optional<Trait> stratify_trait;

  // [encoder]
  EncoderSpec encoder;
  std::string embeddings_path;  // EncoderKind::External

  // [train]
  TrainConfig train;

  // [llm]
  std::optional<LlmConfig> llm;
  std::string prompt_assets_dir;
  std::string llm_role_text;
  std::string llm_task_text;

  // [run]
  std::vector<Trait> traits;
  std::vector<HeadKind> heads;
  std::vector<std::uint64_t> seeds;
  int reps = 6;
  std::string out_dir = "runs";

  static ExperimentConfig from_file(const ConfigFile& file);
  static ExperimentConfig load(const std::string& path);
};

// FNV-1a over the canonicalized section/key/value content; used to name run
// directories.
std::string config_content_hash(const ConfigFile& file);

}  // namespace traitscore

#endif  // TRAITSCORE_CONFIG_HPP
