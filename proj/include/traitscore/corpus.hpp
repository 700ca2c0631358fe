#ifndef TRAITSCORE_CORPUS_HPP
#define TRAITSCORE_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace traitscore {

// Three ordered performance bands obtained by collapsing the 6-point scale.
enum class Band : int { Weak = 1, Fair = 2, Strong = 3 };

constexpr std::array<Band, 3> kAllBands{Band::Weak, Band::Fair, Band::Strong};

inline int ordinal(Band b) { return static_cast<int>(b); }

struct OutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Band band_from_ordinal(int value);           // 1..3, else OutOfRangeError
Band map_band(int raw_score);                // 1,2 -> Weak; 3,4 -> Fair; 5,6 -> Strong
std::string_view band_label(Band b);         // "weak" / "fair" / "strong"
Band band_from_label(std::string_view label);  // case-insensitive

// The five analytic scoring dimensions of the corpus.
enum class Trait { Content, Organization, WordChoice, SentenceFluency, Conventions };

constexpr std::array<Trait, 5> kAllTraits{Trait::Content, Trait::Organization, Trait::WordChoice,
                                          Trait::SentenceFluency, Trait::Conventions};

struct UnknownTraitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string_view trait_name(Trait t);          // "content", "word_choice", ...
std::string_view trait_display_name(Trait t);  // "Content", "Word choice", ...
Trait trait_from_name(std::string_view name);  // accepts name or display name

// One student essay with its per-trait raw scores on the original 1-6 scale.
struct EssayRecord {
  std::string id;
  int prompt_id = 0;
  std::string text;                // verbatim except trailing-whitespace trim
  std::map<Trait, int> raw_scores;

  Band band(Trait t) const;  // UnknownTraitError when the trait is absent
};

struct DuplicateIdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingColumnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadEncodingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedRowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable essay collection with unique nonempty ids.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<EssayRecord> records);  // validates invariants

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<EssayRecord>& records() const { return records_; }
  const EssayRecord& at(std::size_t i) const { return records_.at(i); }
  const EssayRecord* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

 private:
  std::vector<EssayRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Column-name mapping for the TSV corpus format. Defaults follow the ASAP++
// release; the harness config can override any of them.
struct CorpusSchema {
  std::string id_column = "essay_id";
  std::string prompt_column = "essay_set";
  std::string text_column = "essay";
  std::map<Trait, std::string> trait_columns = {
      {Trait::Content, "content"},
      {Trait::Organization, "organization"},
      {Trait::WordChoice, "word_choice"},
      {Trait::SentenceFluency, "sentence_fluency"},
      {Trait::Conventions, "conventions"},
  };
  std::optional<int> filter_prompt_id;  // keep only rows from this prompt
  bool skip_bad_rows = false;           // skip-and-warn instead of throwing
};

// Parses a header-bearing UTF-8 TSV into a corpus. Rows from other prompts
// are dropped before score validation when filter_prompt_id is set. In
// skip_bad_rows mode, rows with missing or invalid scores are skipped and a
// warning is recorded; structural defects (missing columns, bad encoding,
// duplicate ids) always throw.
Corpus parse_corpus(std::string_view raw_bytes, const CorpusSchema& schema,
                    std::vector<std::string>* warnings = nullptr);

// Canonical TSV writer: header in schema order, one row per record.
// parse_corpus(write_corpus_tsv(c)) reproduces c bit-exactly. Fields must not
// contain tabs or newlines (TSV cannot carry them); MalformedRowError otherwise.
std::string write_corpus_tsv(const Corpus& corpus, const CorpusSchema& schema);

enum class SplitKind { Train, Val, Test };

std::string_view split_kind_name(SplitKind k);
SplitKind split_kind_from_name(std::string_view name);

struct SplitCounts {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;

  std::size_t total() const { return n_train + n_val + n_test; }
  std::size_t of(SplitKind k) const;
};

struct CountMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SplitAssignment {
  std::unordered_map<std::string, SplitKind> by_id;
  SplitCounts counts;

  SplitKind of(std::string_view id) const;  // OutOfRangeError for unknown id
  // Ids of one split in corpus order.
  std::vector<std::string> ids_for(SplitKind k, const Corpus& corpus) const;
};

// Seeded uniform shuffle of row order followed by contiguous slicing into
// train/val/test. With stratify_trait, per-band proportions in each split
// match the corpus within one essay per band. Deterministic across platforms
// for a fixed (corpus order, counts, seed).
SplitAssignment split(const Corpus& corpus, const SplitCounts& counts, std::uint64_t seed,
                      std::optional<Trait> stratify_trait = std::nullopt);

std::map<Band, std::size_t> class_distribution(const Corpus& corpus, Trait trait);

// Manifest format: one "essay_id<TAB>split" line per record, corpus order.
std::string write_split_manifest(const SplitAssignment& assignment, const Corpus& corpus);
SplitAssignment parse_split_manifest(std::string_view text);

}  // namespace traitscore

#endif  // TRAITSCORE_CORPUS_HPP
