#include "traitscore/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "traitscore/detail/rng.hpp"

namespace traitscore {
namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim_trailing_ws(std::string_view s) {
  while (!s.empty()) {
    unsigned char c = static_cast<unsigned char>(s.back());
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      s.remove_suffix(1);
    } else {
      break;
    }
  }
  return s;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    unsigned cp_min;
    if (c < 0x80) {
      i += 1;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp_min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp_min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp_min = 0x10000;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    unsigned cp = c & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (cp < cp_min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

// Parses a base-10 integer; rejects anything but an optional sign and digits.
std::optional<int> parse_int(std::string_view s) {
  s = trim_trailing_ws(s);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = (s[0] == '-');
    i = 1;
    if (i == s.size()) return std::nullopt;
  }
  long value = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    value = value * 10 + (s[i] - '0');
    if (value > 1000000000L) return std::nullopt;
  }
  return static_cast<int>(neg ? -value : value);
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  detail::fisher_yates(idx, rng);
}

}  // namespace

Band band_from_ordinal(int value) {
  if (value < 1 || value > 3) {
    throw OutOfRangeError("band ordinal " + std::to_string(value) + " not in [1,3]");
  }
  return static_cast<Band>(value);
}

Band map_band(int raw_score) {
  if (raw_score < 1 || raw_score > 6) {
    throw OutOfRangeError("raw score " + std::to_string(raw_score) + " not in [1,6]");
  }
  return static_cast<Band>((raw_score + 1) / 2);
}

std::string_view band_label(Band b) {
  switch (b) {
    case Band::Weak:
      return "weak";
    case Band::Fair:
      return "fair";
    case Band::Strong:
      return "strong";
  }
  throw OutOfRangeError("invalid band");
}

Band band_from_label(std::string_view label) {
  const std::string lc = lower_ascii(label);
  for (Band b : kAllBands) {
    if (lc == band_label(b)) return b;
  }
  throw OutOfRangeError("unknown band label: '" + std::string(label) + "'");
}

std::string_view trait_name(Trait t) {
  switch (t) {
    case Trait::Content:
      return "content";
    case Trait::Organization:
      return "organization";
    case Trait::WordChoice:
      return "word_choice";
    case Trait::SentenceFluency:
      return "sentence_fluency";
    case Trait::Conventions:
      return "conventions";
  }
  throw UnknownTraitError("invalid trait");
}

std::string_view trait_display_name(Trait t) {
  switch (t) {
    case Trait::Content:
      return "Content";
    case Trait::Organization:
      return "Organization";
    case Trait::WordChoice:
      return "Word choice";
    case Trait::SentenceFluency:
      return "Sentence fluency";
    case Trait::Conventions:
      return "Conventions";
  }
  throw UnknownTraitError("invalid trait");
}

Trait trait_from_name(std::string_view name) {
  std::string lc = lower_ascii(name);
  std::replace(lc.begin(), lc.end(), ' ', '_');
  std::replace(lc.begin(), lc.end(), '-', '_');
  for (Trait t : kAllTraits) {
    if (lc == trait_name(t)) return t;
  }
  throw UnknownTraitError("unknown trait: '" + std::string(name) + "'");
}

Band EssayRecord::band(Trait t) const {
  auto it = raw_scores.find(t);
  if (it == raw_scores.end()) {
    throw UnknownTraitError("essay '" + id + "' has no score for trait " + std::string(trait_name(t)));
  }
  return map_band(it->second);
}

Corpus::Corpus(std::vector<EssayRecord> records) : records_(std::move(records)) {
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const EssayRecord& rec = records_[i];
    if (rec.id.empty()) {
      throw MalformedRowError("record " + std::to_string(i) + " has an empty id");
    }
    if (std::string_view(rec.text).empty()) {
      throw MalformedRowError("essay '" + rec.id + "' has empty text");
    }
    for (const auto& [trait, score] : rec.raw_scores) {
      if (score < 1 || score > 6) {
        throw BadScoreError("essay '" + rec.id + "': score " + std::to_string(score) + " for " +
                            std::string(trait_name(trait)) + " not in [1,6]");
      }
    }
    if (!by_id_.emplace(rec.id, i).second) {
      throw DuplicateIdError("duplicate essay id '" + rec.id + "'");
    }
  }
}

const EssayRecord* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

Corpus parse_corpus(std::string_view raw_bytes, const CorpusSchema& schema,
                    std::vector<std::string>* warnings) {
  if (!is_valid_utf8(raw_bytes)) {
    throw BadEncodingError("corpus input is not valid UTF-8");
  }
  // Tolerate a UTF-8 BOM and CRLF line endings.
  if (raw_bytes.substr(0, 3) == "\xEF\xBB\xBF") raw_bytes.remove_prefix(3);

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= raw_bytes.size()) {
    std::size_t nl = raw_bytes.find('\n', start);
    std::string_view line =
        nl == std::string_view::npos ? raw_bytes.substr(start) : raw_bytes.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) {
    throw MalformedRowError("corpus input has no header row");
  }

  const std::vector<std::string_view> header = split_fields(lines[0]);
  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw MissingColumnError("column '" + name + "' not found in header");
  };

  const std::size_t id_col = column_index(schema.id_column);
  const std::size_t prompt_col = column_index(schema.prompt_column);
  const std::size_t text_col = column_index(schema.text_column);
  std::map<Trait, std::size_t> trait_cols;
  for (const auto& [trait, col_name] : schema.trait_columns) {
    trait_cols[trait] = column_index(col_name);
  }

  std::vector<EssayRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const std::vector<std::string_view> fields = split_fields(lines[row]);
    // In skip mode, row-level defects are recorded and the row is dropped.
    auto skipped = [&](const std::string& msg) {
      if (!schema.skip_bad_rows) return false;
      if (warnings) warnings->push_back("row " + std::to_string(row + 1) + " skipped: " + msg);
      return true;
    };
    auto row_msg = [&](const std::string& msg) { return "row " + std::to_string(row + 1) + ": " + msg; };

    if (fields.size() != header.size()) {
      const std::string msg = "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size());
      if (skipped(msg)) continue;
      throw MalformedRowError(row_msg(msg));
    }

    const std::optional<int> prompt_id = parse_int(fields[prompt_col]);
    if (!prompt_id) {
      if (skipped("prompt id is not an integer")) continue;
      throw MalformedRowError(row_msg("prompt id is not an integer"));
    }
    if (schema.filter_prompt_id && *prompt_id != *schema.filter_prompt_id) continue;

    EssayRecord rec;
    rec.id = std::string(trim_trailing_ws(fields[id_col]));
    rec.prompt_id = *prompt_id;
    rec.text = std::string(trim_trailing_ws(fields[text_col]));
    if (rec.id.empty()) {
      if (skipped("empty id")) continue;
      throw MalformedRowError(row_msg("empty id"));
    }
    if (rec.text.empty()) {
      if (skipped("empty essay text")) continue;
      throw MalformedRowError(row_msg("empty essay text"));
    }

    bool row_ok = true;
    for (const auto& [trait, col] : trait_cols) {
      const std::optional<int> score = parse_int(fields[col]);
      if (!score || *score < 1 || *score > 6) {
        const std::string msg = "row " + std::to_string(row + 1) + ", column '" +
                                schema.trait_columns.at(trait) + "': score '" +
                                std::string(fields[col]) + "' is not an integer in [1,6]";
        if (schema.skip_bad_rows) {
          if (warnings) warnings->push_back(msg + " (row skipped)");
          row_ok = false;
          break;
        }
        throw BadScoreError(msg);
      }
      rec.raw_scores[trait] = *score;
    }
    if (!row_ok) continue;
    records.push_back(std::move(rec));
  }
  return Corpus(std::move(records));
}

std::string write_corpus_tsv(const Corpus& corpus, const CorpusSchema& schema) {
  auto check_field = [](std::string_view field, const std::string& what) {
    if (field.find('\t') != std::string_view::npos || field.find('\n') != std::string_view::npos ||
        field.find('\r') != std::string_view::npos) {
      throw MalformedRowError(what + " contains a tab or newline and cannot be written as TSV");
    }
  };
  std::string out;
  out += schema.id_column;
  out += '\t';
  out += schema.prompt_column;
  out += '\t';
  out += schema.text_column;
  for (const auto& [trait, col] : schema.trait_columns) {
    out += '\t';
    out += col;
  }
  out += '\n';
  for (const EssayRecord& rec : corpus.records()) {
    check_field(rec.id, "id of essay '" + rec.id + "'");
    check_field(rec.text, "text of essay '" + rec.id + "'");
    out += rec.id;
    out += '\t';
    out += std::to_string(rec.prompt_id);
    out += '\t';
    out += rec.text;
    for (const auto& [trait, col] : schema.trait_columns) {
      auto it = rec.raw_scores.find(trait);
      if (it == rec.raw_scores.end()) {
        throw MalformedRowError("essay '" + rec.id + "' lacks a score for column '" + col + "'");
      }
      out += '\t';
      out += std::to_string(it->second);
    }
    out += '\n';
  }
  return out;
}

std::string_view split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::Train:
      return "train";
    case SplitKind::Val:
      return "val";
    case SplitKind::Test:
      return "test";
  }
  throw OutOfRangeError("invalid split kind");
}

SplitKind split_kind_from_name(std::string_view name) {
  const std::string lc = lower_ascii(name);
  if (lc == "train") return SplitKind::Train;
  if (lc == "val" || lc == "validation") return SplitKind::Val;
  if (lc == "test") return SplitKind::Test;
  throw OutOfRangeError("unknown split name: '" + std::string(name) + "'");
}

std::size_t SplitCounts::of(SplitKind k) const {
  switch (k) {
    case SplitKind::Train:
      return n_train;
    case SplitKind::Val:
      return n_val;
    case SplitKind::Test:
      return n_test;
  }
  throw OutOfRangeError("invalid split kind");
}

SplitKind SplitAssignment::of(std::string_view id) const {
  auto it = by_id.find(std::string(id));
  if (it == by_id.end()) {
    throw OutOfRangeError("essay id '" + std::string(id) + "' not in split assignment");
  }
  return it->second;
}

std::vector<std::string> SplitAssignment::ids_for(SplitKind k, const Corpus& corpus) const {
  std::vector<std::string> ids;
  for (const EssayRecord& rec : corpus.records()) {
    if (of(rec.id) == k) ids.push_back(rec.id);
  }
  return ids;
}

namespace {

constexpr std::array<SplitKind, 3> kSplitOrder{SplitKind::Train, SplitKind::Val, SplitKind::Test};

// Integer rounding of a quota matrix that preserves integer row and column
// sums, with every cell at floor or ceil of its quota. Rows are band groups,
// columns the three splits; 3x3 makes exhaustive search practical.
std::array<std::array<std::size_t, 3>, 3> round_allocation(
    const std::array<std::array<double, 3>, 3>& quota, const std::array<std::size_t, 3>& row_sums,
    const std::array<std::size_t, 3>& col_sums) {
  std::array<std::array<std::size_t, 3>, 3> best{};
  double best_score = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  for (unsigned mask = 0; mask < 512; ++mask) {
    std::array<std::array<std::size_t, 3>, 3> cand{};
    double score = 0.0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double q = quota[r][c];
        const auto lo = static_cast<std::size_t>(std::floor(q));
        const bool up = (mask >> (r * 3 + c)) & 1u;
        const std::size_t v = up ? static_cast<std::size_t>(std::ceil(q)) : lo;
        cand[r][c] = v;
        score -= std::abs(static_cast<double>(v) - q);
      }
    }
    bool ok = true;
    for (int r = 0; r < 3 && ok; ++r) {
      ok = cand[r][0] + cand[r][1] + cand[r][2] == row_sums[r];
    }
    for (int c = 0; c < 3 && ok; ++c) {
      ok = cand[0][c] + cand[1][c] + cand[2][c] == col_sums[c];
    }
    if (ok && score > best_score) {
      best_score = score;
      best = cand;
      feasible = true;
    }
  }
  if (!feasible) {
    throw CountMismatchError("no feasible stratified allocation exists for these counts");
  }
  return best;
}

}  // namespace

SplitAssignment split(const Corpus& corpus, const SplitCounts& counts, std::uint64_t seed,
                      std::optional<Trait> stratify_trait) {
  if (counts.n_train == 0 || counts.n_val == 0 || counts.n_test == 0) {
    throw CountMismatchError("split counts must all be positive");
  }
  if (counts.total() != corpus.size()) {
    throw CountMismatchError("split counts sum to " + std::to_string(counts.total()) +
                             " but corpus has " + std::to_string(corpus.size()) + " essays");
  }

  std::mt19937_64 rng(seed);
  SplitAssignment assignment;
  assignment.counts = counts;

  if (!stratify_trait) {
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_indices(order, rng);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      SplitKind k = pos < counts.n_train                  ? SplitKind::Train
                    : pos < counts.n_train + counts.n_val ? SplitKind::Val
                                                          : SplitKind::Test;
      assignment.by_id.emplace(corpus.at(order[pos]).id, k);
    }
    return assignment;
  }

  // Stratified: allocate each band across splits within one essay of its
  // proportional quota, then slice each band's shuffled ids contiguously.
  std::array<std::vector<std::size_t>, 3> band_members;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    band_members[ordinal(corpus.at(i).band(*stratify_trait)) - 1].push_back(i);
  }
  const double total = static_cast<double>(corpus.size());
  std::array<std::array<double, 3>, 3> quota{};
  std::array<std::size_t, 3> row_sums{};
  std::array<std::size_t, 3> col_sums{counts.n_train, counts.n_val, counts.n_test};
  for (int b = 0; b < 3; ++b) {
    row_sums[b] = band_members[b].size();
    for (int s = 0; s < 3; ++s) {
      quota[b][s] = static_cast<double>(row_sums[b]) * static_cast<double>(col_sums[s]) / total;
    }
  }
  const auto alloc = round_allocation(quota, row_sums, col_sums);

  for (int b = 0; b < 3; ++b) {
    shuffle_indices(band_members[b], rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < alloc[b][s]; ++k, ++pos) {
        assignment.by_id.emplace(corpus.at(band_members[b][pos]).id, kSplitOrder[s]);
      }
    }
  }
  return assignment;
}

std::map<Band, std::size_t> class_distribution(const Corpus& corpus, Trait trait) {
  std::map<Band, std::size_t> counts{{Band::Weak, 0}, {Band::Fair, 0}, {Band::Strong, 0}};
  for (const EssayRecord& rec : corpus.records()) {
    counts[rec.band(trait)] += 1;  // throws UnknownTraitError when absent
  }
  return counts;
}

std::string write_split_manifest(const SplitAssignment& assignment, const Corpus& corpus) {
  std::string out;
  for (const EssayRecord& rec : corpus.records()) {
    out += rec.id;
    out += '\t';
    out += split_kind_name(assignment.of(rec.id));
    out += '\n';
  }
  return out;
}

SplitAssignment parse_split_manifest(std::string_view text) {
  SplitAssignment assignment;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = nl == std::string_view::npos ? text.substr(start) : text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) {
      std::size_t tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw MalformedRowError("manifest line " + std::to_string(line_no) + " lacks a tab separator");
      }
      const std::string id(line.substr(0, tab));
      const SplitKind kind = split_kind_from_name(line.substr(tab + 1));
      if (!assignment.by_id.emplace(id, kind).second) {
        throw DuplicateIdError("manifest repeats essay id '" + id + "'");
      }
      switch (kind) {
        case SplitKind::Train:
          ++assignment.counts.n_train;
          break;
        case SplitKind::Val:
          ++assignment.counts.n_val;
          break;
        case SplitKind::Test:
          ++assignment.counts.n_test;
          break;
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return assignment;
}

}  // namespace traitscore
