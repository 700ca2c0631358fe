#include "traitscore/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace traitscore {
namespace {

// Unicode whitespace codepoints beyond ASCII that show up in real essays.
bool is_space_codepoint(unsigned cp) {
  if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) return true;
  switch (cp) {
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

// Decodes one UTF-8 codepoint; invalid bytes are passed through as single
// token characters rather than rejected here (corpus ingestion validates).
unsigned decode_codepoint(std::string_view s, std::size_t i, std::size_t& len) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  len = 1;
  if (c < 0x80) return c;
  unsigned cp = 0;
  std::size_t n = 0;
  if ((c & 0xE0) == 0xC0) {
    n = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    n = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    n = 4;
    cp = c & 0x07;
  } else {
    return c;
  }
  if (i + n > s.size()) return c;
  for (std::size_t k = 1; k < n; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) return c;
    cp = (cp << 6) | (cc & 0x3F);
  }
  len = n;
  return cp;
}

std::string strip_and_case(std::string_view token, bool lowercase) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  while (begin < end && is_ascii_punct(static_cast<unsigned char>(token[begin]))) ++begin;
  while (end > begin && is_ascii_punct(static_cast<unsigned char>(token[end - 1]))) --end;
  std::string out(token.substr(begin, end - begin));
  if (lowercase) {
    for (char& ch : out) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
  }
  return out;
}

void require_hashed_and_valid(const EncoderSpec& spec) {
  if (spec.kind != EncoderKind::HashedNgram) {
    throw UnfittedEncoderError("operation requires a hashed n-gram encoder spec");
  }
  if (spec.dim < 2) throw DimMismatchError("encoder dim must be at least 2");
  if (spec.ngram_range.first < 1 || spec.ngram_range.second < spec.ngram_range.first) {
    throw DimMismatchError("ngram_range must satisfy 1 <= low <= high");
  }
}

// Buckets of all token n-grams of a text under the encoder's hash.
std::vector<std::size_t> text_buckets(std::string_view text, const EncoderSpec& spec) {
  const std::vector<std::string> tokens = tokenize(text, spec.lowercase);
  std::vector<std::size_t> buckets;
  for (int order = spec.ngram_range.first; order <= spec.ngram_range.second; ++order) {
    if (tokens.size() < static_cast<std::size_t>(order)) break;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      std::string joined = tokens[i];
      for (int k = 1; k < order; ++k) {
        joined += '\x1f';
        joined += tokens[i + k];
      }
      buckets.push_back(static_cast<std::size_t>(stable_hash64(joined) % spec.dim));
    }
  }
  return buckets;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  std::size_t token_start = 0;
  bool in_token = false;
  auto flush = [&](std::size_t end) {
    if (!in_token) return;
    std::string tok = strip_and_case(text.substr(token_start, end - token_start), lowercase);
    if (!tok.empty()) tokens.push_back(std::move(tok));
    in_token = false;
  };
  while (i < text.size()) {
    std::size_t len = 1;
    const unsigned cp = decode_codepoint(text, i, len);
    if (is_space_codepoint(cp)) {
      flush(i);
    } else if (!in_token) {
      in_token = true;
      token_start = i;
    }
    i += len;
  }
  flush(text.size());
  return tokens;
}

std::uint64_t stable_hash64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a 64 offset basis
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EncoderSpec fit_idf(const std::vector<std::string>& train_texts, EncoderSpec spec) {
  require_hashed_and_valid(spec);
  if (train_texts.empty()) {
    throw EmptyTrainingSetError("fit_idf requires at least one training text");
  }
  std::vector<std::size_t> df(spec.dim, 0);
  for (const std::string& text : train_texts) {
    std::set<std::size_t> seen;
    for (std::size_t b : text_buckets(text, spec)) seen.insert(b);
    for (std::size_t b : seen) df[b] += 1;
  }
  const double n = static_cast<double>(train_texts.size());
  spec.idf.assign(spec.dim, 0.0);
  for (std::size_t j = 0; j < spec.dim; ++j) {
    spec.idf[j] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[j]))) + 1.0;
  }
  spec.fitted_on = train_texts.size();
  return spec;
}

FeatureVector encode(std::string_view text, const EncoderSpec& spec) {
  require_hashed_and_valid(spec);
  if (!spec.fitted()) {
    throw UnfittedEncoderError("encode called before fit_idf");
  }
  if (spec.idf.size() != spec.dim) {
    throw DimMismatchError("idf table length does not match encoder dim");
  }
  FeatureVector v(spec.dim, 0.0);
  for (std::size_t b : text_buckets(text, spec)) v[b] += 1.0;
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < spec.dim; ++j) {
    v[j] *= spec.idf[j];
    norm_sq += v[j] * v[j];
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
  }
  return v;
}

EmbeddingTable load_external_embeddings(std::string_view raw_bytes, std::size_t expected_dim) {
  if (expected_dim == 0) throw DimMismatchError("expected_dim must be positive");
  EmbeddingTable table;
  table.dim = expected_dim;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < raw_bytes.size()) {
    std::size_t nl = raw_bytes.find('\n', start);
    std::string_view line =
        nl == std::string_view::npos ? raw_bytes.substr(start) : raw_bytes.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) {
      const std::size_t tab = line.find('\t');
      if (tab == std::string_view::npos || tab == 0) {
        throw EmbeddingParseError("line " + std::to_string(line_no) +
                                  ": expected 'id<TAB>v1,v2,...'");
      }
      const std::string id(line.substr(0, tab));
      std::string_view values = line.substr(tab + 1);
      FeatureVector vec;
      vec.reserve(expected_dim);
      std::size_t pos = 0;
      while (pos <= values.size()) {
        std::size_t comma = values.find(',', pos);
        const std::string field(comma == std::string_view::npos ? values.substr(pos)
                                                                : values.substr(pos, comma - pos));
        char* endp = nullptr;
        const double x = std::strtod(field.c_str(), &endp);
        if (field.empty() || endp != field.c_str() + field.size() || !std::isfinite(x)) {
          throw EmbeddingParseError("line " + std::to_string(line_no) + ", id '" + id +
                                    "': bad float '" + field + "'");
        }
        vec.push_back(x);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
      if (vec.size() != expected_dim) {
        throw DimMismatchError("id '" + id + "': expected " + std::to_string(expected_dim) +
                               " values, got " + std::to_string(vec.size()));
      }
      if (!table.by_id.emplace(id, std::move(vec)).second) {
        throw EmbeddingParseError("duplicate embedding id '" + id + "'");
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return table;
}

std::string write_external_embeddings(const EmbeddingTable& table) {
  // Deterministic output: ids in lexicographic order, 17 significant digits
  // so doubles round-trip exactly.
  std::vector<const std::string*> ids;
  ids.reserve(table.by_id.size());
  for (const auto& [id, vec] : table.by_id) ids.push_back(&id);
  std::sort(ids.begin(), ids.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
  std::string out;
  char buf[64];
  for (const std::string* id : ids) {
    out += *id;
    out += '\t';
    const FeatureVector& vec = table.by_id.at(*id);
    for (std::size_t j = 0; j < vec.size(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", vec[j]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

const FeatureVector& embedding_for(const EmbeddingTable& table, std::string_view essay_id) {
  auto it = table.by_id.find(std::string(essay_id));
  if (it == table.by_id.end()) {
    throw MissingIdError("no embedding for essay id '" + std::string(essay_id) + "'");
  }
  return it->second;
}

}  // namespace traitscore
