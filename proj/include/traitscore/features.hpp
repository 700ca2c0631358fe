#ifndef TRAITSCORE_FEATURES_HPP
#define TRAITSCORE_FEATURES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace traitscore {

// Dense numeric representation of an essay, length = configured dimension.
using FeatureVector = std::vector<double>;

enum class EncoderKind { HashedNgram, External };

struct EmptyTrainingSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnfittedEncoderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingIdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmbeddingParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hashed n-gram TF-IDF encoder configuration. Immutable once fitted; encode()
// is then a pure function of (text, spec).
struct EncoderSpec {
  EncoderKind kind = EncoderKind::HashedNgram;
  std::size_t dim = 1u << 15;
  std::pair<int, int> ngram_range{1, 2};
  bool lowercase = true;

  // Present after fit_idf: one weight per hash bucket.
  std::vector<double> idf;
  std::size_t fitted_on = 0;  // number of training texts

  bool fitted() const { return !idf.empty(); }
};

// Whitespace tokenization with leading/trailing ASCII punctuation stripped
// and optional ASCII lowercasing. Exposed for tests.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

// FNV-1a 64-bit; the stable hash behind bucket assignment. n-grams hash the
// tokens joined with a 0x1f separator.
std::uint64_t stable_hash64(std::string_view s);

// idf per bucket = ln((1+N)/(1+df)) + 1, fitted on training texts only.
EncoderSpec fit_idf(const std::vector<std::string>& train_texts, EncoderSpec spec);

// Token n-grams hashed into dim buckets, counts scaled by idf, then
// L2-normalized when the norm is positive. Empty text encodes to the zero
// vector.
FeatureVector encode(std::string_view text, const EncoderSpec& spec);

// Externally computed embeddings: one "id<TAB>v1,v2,...,vd" line per essay.
struct EmbeddingTable {
  std::unordered_map<std::string, FeatureVector> by_id;
  std::size_t dim = 0;
};

EmbeddingTable load_external_embeddings(std::string_view raw_bytes, std::size_t expected_dim);
std::string write_external_embeddings(const EmbeddingTable& table);

// Lookup that names the offending id on a miss.
const FeatureVector& embedding_for(const EmbeddingTable& table, std::string_view essay_id);

}  // namespace traitscore

#endif  // TRAITSCORE_FEATURES_HPP
