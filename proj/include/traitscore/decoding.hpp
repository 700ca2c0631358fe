#ifndef TRAITSCORE_DECODING_HPP
#define TRAITSCORE_DECODING_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "traitscore/corpus.hpp"

namespace traitscore {

struct InvalidCutoffsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateQwkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Decision thresholds on the two threshold probabilities; c2 >= c1 enforced
// at construction.
class CutoffPair {
 public:
  CutoffPair() : c1_(0.5), c2_(0.5) {}
  CutoffPair(double c1, double c2);

  double c1() const { return c1_; }
  double c2() const { return c2_; }

  bool operator==(const CutoffPair& other) const { return c1_ == other.c1_ && c2_ == other.c2_; }

 private:
  double c1_;
  double c2_;
};

using ThresholdProbs = std::array<double, 2>;  // (P(y>1), P(y>2))

// Sum-of-exceeded-thresholds rule: band ordinal = 1 + [p1 > c1] + [p2 > c2].
// Total, and monotone in both probabilities.
Band decode(const ThresholdProbs& probs, const CutoffPair& cutoffs);

struct TuneResult {
  CutoffPair cutoffs;
  double qwk = 0.0;
};

// Exhaustive search over the cutoff grid {0, step, ..., 1}^2 restricted to
// c2 >= c1, maximizing QWK on the validation labels. The canonical pair
// (0.5, 0.5) is always a candidate, so the result never scores below the
// default. Ties break toward (0.5, 0.5) by L1 distance, then toward the
// lexicographically smallest pair.
TuneResult tune_cutoffs(const std::vector<ThresholdProbs>& val_probs,
                        const std::vector<Band>& val_bands, double grid_step = 0.01);

}  // namespace traitscore

#endif  // TRAITSCORE_DECODING_HPP
