#include "traitscore/decoding.hpp"

#include <cmath>

#include "traitscore/metrics.hpp"

namespace traitscore {

CutoffPair::CutoffPair(double c1, double c2) : c1_(c1), c2_(c2) {
  if (!(c1 >= 0.0 && c1 <= 1.0 && c2 >= 0.0 && c2 <= 1.0)) {
    throw InvalidCutoffsError("cutoffs must lie in [0,1]");
  }
  if (c2 < c1) {
    throw InvalidCutoffsError("monotonicity requires c2 >= c1");
  }
}

Band decode(const ThresholdProbs& probs, const CutoffPair& cutoffs) {
  const int o = 1 + (probs[0] > cutoffs.c1() ? 1 : 0) + (probs[1] > cutoffs.c2() ? 1 : 0);
  return static_cast<Band>(o);
}

TuneResult tune_cutoffs(const std::vector<ThresholdProbs>& val_probs,
                        const std::vector<Band>& val_bands, double grid_step) {
  if (val_probs.empty() || val_probs.size() != val_bands.size()) {
    throw EmptyValidationError("tune_cutoffs needs equal-length nonempty probs and bands");
  }
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw std::invalid_argument("grid_step must lie in (0, 0.5]");
  }

  const int n_steps = static_cast<int>(std::llround(1.0 / grid_step));
  auto grid_value = [&](int i) { return i == n_steps ? 1.0 : i * grid_step; };

  std::vector<Band> decoded(val_probs.size());
  auto qwk_at = [&](const CutoffPair& c) -> std::optional<double> {
    for (std::size_t i = 0; i < val_probs.size(); ++i) {
      decoded[i] = decode(val_probs[i], c);
    }
    try {
      return qwk(decoded, val_bands);
    } catch (const DegenerateDistributionError&) {
      return std::nullopt;
    }
  };

  bool found = false;
  TuneResult best;
  double best_dist = 0.0;
  auto consider = [&](const CutoffPair& c) {
    const std::optional<double> q = qwk_at(c);
    if (!q) return;
    const double dist = std::fabs(c.c1() - 0.5) + std::fabs(c.c2() - 0.5);
    bool take = false;
    if (!found || *q > best.qwk) {
      take = true;
    } else if (*q == best.qwk) {
      if (dist < best_dist) {
        take = true;
      } else if (dist == best_dist &&
                 (c.c1() < best.cutoffs.c1() ||
                  (c.c1() == best.cutoffs.c1() && c.c2() < best.cutoffs.c2()))) {
        take = true;
      }
    }
    if (take) {
      found = true;
      best.cutoffs = c;
      best.qwk = *q;
      best_dist = dist;
    }
  };

  for (int i = 0; i <= n_steps; ++i) {
    for (int j = i; j <= n_steps; ++j) {
      consider(CutoffPair(grid_value(i), grid_value(j)));
    }
  }
  // The canonical default always competes, even when the grid misses it.
  consider(CutoffPair(0.5, 0.5));

  if (!found) {
    throw DegenerateQwkError("QWK undefined at every cutoff pair on the grid");
  }
  return best;
}

}  // namespace traitscore
