#include "common/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace traitscore::testing {
namespace {

constexpr int kK = 3;

}  // namespace

double oracle_qwk(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  const double n = static_cast<double>(pred.size());
  double observed[kK][kK] = {};
  double truth_hist[kK] = {};
  double pred_hist[kK] = {};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    observed[ordinal(truth[i]) - 1][ordinal(pred[i]) - 1] += 1.0 / n;
    truth_hist[ordinal(truth[i]) - 1] += 1.0 / n;
    pred_hist[ordinal(pred[i]) - 1] += 1.0 / n;
  }
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < kK; ++i) {
    for (int j = 0; j < kK; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) / ((kK - 1) * (kK - 1));
      num += w * observed[i][j];
      den += w * truth_hist[i] * pred_hist[j];
    }
  }
  if (den == 0.0) {
    throw std::domain_error("oracle_qwk: degenerate distribution");
  }
  return 1.0 - num / den;
}

double oracle_kendall_tau_b(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  const std::size_t n = pred.size();
  long long concordant = 0;
  long long discordant = 0;
  long long ties_x = 0;
  long long ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int dx = ordinal(truth[i]) - ordinal(truth[j]);
      const int dy = ordinal(pred[i]) - ordinal(pred[j]);
      if (dx == 0) ++ties_x;
      if (dy == 0) ++ties_y;
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
  const double dx = n0 - static_cast<double>(ties_x);
  const double dy = n0 - static_cast<double>(ties_y);
  if (dx == 0.0 || dy == 0.0) {
    throw std::domain_error("oracle_kendall_tau_b: constant sequence");
  }
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) / std::sqrt(dx * dy);
}

double oracle_weighted_f1(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  double total = 0.0;
  double weighted = 0.0;
  for (Band cls : kAllBands) {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double support = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool is_truth = truth[i] == cls;
      const bool is_pred = pred[i] == cls;
      if (is_truth) support += 1.0;
      if (is_truth && is_pred) tp += 1.0;
      if (!is_truth && is_pred) fp += 1.0;
      if (is_truth && !is_pred) fn += 1.0;
    }
    total += support;
    if (support == 0.0) continue;
    const double precision = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    const double recall = tp / (tp + fn);
    const double f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    weighted += f1 * support;
  }
  return weighted / total;
}

double oracle_bce_probability_space(const std::vector<std::array<double, 2>>& logits,
                                    const std::vector<std::array<int, 2>>& targets,
                                    const std::array<double, 2>& pos_weights) {
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      // Explicit class probabilities; the complement comes from the mirrored
      // sigmoid so it keeps full relative precision at |z| = 30.
      const double p_pos = 1.0 / (1.0 + std::exp(-logits[i][k]));
      const double p_neg = 1.0 / (1.0 + std::exp(logits[i][k]));
      if (targets[i][k] == 1) {
        loss += pos_weights[k] * (-std::log(p_pos));
      } else {
        loss += -std::log(p_neg);
      }
    }
  }
  return loss / static_cast<double>(logits.size());
}

std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> params,
    double step) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = params[i];
    params[i] = original + step;
    const double up = f(params);
    params[i] = original - step;
    const double down = f(params);
    params[i] = original;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

OracleTuneResult oracle_tune_cutoffs(const std::vector<ThresholdProbs>& probs,
                                     const std::vector<Band>& bands, double grid_step) {
  const int n_steps = static_cast<int>(std::llround(1.0 / grid_step));
  auto value = [&](int i) { return i == n_steps ? 1.0 : i * grid_step; };
  OracleTuneResult best;
  bool found = false;
  double best_dist = 0.0;
  std::vector<Band> decoded(probs.size());
  auto consider = [&](double c1, double c2) {
    for (std::size_t s = 0; s < probs.size(); ++s) {
      const int o = 1 + (probs[s][0] > c1 ? 1 : 0) + (probs[s][1] > c2 ? 1 : 0);
      decoded[s] = static_cast<Band>(o);
    }
    double q;
    try {
      q = oracle_qwk(decoded, bands);
    } catch (const std::domain_error&) {
      return;
    }
    const double dist = std::fabs(c1 - 0.5) + std::fabs(c2 - 0.5);
    bool take = false;
    if (!found || q > best.qwk) {
      take = true;
    } else if (q == best.qwk) {
      if (dist < best_dist || (dist == best_dist && (c1 < best.c1 || (c1 == best.c1 && c2 < best.c2)))) {
        take = true;
      }
    }
    if (take) {
      found = true;
      best = {c1, c2, q};
      best_dist = dist;
    }
  };
  for (int i = 0; i <= n_steps; ++i) {
    for (int j = i; j <= n_steps; ++j) {
      consider(value(i), value(j));
    }
  }
  consider(0.5, 0.5);
  if (!found) {
    throw std::domain_error("oracle_tune_cutoffs: QWK undefined everywhere");
  }
  return best;
}

namespace {

double t_pdf(double x, double v) {
  const double ln = std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) -
                    0.5 * std::log(v * M_PI) - (v + 1.0) / 2.0 * std::log1p(x * x / v);
  return std::exp(ln);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
  const double m = (a + b) / 2.0;
  const double lm = (a + m) / 2.0;
  const double rm = (m + b) / 2.0;
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f((a + b) / 2.0);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 40);
}

}  // namespace

double oracle_t_two_sided_p(double t, int df) {
  const double v = static_cast<double>(df);
  const double a = std::fabs(t);
  if (a == 0.0) return 1.0;
  auto pdf = [v](double x) { return t_pdf(x, v); };
  // Near tail directly, far tail via x = 1/u so the integrand stays smooth.
  const double mid = std::max(a * 2.0, a + 10.0);
  const double near = integrate(pdf, a, mid, 1e-13);
  auto far_integrand = [v](double u) {
    // limit u -> 0 of t_pdf(1/u) / u^2: zero for df > 1, 1/pi for df = 1.
    if (u == 0.0) return v == 1.0 ? 1.0 / M_PI : 0.0;
    const double x = 1.0 / u;
    return t_pdf(x, v) * x * x;
  };
  const double far = integrate(far_integrand, 0.0, 1.0 / mid, 1e-13);
  return 2.0 * (near + far);
}

}  // namespace traitscore::testing
