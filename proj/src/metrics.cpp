#include "traitscore/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace traitscore {
namespace {

constexpr int kK = 3;  // number of bands

std::array<std::array<double, kK>, kK> confusion(const std::vector<Band>& pred,
                                                 const std::vector<Band>& truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("prediction and truth lengths differ");
  }
  if (pred.empty()) {
    throw std::invalid_argument("metric input is empty");
  }
  std::array<std::array<double, kK>, kK> m{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    m[ordinal(truth[i]) - 1][ordinal(pred[i]) - 1] += 1.0;
  }
  return m;
}

}  // namespace

double qwk(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  const auto observed = confusion(pred, truth);
  const double n = static_cast<double>(pred.size());
  std::array<double, kK> truth_marginal{};
  std::array<double, kK> pred_marginal{};
  for (int i = 0; i < kK; ++i) {
    for (int j = 0; j < kK; ++j) {
      truth_marginal[i] += observed[i][j];
      pred_marginal[j] += observed[i][j];
    }
  }
  double num = 0.0;
  double den = 0.0;
  constexpr double kWeightScale = 1.0 / ((kK - 1) * (kK - 1));
  for (int i = 0; i < kK; ++i) {
    for (int j = 0; j < kK; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) * kWeightScale;
      num += w * observed[i][j];
      den += w * truth_marginal[i] * pred_marginal[j] / n;
    }
  }
  if (den == 0.0) {
    throw DegenerateDistributionError("expected disagreement is zero; QWK undefined");
  }
  return 1.0 - num / den;
}

std::string_view agreement_name(Agreement a) {
  switch (a) {
    case Agreement::Poor:
      return "poor";
    case Agreement::Fair:
      return "fair";
    case Agreement::Moderate:
      return "moderate";
    case Agreement::Substantial:
      return "substantial";
    case Agreement::AlmostPerfect:
      return "almost perfect";
  }
  return "?";
}

AgreementBand qwk_band(double q) {
  AgreementBand band;
  if (q < 0.0) {
    band.label = Agreement::Poor;
    band.negative = true;
  } else if (q < 0.2) {
    band.label = Agreement::Poor;
  } else if (q < 0.4) {
    band.label = Agreement::Fair;
  } else if (q < 0.6) {
    band.label = Agreement::Moderate;
  } else if (q < 0.8) {
    band.label = Agreement::Substantial;
  } else {
    band.label = Agreement::AlmostPerfect;
  }
  return band;
}

double weighted_f1(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  const auto m = confusion(pred, truth);
  const double n = static_cast<double>(pred.size());
  double weighted_sum = 0.0;
  for (int c = 0; c < kK; ++c) {
    const double tp = m[c][c];
    double support = 0.0;
    double predicted = 0.0;
    for (int j = 0; j < kK; ++j) {
      support += m[c][j];
      predicted += m[j][c];
    }
    if (support == 0.0) continue;  // zero-support class carries no weight
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = tp / support;
    const double f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    weighted_sum += f1 * support;
  }
  return weighted_sum / n;
}

double kendall_tau_b(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  if (pred.size() != truth.size() || pred.size() < 2) {
    throw std::invalid_argument("kendall_tau_b needs two equal-length sequences of size >= 2");
  }
  // With three fixed categories the pair counts follow from the confusion
  // matrix in O(n): concordant pairs combine cells that increase in both
  // coordinates, discordant pairs cells that flip order.
  const auto m = confusion(pred, truth);
  const double n = static_cast<double>(pred.size());
  double concordant = 0.0;
  double discordant = 0.0;
  for (int i = 0; i < kK; ++i) {
    for (int j = 0; j < kK; ++j) {
      for (int i2 = i + 1; i2 < kK; ++i2) {
        for (int j2 = 0; j2 < kK; ++j2) {
          if (j2 > j) {
            concordant += m[i][j] * m[i2][j2];
          } else if (j2 < j) {
            discordant += m[i][j] * m[i2][j2];
          }
        }
      }
    }
  }
  const double n0 = n * (n - 1.0) / 2.0;
  double tie_truth = 0.0;
  double tie_pred = 0.0;
  for (int c = 0; c < kK; ++c) {
    double row = 0.0;
    double col = 0.0;
    for (int j = 0; j < kK; ++j) {
      row += m[c][j];
      col += m[j][c];
    }
    tie_truth += row * (row - 1.0) / 2.0;
    tie_pred += col * (col - 1.0) / 2.0;
  }
  const double dx = n0 - tie_truth;
  const double dy = n0 - tie_pred;
  if (dx == 0.0 || dy == 0.0) {
    throw AllTiedError("kendall_tau_b undefined: a sequence is fully constant");
  }
  return (concordant - discordant) / std::sqrt(dx * dy);
}

RunAggregate aggregate(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw TooFewRunsError("aggregate needs at least two runs, got " + std::to_string(values.size()));
  }
  RunAggregate agg;
  agg.k = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / static_cast<double>(agg.k);
  double ss = 0.0;
  for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
  agg.stddev = std::sqrt(ss / static_cast<double>(agg.k - 1));
  return agg;
}

namespace detail {

// Continued-fraction core of the incomplete beta (Numerical Recipes betacf,
// modified Lentz).
static double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw TooFewRunsError("t-distribution needs df >= 1");
  if (!std::isfinite(t)) return 0.0;
  const double v = static_cast<double>(df);
  const double x = v / (v + t * t);
  return detail::regularized_incomplete_beta(v / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw TooFewRunsError("paired_t_test inputs have different lengths");
  }
  const std::size_t n = a.size();
  if (n < 2) {
    throw TooFewRunsError("paired_t_test needs at least two paired runs");
  }
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    throw ZeroVarianceError("paired differences are constant; t statistic undefined");
  }
  TTestResult result;
  result.t = mean * std::sqrt(static_cast<double>(n)) / sd;
  result.df = static_cast<int>(n) - 1;
  result.p_two_sided = student_t_two_sided_p(result.t, result.df);
  return result;
}

MetricReport compute_report(const std::vector<Band>& pred, const std::vector<Band>& truth) {
  MetricReport report;
  report.n = static_cast<int>(pred.size());
  report.qwk = qwk(pred, truth);
  report.qwk_band = qwk_band(report.qwk);
  report.weighted_f1 = weighted_f1(pred, truth);
  try {
    report.kendall_tau = kendall_tau_b(pred, truth);
  } catch (const AllTiedError&) {
    report.kendall_tau = std::nullopt;
  }
  return report;
}

}  // namespace traitscore
