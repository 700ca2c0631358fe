#ifndef TRAITSCORE_METRICS_HPP
#define TRAITSCORE_METRICS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "traitscore/corpus.hpp"

namespace traitscore {

struct DegenerateDistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllTiedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooFewRunsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroVarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadratic weighted kappa over the three bands:
//   1 - (sum w_ij O_ij) / (sum w_ij E_ij),  w_ij = (i-j)^2 / (K-1)^2.
// DegenerateDistributionError when expected disagreement is zero (both
// sequences constant on the same band).
double qwk(const std::vector<Band>& pred, const std::vector<Band>& truth);

enum class Agreement { Poor, Fair, Moderate, Substantial, AlmostPerfect };

std::string_view agreement_name(Agreement a);

// Landis-Koch style interpretation bands. Negative kappa values fall outside
// the published bands and are reported as Poor with the flag set.
struct AgreementBand {
  Agreement label;
  bool negative = false;
};

AgreementBand qwk_band(double q);

// Per-class F1 weighted by truth-class support; classes without support are
// excluded from the weighting. A class with precision+recall = 0 scores 0.
double weighted_f1(const std::vector<Band>& pred, const std::vector<Band>& truth);

// Tie-corrected Kendall rank correlation,
//   tau_b = (C - D) / sqrt((n0 - t_x)(n0 - t_y)).
// AllTiedError when either sequence is constant.
double kendall_tau_b(const std::vector<Band>& pred, const std::vector<Band>& truth);

struct RunAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, divisor k-1
  int k = 0;
};

RunAggregate aggregate(const std::vector<double>& values);  // requires k >= 2

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
};

// Paired t-test on per-run values (paired by position).
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided tail probability of Student's t; regularized incomplete beta
// under the hood, accurate to ~1e-10. Exposed for direct validation.
double student_t_two_sided_p(double t, int df);

namespace detail {
// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
}  // namespace detail

struct MetricReport {
  double qwk = 0.0;
  AgreementBand qwk_band;
  double weighted_f1 = 0.0;
  // Absent when tau is undefined (a constant sequence), e.g. a model that
  // predicts one band for every essay.
  std::optional<double> kendall_tau;
  int n = 0;
};

MetricReport compute_report(const std::vector<Band>& pred, const std::vector<Band>& truth);

}  // namespace traitscore

#endif  // TRAITSCORE_METRICS_HPP
