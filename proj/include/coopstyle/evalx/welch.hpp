#pragma once

#include <span>

namespace coopstyle::evalx {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool degenerate = false;  // both sample variances were zero
};

/// Welch's unequal-variance t-test, two-sided. With zero variance in both
/// samples: t = 0, p = 1 when the means agree, otherwise t = +-inf, p = 0;
/// `degenerate` is set in both cases. Throws InputError if a sample has
/// fewer than two values.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace coopstyle::evalx
