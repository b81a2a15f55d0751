#pragma once

#include <cstddef>

// Self-contained statistical primitives. The chi-squared tail probability is
// implemented from the regularized incomplete gamma function so the library
// carries no runtime dependency on an external stats package (the test suite
// cross-checks it against an independent reference implementation).
namespace sbb {

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

// Survival function of the chi-squared distribution with df degrees of
// freedom: Pr[X >= x] = Q(df/2, x/2).
double chi_squared_sf(double x, double df);

}  // namespace sbb
