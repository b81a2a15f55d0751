#include "sbb/stats.hpp"

#include "sbb/util.hpp"

#include <cmath>
#include <limits>

namespace sbb {

// Series and continued-fraction evaluation of the regularized incomplete
// gamma function (Numerical Recipes style). The series converges fast for
// x < a + 1, the Lentz continued fraction for x >= a + 1.

static double gamma_p_series(double a, double x) {
    const int    max_iter = 500;
    const double eps      = std::numeric_limits<double>::epsilon();
    double       ap       = a;
    double       sum      = 1.0 / a;
    double       del      = sum;
    for (int i = 0; i < max_iter; i++) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * eps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

static double gamma_q_contfrac(double a, double x) {
    const int    max_iter = 500;
    const double eps      = std::numeric_limits<double>::epsilon();
    const double fpmin    = std::numeric_limits<double>::min() / eps;
    double       b        = x + 1.0 - a;
    double       c        = 1.0 / fpmin;
    double       d        = 1.0 / b;
    double       h        = d;
    for (int i = 1; i <= max_iter; i++) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d                = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
        throw Error("gamma_p requires a > 0 and finite x >= 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
        throw Error("gamma_q requires a > 0 and finite x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi_squared_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return gamma_q(df / 2.0, x / 2.0);
}

}  // namespace sbb
