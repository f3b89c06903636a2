#pragma once

// Scalar special functions used across the library: numerically stable
// logistic pieces, the regularized incomplete gamma function and its
// inverse (for chi-square quantiles), and the standard normal CDF.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace penlogit {

// log(1 + e^x) without overflow for large |x|.
inline double log1pexp(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

// Lower regularized incomplete gamma P(a, x) by series expansion.
// Valid regime: x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a, x) by Lentz continued fraction.
// Valid regime: x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Lower regularized incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Inverse of P(a, .): returns x with P(a, x) = p, accurate to ~1e-12.
// Bisection bracket followed by Newton steps; the integrand is positive so
// Newton from a bracketed midpoint converges monotonically.
inline double gamma_p_inv(double a, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) throw std::invalid_argument("gamma_p_inv: p must be < 1");
    double lo = 0.0, hi = a + 1.0;
    while (gamma_p(a, hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("gamma_p_inv: bracket failure");
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = gamma_p(a, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        // dP/dx = x^{a-1} e^{-x} / Gamma(a)
        const double dp = std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
        double nx = x - f / dp;
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::fabs(nx - x) < 1e-14 * (1.0 + std::fabs(x))) return nx;
        x = nx;
    }
    return x;
}

// Quantile of the chi-square distribution with df degrees of freedom.
inline double chi2_quantile(double level, double df = 1.0) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("chi2_quantile: level must be in (0,1)");
    return 2.0 * gamma_p_inv(0.5 * df, level);
}

} // namespace penlogit
