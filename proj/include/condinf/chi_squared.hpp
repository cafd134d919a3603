#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "condinf/errors.hpp"

// Chi-squared distribution functions built on the regularized lower
// incomplete gamma function P(a, x). Series expansion for x < a + 1,
// Lentz continued fraction for the complement otherwise. Quantiles by
// Newton iteration safeguarded with bisection.

namespace condinf {

namespace detail {

inline double gamma_p_series(double a, double x) {
    // P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a (a+1) ... (a+n))
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_continued_fraction(double a, double x) {
    // Q(a,x) by the modified Lentz algorithm.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
inline double gamma_p(double a, double x) {
    if (!(a > 0.0)) throw DomainError("gamma_p: shape must be positive");
    if (x < 0.0) throw DomainError("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

inline double chi2_cdf(double x, unsigned dof) {
    if (dof == 0) throw DomainError("chi2_cdf: dof must be positive");
    if (x < 0.0) throw DomainError("chi2_cdf: x must be nonnegative");
    if (x == 0.0) return 0.0;
    return gamma_p(0.5 * static_cast<double>(dof), 0.5 * x);
}

inline double chi2_pdf(double x, unsigned dof) {
    if (dof == 0) throw DomainError("chi2_pdf: dof must be positive");
    if (x <= 0.0) return 0.0;
    const double k2 = 0.5 * static_cast<double>(dof);
    return std::exp((k2 - 1.0) * std::log(x) - 0.5 * x - std::lgamma(k2) - k2 * std::log(2.0));
}

// x with chi2_cdf(x, dof) = prob, to 1e-9 absolute in CDF space.
inline double chi2_quantile(double prob, unsigned dof) {
    if (!(prob > 0.0 && prob < 1.0))
        throw DomainError("chi2_quantile: prob must lie in (0,1), got " + std::to_string(prob));
    if (dof == 0) throw DomainError("chi2_quantile: dof must be positive");

    const double k = static_cast<double>(dof);
    // Wilson-Hilferty starting point.
    const double z = [&] {
        // crude normal quantile start; refined by the Newton loop below
        const double t = prob < 0.5 ? prob : 1.0 - prob;
        const double s = std::sqrt(-2.0 * std::log(t));
        const double approx =
            s - (2.30753 + 0.27061 * s) / (1.0 + s * (0.99229 + 0.04481 * s));
        return prob < 0.5 ? -approx : approx;
    }();
    double x = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3.0);
    if (!(x > 0.0) || !std::isfinite(x)) x = k;

    const double a = 0.5 * k;
    const double upper = 1.0 - prob;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        // cdf(x) - prob, evaluated in whichever tail avoids cancellation:
        // the series gives small P directly, the continued fraction small Q.
        const double half = 0.5 * x;
        const double f = half < a + 1.0
                             ? detail::gamma_p_series(a, half) - prob
                             : upper - detail::gamma_q_continued_fraction(a, half);
        if (f == 0.0) return x;
        if (f > 0.0) {
            hi = std::min(hi, x);
        } else {
            lo = std::max(lo, x);
        }
        const double d = chi2_pdf(x, dof);
        double next = d > 0.0 ? x - f / d : -1.0;
        if (!(next > lo) || !(next < hi) || !std::isfinite(next)) {
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : std::max(2.0 * x, 1.0);
        }
        if (std::abs(next - x) <= 1e-12 * next) return next;
        x = next;
    }
    return x;
}

// Standard normal quantile via the chi-squared connection:
// for u > 1/2, Phi^{-1}(u) = sqrt(chi2_quantile(2u - 1, 1)).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    if (p == 0.5) return 0.0;
    const double tail = p > 0.5 ? 2.0 * p - 1.0 : 1.0 - 2.0 * p;
    const double q = std::sqrt(chi2_quantile(tail, 1));
    return p > 0.5 ? q : -q;
}

// Standard normal CDF, Phi(x) = (1 + sign(x) P(1/2, x^2/2)) / 2.
inline double normal_cdf(double x) {
    if (x == 0.0) return 0.5;
    const double p = gamma_p(0.5, 0.5 * x * x);
    return x > 0.0 ? 0.5 * (1.0 + p) : 0.5 * (1.0 - p);
}

}  // namespace condinf
