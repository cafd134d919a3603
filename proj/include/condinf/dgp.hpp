#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/rng.hpp"

// Simulation designs. Each family fixes a structural model with a scalar (or
// small-dimensional) parameter of interest, a bank of testable implications
// used by the specification tests, and a dependence knob rho that ties the
// estimation error of beta_hat to the spec-test statistics without breaking
// either null.

namespace condinf {

enum class DgpFamily { Did, Iv, Gmm, LinearConstant, GaussianDirect };

inline const char* to_string(DgpFamily f) {
    switch (f) {
        case DgpFamily::Did: return "did";
        case DgpFamily::Iv: return "iv";
        case DgpFamily::Gmm: return "gmm";
        case DgpFamily::LinearConstant: return "linear_constant";
        case DgpFamily::GaussianDirect: return "gaussian_direct";
    }
    return "?";
}

struct DgpParams {
    DgpFamily family = DgpFamily::Did;
    bool null_mode = true;     // when false, inject the violation below
    double rho = 0.0;          // dependence knob, family-specific meaning
    double violation = 0.5;    // violation magnitude used when !null_mode

    // did: panel with pre_periods placebo periods, a base period, and a post
    // period; rho correlates the post-period shock with every pre-period one.
    int pre_periods = 2;
    double did_effect = 1.0;
    double treat_prob = 0.5;

    // iv: binary instrument/treatment with compliance types; a covariate X is
    // correlated (rho) with the untreated-outcome shock and balanced across
    // instrument arms under the null.
    double p_complier = 0.6;
    double p_always = 0.2;
    double late_complier = 1.0;
    double effect_always = 2.0;
    double level_never = 0.5;
    double level_always = -0.5;
    double instrument_prob = 0.5;

    // gmm: linear model y = b1 + b2 x + eps with q instruments (constant
    // included); rho correlates the excluded instruments with each other,
    // endogeneity correlates x's shock with eps.
    int gmm_q = 3;
    double gmm_beta1 = 1.0;
    double gmm_beta2 = -0.5;
    double endogeneity = 0.5;

    // linear_constant: y = a0 + b0 d + sigma(d) nu with
    // sigma^2(d) = (1 - rho) + rho d^2, so the residual scale co-moves with
    // the regressor while E[e|d] stays 0.
    double lc_alpha0 = 2.0;
    double lc_beta0 = 3.0;

    // shared grid size for the iv and linear_constant moment grids
    int grid_size = 101;

    // gaussian_direct: one draw from the exact Gaussian limit, dims p and q,
    // with Sigma_12 = rho on the leading diagonal of the cross block.
    int gd_p = 1;
    int gd_q = 1;
};

inline void validate_params(const DgpParams& p) {
    if (!(p.rho > -1.0 && p.rho < 1.0))
        throw BadParams("dgp: rho must lie in (-1,1)");
    switch (p.family) {
        case DgpFamily::Did:
            if (p.pre_periods < 1 || p.pre_periods > 4)
                throw BadParams("dgp: pre_periods must lie in [1,4]");
            if (!(p.treat_prob > 0.0 && p.treat_prob < 1.0))
                throw BadParams("dgp: treat_prob must lie in (0,1)");
            break;
        case DgpFamily::Iv:
            if (!(p.p_complier > 0.0) || !(p.p_always >= 0.0) ||
                !(p.p_complier + p.p_always < 1.0 + 1e-12))
                throw BadParams("dgp: compliance shares must be a sub-probability with compliers > 0");
            if (!(p.instrument_prob > 0.0 && p.instrument_prob < 1.0))
                throw BadParams("dgp: instrument_prob must lie in (0,1)");
            if (p.grid_size < 1) throw BadParams("dgp: grid_size must be positive");
            break;
        case DgpFamily::Gmm:
            if (p.gmm_q < 2 || p.gmm_q > 4)
                throw BadParams("dgp: gmm needs between 2 and 4 instruments");
            if (!(p.endogeneity > -1.0 && p.endogeneity < 1.0))
                throw BadParams("dgp: endogeneity must lie in (-1,1)");
            break;
        case DgpFamily::LinearConstant:
            if (!(p.rho >= 0.0))
                throw BadParams("dgp: linear_constant needs rho in [0,1)");
            if (p.grid_size < 1) throw BadParams("dgp: grid_size must be positive");
            break;
        case DgpFamily::GaussianDirect:
            if (p.gd_p < 1 || p.gd_p > 8 || p.gd_q < 1 || p.gd_q > 8)
                throw BadParams("dgp: gaussian_direct dims must lie in [1,8]");
            break;
    }
}

// True value of the target parameter under the design.
inline Vector true_beta0(const DgpParams& p) {
    switch (p.family) {
        case DgpFamily::Did: return {p.did_effect};
        case DgpFamily::Iv: return {p.late_complier};
        case DgpFamily::Gmm: return {p.gmm_beta1, p.gmm_beta2};
        case DgpFamily::LinearConstant: return {p.lc_beta0};
        case DgpFamily::GaussianDirect: return Vector(static_cast<std::size_t>(p.gd_p), 0.0);
    }
    return {};
}

// Column-named rectangular sample; all columns share the row count.
struct Sample {
    std::vector<std::string> names;
    std::vector<Vector> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }

    const Vector& col(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return columns[i];
        throw DimensionMismatch("sample: no column named " + name);
    }
    bool has_col(const std::string& name) const {
        for (const auto& n : names)
            if (n == name) return true;
        return false;
    }
};

namespace detail {

inline Sample generate_did(const DgpParams& p, std::size_t n, Rng& rng) {
    const int q = p.pre_periods;
    Sample s;
    s.names.push_back("group");
    for (int j = q; j >= 1; --j) s.names.push_back("y_pre" + std::to_string(j));
    s.names.push_back("y_base");
    s.names.push_back("y_post");
    s.columns.assign(s.names.size(), Vector(n, 0.0));

    // fixed calendar effects; period index runs -q..-1 (pre), 0 (base), 1 (post)
    const double trend = 0.1;
    const double cross = p.rho;
    const double fresh = std::sqrt(1.0 - p.rho * p.rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = rng.bernoulli(p.treat_prob) ? 1.0 : 0.0;
        const double unit = rng.normal();
        const double e_base = rng.normal();
        const double e_post = rng.normal();
        const double slope = p.null_mode ? 0.0 : g * p.violation;
        s.columns[0][i] = g;
        for (int j = q; j >= 1; --j) {
            const double e_pre = cross * e_post + fresh * rng.normal();
            const double t = static_cast<double>(-j);
            s.columns[static_cast<std::size_t>(q - j + 1)][i] = unit + trend * t + slope * t + e_pre;
        }
        s.columns[static_cast<std::size_t>(q + 1)][i] = unit + e_base;
        s.columns[static_cast<std::size_t>(q + 2)][i] =
            unit + trend + slope + g * p.did_effect + e_post;
    }
    return s;
}

inline Sample generate_iv(const DgpParams& p, std::size_t n, Rng& rng) {
    Sample s;
    s.names = {"y", "d", "z", "x"};
    s.columns.assign(4, Vector(n, 0.0));
    const double fresh = std::sqrt(1.0 - p.rho * p.rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.bernoulli(p.instrument_prob) ? 1.0 : 0.0;
        const double u = rng.uniform01();
        const double eps = rng.normal();
        const double xi = rng.normal();
        double x = p.rho * eps + fresh * xi;
        if (!p.null_mode) x += p.violation * z;  // covariate imbalance across arms

        double d, level, effect;
        if (u < p.p_complier) {
            d = z;
            level = 0.0;
            effect = p.late_complier;
        } else if (u < p.p_complier + p.p_always) {
            d = 1.0;
            level = p.level_always;
            effect = p.effect_always;
        } else {
            d = 0.0;
            level = p.level_never;
            effect = 0.0;
        }
        s.columns[0][i] = level + eps + effect * d;
        s.columns[1][i] = d;
        s.columns[2][i] = z;
        s.columns[3][i] = x;
    }
    return s;
}

inline Sample generate_gmm(const DgpParams& p, std::size_t n, Rng& rng) {
    const int m = p.gmm_q - 1;  // excluded instruments
    Sample s;
    s.names = {"y", "x"};
    for (int j = 1; j <= m; ++j) s.names.push_back("z" + std::to_string(j));
    s.columns.assign(s.names.size(), Vector(n, 0.0));

    static const double loadings[3] = {1.0, 0.7, 0.4};
    const double fresh = std::sqrt(1.0 - p.rho * p.rho);
    const double eps_fresh = std::sqrt(1.0 - p.endogeneity * p.endogeneity);
    for (std::size_t i = 0; i < n; ++i) {
        double z[3] = {0.0, 0.0, 0.0};
        for (int j = 0; j < m; ++j) {
            const double raw = rng.normal();
            z[j] = j == 0 ? raw : p.rho * z[0] + fresh * raw;
        }
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        const double u = e1;
        double eps = p.endogeneity * e1 + eps_fresh * e2;
        if (!p.null_mode) eps += p.violation * z[0];  // breaks E[z1 eps] = 0

        double x = u;
        for (int j = 0; j < m; ++j) x += loadings[j] * z[j];
        s.columns[0][i] = p.gmm_beta1 + p.gmm_beta2 * x + eps;
        s.columns[1][i] = x;
        for (int j = 0; j < m; ++j) s.columns[static_cast<std::size_t>(2 + j)][i] = z[j];
    }
    return s;
}

inline Sample generate_linear_constant(const DgpParams& p, std::size_t n, Rng& rng) {
    Sample s;
    s.names = {"y", "d"};
    s.columns.assign(2, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rng.normal();
        const double nu = rng.normal();
        const double sigma = std::sqrt((1.0 - p.rho) + p.rho * d * d);
        double y = p.lc_alpha0 + p.lc_beta0 * d + sigma * nu;
        if (!p.null_mode) y += p.violation * d * d;  // curvature the line misses
        s.columns[0][i] = y;
        s.columns[1][i] = d;
    }
    return s;
}

}  // namespace detail

// Draw an n-row sample from the design. Consumes the stream in a fixed
// per-row pattern, so a given (params, n, stream) triple always yields the
// same sample regardless of caller context.
inline Sample generate(const DgpParams& params, std::size_t n, SeededStream stream) {
    validate_params(params);
    if (n < 4) throw BadParams("generate: need at least 4 rows");
    Rng rng(stream);
    switch (params.family) {
        case DgpFamily::Did: return detail::generate_did(params, n, rng);
        case DgpFamily::Iv: return detail::generate_iv(params, n, rng);
        case DgpFamily::Gmm: return detail::generate_gmm(params, n, rng);
        case DgpFamily::LinearConstant: return detail::generate_linear_constant(params, n, rng);
        case DgpFamily::GaussianDirect:
            throw BadParams("generate: gaussian_direct draws the limit directly; no sample");
    }
    throw BadParams("generate: unknown family");
}

}  // namespace condinf
