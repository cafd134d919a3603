#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "condinf/chi_squared.hpp"
#include "condinf/dgp.hpp"
#include "condinf/errors.hpp"
#include "condinf/estimators.hpp"
#include "condinf/parallel.hpp"
#include "condinf/rng.hpp"
#include "condinf/spec_tests.hpp"

// Monte Carlo engine. Each replication is a pure function of (config,
// rep_index): it draws a sample (or a direct Gaussian limit draw), runs the
// scenario's specification tests, and evaluates the F test at b0 plus
// confidence-region coverage at the true parameter. Aggregation uses integer
// counts only, so reports are identical for any worker count.

namespace condinf {

enum class CritMethod { Plugin, Multiplier };
enum class InferenceMode { FiniteSample, ExactLimit };

inline const char* to_string(CritMethod m) {
    return m == CritMethod::Plugin ? "plugin" : "multiplier";
}
inline const char* to_string(InferenceMode m) {
    return m == InferenceMode::FiniteSample ? "finite_sample" : "exact_limit";
}

struct ScenarioConfig {
    std::string scenario_id = "scenario";
    DgpParams dgp;
    InferenceMode mode = InferenceMode::FiniteSample;
    std::size_t n = 2000;
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    double alpha_inference = 0.05;
    Vector b0;                       // hypothesized value; empty means the design truth
    std::vector<double> alpha_spec;  // per-test levels; empty means 0.05 for every test
    std::size_t crit_draws = 2000;
    CritMethod crit_method = CritMethod::Plugin;
    SpecTestKind direct_kind = SpecTestKind::F;  // statistic used in exact_limit scenarios
};

// Which slice of theta_hat each spec test reads and how it scores it.
struct SpecTestSetup {
    SpecTestKind kind;
    std::size_t offset = 0;
    std::size_t len = 0;
    bool uses_grid_weights = false;
    Matrix j_weight;  // BootstrapJ only
};

inline std::vector<SpecTestSetup> spec_test_plan(const ScenarioConfig& config) {
    std::vector<SpecTestSetup> plan;
    const DgpParams& d = config.dgp;
    switch (d.family) {
        case DgpFamily::Did:
            for (int j = 0; j < d.pre_periods; ++j)
                plan.push_back({SpecTestKind::F, static_cast<std::size_t>(j), 1, false, {}});
            break;
        case DgpFamily::Iv: {
            const std::size_t k = static_cast<std::size_t>(d.grid_size);
            plan.push_back({SpecTestKind::WeightedKS, 0, k, true, {}});
            plan.push_back({SpecTestKind::F, k, 1, false, {}});
            break;
        }
        case DgpFamily::Gmm: {
            const std::size_t q = static_cast<std::size_t>(d.gmm_q);
            plan.push_back({SpecTestKind::BootstrapJ, 0, q, false, Matrix::identity(q)});
            break;
        }
        case DgpFamily::LinearConstant:
            plan.push_back(
                {SpecTestKind::CvM, 0, static_cast<std::size_t>(d.grid_size), true, {}});
            break;
        case DgpFamily::GaussianDirect: {
            const std::size_t q = static_cast<std::size_t>(d.gd_q);
            SpecTestSetup s{config.direct_kind, 0, q, config.direct_kind != SpecTestKind::F, {}};
            if (config.direct_kind == SpecTestKind::BootstrapJ) s.j_weight = Matrix::identity(q);
            plan.push_back(s);
            break;
        }
    }
    return plan;
}

inline void validate_scenario(const ScenarioConfig& config) {
    validate_params(config.dgp);
    const bool direct = config.dgp.family == DgpFamily::GaussianDirect;
    if (direct && config.mode != InferenceMode::ExactLimit)
        throw ValidationError("mc.mode", "gaussian_direct scenarios run in exact_limit mode");
    if (!direct && config.mode != InferenceMode::FiniteSample)
        throw ValidationError("mc.mode", "sampled families run in finite_sample mode");
    if (config.reps == 0) throw ValidationError("mc.reps", "must be positive");
    if (!direct && config.n < 4) throw ValidationError("mc.n", "must be at least 4");
    if (!(config.alpha_inference > 0.0 && config.alpha_inference < 1.0))
        throw ValidationError("inference.alpha", "alpha_inference must lie in (0,1)");
    const Vector truth = true_beta0(config.dgp);
    if (!config.b0.empty() && config.b0.size() != truth.size())
        throw ValidationError("inference.b0",
                              "needs " + std::to_string(truth.size()) + " entries");
    const std::size_t j = spec_test_plan(config).size();
    if (!config.alpha_spec.empty() && config.alpha_spec.size() != 1 &&
        config.alpha_spec.size() != j)
        throw ValidationError("tests.alpha",
                              "needs 1 or " + std::to_string(j) + " entries");
    for (double a : config.alpha_spec)
        if (!(a >= 0.0 && a < 1.0))
            throw ValidationError("tests.alpha", "entries must lie in [0,1); 0 disables a test");
    if (config.crit_draws < 1000)
        throw ValidationError("tests.crit_draws", "must be at least 1000");
    if (!direct && config.crit_method == CritMethod::Multiplier &&
        config.dgp.family == DgpFamily::Did)
        throw ValidationError("tests.crit_method",
                              "did placebo F tests use plug-in critical values");
}

inline Vector resolved_b0(const ScenarioConfig& config) {
    return config.b0.empty() ? true_beta0(config.dgp) : config.b0;
}

inline std::vector<double> resolved_alpha_spec(const ScenarioConfig& config) {
    const std::size_t j = spec_test_plan(config).size();
    if (config.alpha_spec.empty()) return std::vector<double>(j, 0.05);
    if (config.alpha_spec.size() == 1) return std::vector<double>(j, config.alpha_spec[0]);
    return config.alpha_spec;
}

struct FTestResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool reject = false;
};

// n_scale (beta_hat - b0)' V_hat^-1 (beta_hat - b0) against the chi-squared
// (1 - alpha) quantile with p degrees of freedom.
inline FTestResult f_test(const EstimateBundle& bundle, const Vector& b0, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("f_test: alpha must lie in (0,1)");
    if (b0.size() != bundle.beta_hat.size())
        throw DimensionMismatch("f_test: b0 must match beta_hat");
    Matrix chol;
    try {
        chol = cholesky_nonsingular(bundle.V_hat);
    } catch (const NotPositiveSemiDefinite& e) {
        throw SingularVariance(std::string("f_test: ") + e.what());
    }
    Vector diff(b0.size());
    for (std::size_t i = 0; i < b0.size(); ++i) diff[i] = bundle.beta_hat[i] - b0[i];
    FTestResult r;
    r.statistic = bundle.n_scale * quad_form_inv(chol, diff);
    r.critical_value = chi2_quantile(1.0 - alpha, bundle.beta_hat.size());
    r.reject = r.statistic > r.critical_value;
    return r;
}

// Wald confidence region membership; exact dual of f_test by construction.
inline bool cr_covers(const EstimateBundle& bundle, const Vector& beta, double alpha) {
    return !f_test(bundle, beta, alpha).reject;
}

struct ReplicationOutcome {
    bool valid = false;
    bool passed_spec = false;
    bool rejected_f = false;
    bool covered_cr = false;
};

// Stream slots within a replication: slot 0 draws the sample (or the limit
// draw), slot 1 + j the critical-value simulation of test j.
inline constexpr std::uint64_t kStreamsPerRep = 64;
inline constexpr std::uint64_t kScenarioStreamBase = 0x8000000000000000ull;

namespace detail {

inline CovarianceMatrix covariance_block(const CovarianceMatrix& full, std::size_t offset,
                                         std::size_t len) {
    Matrix m(len, len);
    for (std::size_t a = 0; a < len; ++a)
        for (std::size_t b = 0; b < len; ++b) m(a, b) = full(offset + a, offset + b);
    return CovarianceMatrix(std::move(m));
}

inline Matrix influence_block(const Matrix& infl, std::size_t first, std::size_t len) {
    Matrix m(infl.rows(), len);
    for (std::size_t i = 0; i < infl.rows(); ++i) {
        const double* src = infl.row_ptr(i) + first;
        double* dst = m.row_ptr(i);
        for (std::size_t j = 0; j < len; ++j) dst[j] = src[j];
    }
    return m;
}

inline Vector weights_slice(const EstimateBundle& bundle, const SpecTestSetup& setup) {
    if (!setup.uses_grid_weights) return {};
    if (bundle.grid_weights.size() < setup.offset + setup.len)
        throw DimensionMismatch("spec test: grid weights shorter than the grid block");
    return Vector(bundle.grid_weights.begin() + static_cast<std::ptrdiff_t>(setup.offset),
                  bundle.grid_weights.begin() +
                      static_cast<std::ptrdiff_t>(setup.offset + setup.len));
}

inline double spec_statistic(const EstimateBundle& bundle, const SpecTestSetup& setup) {
    const double root = std::sqrt(bundle.n_scale);
    EmpiricalProcessGrid grid;
    grid.values.resize(setup.len);
    for (std::size_t i = 0; i < setup.len; ++i)
        grid.values[i] = root * bundle.theta_hat[setup.offset + i];
    switch (setup.kind) {
        case SpecTestKind::F: {
            Matrix chol;
            try {
                chol = cholesky_nonsingular(
                    covariance_block(bundle.Sigma_theta_hat, setup.offset, setup.len));
            } catch (const NotPositiveSemiDefinite& e) {
                throw SingularSecondMoment(std::string("spec test: ") + e.what());
            }
            return quad_form_inv(chol, grid.values);
        }
        case SpecTestKind::WeightedKS:
            grid.weights = weights_slice(bundle, setup);
            return weighted_ks(grid);
        case SpecTestKind::CvM:
            grid.weights = weights_slice(bundle, setup);
            return cvm_statistic(grid);
        case SpecTestKind::BootstrapJ:
            return quad_form(setup.j_weight, grid.values);
    }
    throw DomainError("spec test: unknown kind");
}

inline double spec_critical_value(const ScenarioConfig& config, const EstimateBundle& bundle,
                                  const SpecTestSetup& setup, double alpha,
                                  SeededStream stream) {
    if (alpha == 0.0) return std::numeric_limits<double>::infinity();
    const Vector w = weights_slice(bundle, setup);
    const Matrix* jw = setup.kind == SpecTestKind::BootstrapJ ? &setup.j_weight : nullptr;
    if (config.crit_method == CritMethod::Multiplier) {
        const Matrix contrib =
            influence_block(bundle.influence, bundle.p + setup.offset, setup.len);
        return multiplier_critical_value(setup.kind, contrib, w, alpha, config.crit_draws,
                                         stream, jw);
    }
    const CovarianceMatrix block =
        covariance_block(bundle.Sigma_theta_hat, setup.offset, setup.len);
    return simulate_critical_value(setup.kind, block, w, alpha, config.crit_draws, stream, jw);
}

}  // namespace detail

// Critical values for exact_limit scenarios are a property of the scenario
// (known covariance), computed once from scenario-level streams.
inline std::vector<double> scenario_critical_values(const ScenarioConfig& config,
                                                    const std::vector<SpecTestSetup>& plan,
                                                    const std::vector<double>& alpha_spec) {
    std::vector<double> crits(plan.size());
    const std::size_t q = static_cast<std::size_t>(config.dgp.gd_q);
    const CovarianceMatrix eye{Matrix::identity(q)};
    const Vector uniform(q, 1.0 / static_cast<double>(q));
    for (std::size_t j = 0; j < plan.size(); ++j) {
        if (alpha_spec[j] == 0.0) {
            crits[j] = std::numeric_limits<double>::infinity();
            continue;
        }
        const Matrix* jw =
            plan[j].kind == SpecTestKind::BootstrapJ ? &plan[j].j_weight : nullptr;
        crits[j] = simulate_critical_value(
            plan[j].kind, eye, uniform, alpha_spec[j], config.crit_draws,
            SeededStream{config.seed, kScenarioStreamBase + j}, jw);
    }
    return crits;
}

// One replication; pure in (config, rep_index) given the resolved plan and,
// for exact_limit scenarios, the per-scenario critical values.
inline ReplicationOutcome run_replication(const ScenarioConfig& config,
                                          const std::vector<SpecTestSetup>& plan,
                                          const std::vector<double>& alpha_spec,
                                          const Vector& b0, const Vector& truth,
                                          const std::vector<double>* scenario_crits,
                                          std::uint64_t rep_index) {
    const std::uint64_t base = rep_index * kStreamsPerRep;
    ReplicationOutcome out;
    try {
        EstimateBundle bundle;
        if (config.dgp.family == DgpFamily::GaussianDirect) {
            bundle = estimate_gaussian_direct(config.dgp, SeededStream{config.seed, base});
        } else {
            const Sample sample =
                generate(config.dgp, config.n, SeededStream{config.seed, base});
            switch (config.dgp.family) {
                case DgpFamily::Did: bundle = estimate_did(sample); break;
                case DgpFamily::Iv: bundle = estimate_iv(sample, config.dgp.grid_size); break;
                case DgpFamily::Gmm:
                    bundle = estimate_gmm(
                        sample, Matrix::identity(static_cast<std::size_t>(config.dgp.gmm_q)));
                    break;
                case DgpFamily::LinearConstant:
                    bundle = estimate_linear_constant(
                        sample, linear_constant_grid(config.dgp.grid_size));
                    break;
                default: break;
            }
        }

        double combined = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < plan.size(); ++j) {
            const double stat = detail::spec_statistic(bundle, plan[j]);
            const double crit =
                scenario_crits != nullptr
                    ? (*scenario_crits)[j]
                    : detail::spec_critical_value(config, bundle, plan[j], alpha_spec[j],
                                                  SeededStream{config.seed, base + 1 + j});
            combined = std::max(combined, stat - crit);
        }
        out.passed_spec = combined <= 0.0;
        out.rejected_f = f_test(bundle, b0, config.alpha_inference).reject;
        out.covered_cr = cr_covers(bundle, truth, config.alpha_inference);
        out.valid = true;
    } catch (const std::runtime_error&) {
        out = ReplicationOutcome{};  // data-driven failure: count as invalid
    }
    return out;
}

struct RateWithInterval {
    double rate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                                 double level) {
    if (trials == 0) throw DomainError("wilson_interval: trials must be positive");
    if (successes > trials) throw DomainError("wilson_interval: successes exceed trials");
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("wilson_interval: level must lie in (0,1)");
    const double z = normal_quantile(0.5 + level / 2.0);
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct MCReport {
    std::string scenario_id;
    std::string family;
    double rho = 0.0;
    std::uint64_t n = 0;
    std::uint64_t reps = 0;
    std::uint64_t reps_valid = 0;
    std::uint64_t reps_passed = 0;
    std::uint64_t invalid_count = 0;
    double pass_rate = 0.0;
    RateWithInterval cond_reject;
    RateWithInterval cond_cover;
    double uncond_reject = 0.0;
    double uncond_cover = 0.0;
    std::vector<double> critical_values;  // exact_limit scenarios only
    std::vector<std::string> warnings;    // not serialized; CLI prints to stderr
};

inline constexpr double kIntervalLevel = 0.95;

// Run all replications and aggregate. Parallel dispatch only affects which
// worker computes a rep, never its outcome, so any worker count produces the
// same report.
inline MCReport run_scenario(const ScenarioConfig& config, std::size_t workers = 1) {
    validate_scenario(config);
    const std::vector<SpecTestSetup> plan = spec_test_plan(config);
    const std::vector<double> alpha_spec = resolved_alpha_spec(config);
    const Vector b0 = resolved_b0(config);
    const Vector truth = true_beta0(config.dgp);
    if (plan.empty()) throw EmptyList("run_scenario: no spec tests in plan");

    std::vector<double> scenario_crits;
    const bool direct = config.dgp.family == DgpFamily::GaussianDirect;
    if (direct) scenario_crits = scenario_critical_values(config, plan, alpha_spec);

    std::vector<ReplicationOutcome> outcomes(config.reps);
    parallel_for(config.reps, workers, [&](std::size_t r) {
        outcomes[r] = run_replication(config, plan, alpha_spec, b0, truth,
                                      direct ? &scenario_crits : nullptr,
                                      static_cast<std::uint64_t>(r));
    });

    std::uint64_t valid = 0, passed = 0, pass_and_reject = 0, pass_and_cover = 0;
    std::uint64_t reject = 0, cover = 0;
    for (const auto& o : outcomes) {
        if (!o.valid) continue;
        ++valid;
        if (o.rejected_f) ++reject;
        if (o.covered_cr) ++cover;
        if (o.passed_spec) {
            ++passed;
            if (o.rejected_f) ++pass_and_reject;
            if (o.covered_cr) ++pass_and_cover;
        }
    }
    if (valid == 0)
        throw AllReplicationsInvalid("run_scenario: every replication failed to estimate");
    if (passed == 0)
        throw AllReplicationsInvalid("run_scenario: no replication passed the spec tests");

    MCReport rep;
    rep.scenario_id = config.scenario_id;
    rep.family = to_string(config.dgp.family);
    rep.rho = config.dgp.rho;
    rep.n = direct ? 0 : config.n;
    rep.reps = config.reps;
    rep.reps_valid = valid;
    rep.reps_passed = passed;
    rep.invalid_count = config.reps - valid;
    rep.pass_rate = static_cast<double>(passed) / static_cast<double>(config.reps);
    auto rate = [](std::uint64_t num, std::uint64_t den) {
        RateWithInterval r;
        r.rate = static_cast<double>(num) / static_cast<double>(den);
        const auto ci = wilson_interval(num, den, kIntervalLevel);
        r.lo = ci.first;
        r.hi = ci.second;
        return r;
    };
    rep.cond_reject = rate(pass_and_reject, passed);
    rep.cond_cover = rate(pass_and_cover, passed);
    rep.uncond_reject = static_cast<double>(reject) / static_cast<double>(valid);
    rep.uncond_cover = static_cast<double>(cover) / static_cast<double>(valid);
    rep.critical_values = scenario_crits;
    if (rep.pass_rate < 0.01)
        rep.warnings.push_back("pass rate below 1%; conditional rates rest on " +
                               std::to_string(passed) + " replications");
    const double invalid_share =
        static_cast<double>(rep.invalid_count) / static_cast<double>(config.reps);
    if (invalid_share > 0.01)
        rep.warnings.push_back("more than 1% of replications were invalid (" +
                               std::to_string(rep.invalid_count) + " of " +
                               std::to_string(config.reps) + ")");
    return rep;
}

}  // namespace condinf
