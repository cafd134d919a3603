#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "condinf/chi_squared.hpp"
#include "condinf/dgp.hpp"
#include "condinf/estimators.hpp"
#include "condinf/mc.hpp"

using namespace condinf;

namespace {

EstimateBundle estimate_family(DgpFamily f, const Sample& s, int grid_size) {
    switch (f) {
        case DgpFamily::Did: return estimate_did(s);
        case DgpFamily::Iv: return estimate_iv(s, grid_size);
        case DgpFamily::Gmm: return estimate_gmm(s, Matrix::identity(3));
        case DgpFamily::LinearConstant:
            return estimate_linear_constant(s, linear_constant_grid(grid_size));
        default: throw BadParams("estimate_family: sampled families only");
    }
}

}  // namespace

TEST_CASE("sandwich variances match the Monte Carlo spread and the F test holds size") {
    // One long pass per family: the average V_hat must match the realized
    // variance of sqrt(n) beta_hat across replications, and the F test at the
    // truth must reject at close to its nominal 5% on the first 2000 reps.
    const std::size_t reps = 10000;
    const std::size_t n = 2000;
    const std::size_t size_reps = 2000;

    for (DgpFamily f :
         {DgpFamily::Did, DgpFamily::Iv, DgpFamily::Gmm, DgpFamily::LinearConstant}) {
        DgpParams params;
        params.family = f;
        params.rho = 0.4;
        params.grid_size = 5;
        const Vector truth = true_beta0(params);
        const std::size_t p = truth.size();

        std::vector<Vector> betas;
        betas.reserve(reps);
        Vector vbar(p, 0.0);
        std::size_t rejections = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const Sample s = generate(params, n, SeededStream{40000 + r, 0});
            const EstimateBundle b = estimate_family(f, s, params.grid_size);
            betas.push_back(b.beta_hat);
            for (std::size_t j = 0; j < p; ++j) vbar[j] += b.V_hat(j, j);
            if (r < size_reps && f_test(b, truth, 0.05).reject) ++rejections;
        }
        for (double& v : vbar) v /= static_cast<double>(reps);

        for (std::size_t j = 0; j < p; ++j) {
            double mean = 0.0;
            for (const auto& b : betas) mean += b[j];
            mean /= static_cast<double>(reps);
            double var = 0.0;
            for (const auto& b : betas) var += (b[j] - mean) * (b[j] - mean);
            var *= static_cast<double>(n) / static_cast<double>(reps - 1);

            INFO("family " << to_string(f) << " component " << j);
            // MC standard error of a sample variance is about var sqrt(2/R)
            const double tol = 4.0 * var * std::sqrt(2.0 / static_cast<double>(reps));
            REQUIRE(std::abs(vbar[j] - var) <= tol);
        }

        const double rate = static_cast<double>(rejections) / static_cast<double>(size_reps);
        const double band = 3.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(size_reps));
        INFO("family " << to_string(f) << " null rejection rate " << rate);
        REQUIRE(std::abs(rate - 0.05) <= band);
    }
}

TEST_CASE("iv recovers the complier effect on a large sample") {
    DgpParams params;
    params.family = DgpFamily::Iv;
    params.rho = 0.5;
    params.late_complier = 1.0;
    const Sample s = generate(params, 10000, SeededStream{41000, 0});
    const EstimateBundle b = estimate_iv(s, 5);
    const double se = std::sqrt(b.V_hat(0, 0) / b.n_scale);
    REQUIRE(b.beta_hat[0] == Catch::Approx(1.0).margin(4.0 * se));
}

TEST_CASE("the CvM screen detects curvature the line misses") {
    DgpParams null_params;
    null_params.family = DgpFamily::LinearConstant;
    null_params.grid_size = 21;
    DgpParams bent = null_params;
    bent.null_mode = false;
    bent.violation = 0.3;

    const std::size_t reps = 300;
    const std::size_t n = 5000;
    auto pass_count = [&](const DgpParams& params, std::uint64_t seed) {
        ScenarioConfig c;
        c.dgp = params;
        c.n = n;
        c.reps = reps;
        c.seed = seed;
        c.crit_draws = 1000;
        const auto plan = spec_test_plan(c);
        const auto alpha = resolved_alpha_spec(c);
        const Vector b0 = resolved_b0(c);
        const Vector truth = true_beta0(c.dgp);
        std::size_t passed = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const ReplicationOutcome o =
                run_replication(c, plan, alpha, b0, truth, nullptr, r);
            if (o.valid && o.passed_spec) ++passed;
        }
        return passed;
    };

    const std::size_t pass_null = pass_count(null_params, 42000);
    const std::size_t pass_bent = pass_count(bent, 42001);
    REQUIRE(pass_null > 270);  // ~95% pass rate under the null
    REQUIRE(pass_bent < 60);   // curvature of 0.3 is detected almost always
}

TEST_CASE("the two-step overidentification statistic is pivotal") {
    // With the optimal weighting the J quadratic form is asymptotically
    // chi-squared with q - p degrees of freedom; the simulated critical value
    // built from the estimated moment covariance must land on that quantile.
    DgpParams params;
    params.family = DgpFamily::Gmm;
    params.gmm_q = 3;
    params.rho = 0.3;
    params.endogeneity = 0.5;
    const Sample s = generate(params, 10000, SeededStream{43000, 0});

    const EstimateBundle first = estimate_gmm(s, Matrix::identity(3));
    // second-step weight: inverse of P_n z z' e^2 at the first-step residuals
    const Vector& y = s.col("y");
    const Vector& x = s.col("x");
    const Vector& z1 = s.col("z1");
    const Vector& z2 = s.col("z2");
    Matrix omega(3, 3);
    for (std::size_t i = 0; i < s.rows(); ++i) {
        const double e = y[i] - first.beta_hat[0] - first.beta_hat[1] * x[i];
        const double z[3] = {1.0, z1[i], z2[i]};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) omega(a, b) += z[a] * z[b] * e * e;
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) omega(a, b) /= static_cast<double>(s.rows());
    const Matrix om_chol = cholesky_nonsingular(CovarianceMatrix(symmetrized(omega)));
    Matrix weight(3, 3);
    for (int col = 0; col < 3; ++col) {
        Vector e(3, 0.0);
        e[static_cast<std::size_t>(col)] = 1.0;
        Vector sol = forward_solve(om_chol, e);
        sol = backward_solve_transposed(om_chol, sol);
        for (int row = 0; row < 3; ++row) weight(row, col) = sol[row];
    }

    const EstimateBundle second = estimate_gmm(s, weight);
    const double j_stat =
        second.n_scale * quad_form(weight, second.theta_hat);
    REQUIRE(j_stat >= 0.0);
    REQUIRE(j_stat < chi2_quantile(0.9999, 1));  // one draw from ~chi2(1)

    // the plug-in critical value of the J form under the estimated moment
    // covariance (rank q - p) approximates the chi2(q - p) quantile
    const double crit = simulate_critical_value(SpecTestKind::BootstrapJ,
                                                second.Sigma_theta_hat, {}, 0.05, 100000,
                                                SeededStream{43001, 0}, &weight);
    REQUIRE(crit == Catch::Approx(chi2_quantile(0.95, 1)).margin(0.2));
}

TEST_CASE("the direct limit draw reproduces its cross correlation") {
    const std::size_t reps = 20000;
    auto correlation = [&](double rho, std::uint64_t seed) {
        DgpParams params;
        params.family = DgpFamily::GaussianDirect;
        params.rho = rho;
        double sb = 0.0, st = 0.0, sbb = 0.0, stt = 0.0, sbt = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const EstimateBundle b =
                estimate_gaussian_direct(params, SeededStream{seed, r});
            const double u = b.beta_hat[0];
            const double v = b.theta_hat[0];
            sb += u;
            st += v;
            sbb += u * u;
            stt += v * v;
            sbt += u * v;
        }
        const double n = static_cast<double>(reps);
        const double cb = sbb / n - (sb / n) * (sb / n);
        const double ct = stt / n - (st / n) * (st / n);
        const double cbt = sbt / n - (sb / n) * (st / n);
        return cbt / std::sqrt(cb * ct);
    };
    const double four_se = 4.0 / std::sqrt(static_cast<double>(reps));
    REQUIRE(std::abs(correlation(0.0, 44000)) <= four_se);
    REQUIRE(correlation(0.9, 44001) == Catch::Approx(0.9).margin(four_se));
}
