#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/parallel.hpp"
#include "condinf/rng.hpp"

// Monte Carlo verification of the correlation inequality for centered
// Gaussian measures: P(E and F) >= P(E) P(F) for convex symmetric E, F. Both
// event indicators are evaluated on the same draws, so the joint probability
// can never exceed either margin by construction.

namespace condinf {

struct ConvexSymmetricSet {
    enum class Kind { Ellipsoid, Slab, Polytope };
    Kind kind = Kind::Slab;
    Matrix a;       // ellipsoid: x' a x <= c
    Matrix faces;   // polytope: |faces_k . x| <= bounds_k for all k
    Vector normal;  // slab: |normal . x| <= c
    Vector bounds;
    double c = 1.0;

    std::size_t dim() const {
        switch (kind) {
            case Kind::Ellipsoid: return a.rows();
            case Kind::Slab: return normal.size();
            case Kind::Polytope: return faces.cols();
        }
        return 0;
    }

    static ConvexSymmetricSet ellipsoid(Matrix shape, double bound) {
        if (shape.rows() != shape.cols() || shape.rows() == 0)
            throw DimensionMismatch("ellipsoid: shape matrix must be square");
        if (!(bound > 0.0)) throw DomainError("ellipsoid: bound must be positive");
        ConvexSymmetricSet s;
        s.kind = Kind::Ellipsoid;
        s.a = std::move(shape);
        s.c = bound;
        return s;
    }
    static ConvexSymmetricSet slab(Vector direction, double bound) {
        if (direction.empty()) throw DimensionMismatch("slab: empty direction");
        if (!(bound > 0.0)) throw DomainError("slab: bound must be positive");
        ConvexSymmetricSet s;
        s.kind = Kind::Slab;
        s.normal = std::move(direction);
        s.c = bound;
        return s;
    }
    static ConvexSymmetricSet polytope(Matrix face_rows, Vector face_bounds) {
        if (face_rows.rows() == 0 || face_rows.cols() == 0)
            throw DimensionMismatch("polytope: needs at least one face");
        if (face_bounds.size() != face_rows.rows())
            throw DimensionMismatch("polytope: one bound per face");
        for (double b : face_bounds)
            if (!(b > 0.0)) throw DomainError("polytope: bounds must be positive");
        ConvexSymmetricSet s;
        s.kind = Kind::Polytope;
        s.faces = std::move(face_rows);
        s.bounds = std::move(face_bounds);
        return s;
    }
};

inline bool membership(const ConvexSymmetricSet& set, const Vector& x) {
    if (x.size() != set.dim()) throw DimensionMismatch("membership: dimension mismatch");
    switch (set.kind) {
        case ConvexSymmetricSet::Kind::Ellipsoid:
            return quad_form(set.a, x) <= set.c;
        case ConvexSymmetricSet::Kind::Slab:
            return std::abs(dot(set.normal, x)) <= set.c;
        case ConvexSymmetricSet::Kind::Polytope:
            for (std::size_t k = 0; k < set.faces.rows(); ++k) {
                double s = 0.0;
                const double* row = set.faces.row_ptr(k);
                for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
                if (std::abs(s) > set.bounds[k]) return false;
            }
            return true;
    }
    return false;
}

struct GciReport {
    std::string case_id;
    std::size_t dim = 0;
    std::uint64_t draws = 0;
    double p_joint = 0.0;
    double p_e = 0.0;
    double p_f = 0.0;
    double margin = 0.0;     // p_joint - p_e * p_f
    double se_margin = 0.0;  // delta-method standard error of the margin
};

// Estimate both probabilities and the margin on common draws from N(0,
// sigma). The margin's standard error comes from the multinomial covariance
// of the four indicator cells.
inline GciReport check_gci(const CovarianceMatrix& sigma, const ConvexSymmetricSet& e,
                           const ConvexSymmetricSet& f, std::uint64_t draws,
                           SeededStream stream) {
    if (draws < 10000) throw DomainError("check_gci: needs at least 10000 draws");
    const std::size_t dim = sigma.dim();
    if (e.dim() != dim || f.dim() != dim)
        throw DimensionMismatch("check_gci: sets must match the covariance dimension");
    const Matrix chol = cholesky(sigma);

    const std::uint64_t stride = u64s_for_normals(dim);
    std::uint64_t n11 = 0, ne = 0, nf = 0;
    Vector z(dim), x(dim);
    for (std::uint64_t r = 0; r < draws; ++r) {
        Rng rng(stream, stride * r);
        fill_normals(rng, z.data(), dim);
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            const double* li = chol.row_ptr(i);
            for (std::size_t j = 0; j <= i; ++j) s += li[j] * z[j];
            x[i] = s;
        }
        const bool in_e = membership(e, x);
        const bool in_f = membership(f, x);
        if (in_e) ++ne;
        if (in_f) ++nf;
        if (in_e && in_f) ++n11;
    }

    GciReport rep;
    rep.dim = dim;
    rep.draws = draws;
    const double n = static_cast<double>(draws);
    rep.p_joint = static_cast<double>(n11) / n;
    rep.p_e = static_cast<double>(ne) / n;
    rep.p_f = static_cast<double>(nf) / n;
    rep.margin = rep.p_joint - rep.p_e * rep.p_f;

    // cells: 11, 10, 01 (00 has zero gradient); g = p11 - pE pF
    const double p11 = rep.p_joint;
    const double p10 = rep.p_e - p11;
    const double p01 = rep.p_f - p11;
    const double d11 = 1.0 - rep.p_e - rep.p_f;
    const double d10 = -rep.p_f;
    const double d01 = -rep.p_e;
    const double mean = p11 * d11 + p10 * d10 + p01 * d01;
    const double second = p11 * d11 * d11 + p10 * d10 * d10 + p01 * d01 * d01;
    rep.se_margin = std::sqrt(std::max(second - mean * mean, 0.0) / n);
    return rep;
}

struct GciSweepConfig {
    std::uint64_t cases = 200;
    std::size_t dim_max = 6;
    std::uint64_t draws = 100000;
    std::uint64_t seed = 1;
};

inline void validate_gci_sweep(const GciSweepConfig& config) {
    // cases = 0 is legal and yields an empty report list
    if (config.dim_max < 2 || config.dim_max > 10)
        throw ValidationError("gci.dim_max", "must lie in [2,10]");
    if (config.draws < 10000) throw ValidationError("gci.draws", "must be at least 10000");
}

namespace detail {

// Random correlation matrix: eigenvalues in [0.2, 2.2] rotated by a random
// orthogonal matrix (Gram-Schmidt on Gaussian columns), rescaled to unit
// diagonal.
inline CovarianceMatrix random_correlation(std::size_t dim, Rng& rng) {
    Matrix q(dim, dim);
    for (std::size_t trial = 0;; ++trial) {
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) q(i, j) = rng.normal();
        bool ok = true;
        for (std::size_t c = 0; c < dim && ok; ++c) {
            for (std::size_t prev = 0; prev < c; ++prev) {
                double proj = 0.0;
                for (std::size_t r = 0; r < dim; ++r) proj += q(r, c) * q(r, prev);
                for (std::size_t r = 0; r < dim; ++r) q(r, c) -= proj * q(r, prev);
            }
            double norm = 0.0;
            for (std::size_t r = 0; r < dim; ++r) norm += q(r, c) * q(r, c);
            norm = std::sqrt(norm);
            if (norm < 1e-8) {
                ok = false;
                break;
            }
            for (std::size_t r = 0; r < dim; ++r) q(r, c) /= norm;
        }
        if (ok) break;
        if (trial > 16) throw DomainError("random_correlation: degenerate Gaussian matrix");
    }
    Vector lambda(dim);
    for (double& l : lambda) l = 0.2 + 2.0 * rng.uniform01();
    Matrix sigma(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += q(i, k) * lambda[k] * q(j, k);
            sigma(i, j) = s;
            sigma(j, i) = s;
        }
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            if (i != j) sigma(i, j) /= std::sqrt(sigma(i, i) * sigma(j, j));
    for (std::size_t i = 0; i < dim; ++i) sigma(i, i) = 1.0;
    return CovarianceMatrix(std::move(sigma));
}

inline ConvexSymmetricSet random_set(std::size_t dim, const CovarianceMatrix& sigma, Rng& rng) {
    const int kind = static_cast<int>(rng.uniform01() * 3.0);
    if (kind == 0) {
        // slab along a random direction, width a moderate multiple of its sd
        Vector a(dim);
        double norm = 0.0;
        for (double& v : a) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : a) v /= norm;
        double var = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) var += a[i] * sigma(i, j) * a[j];
        return ConvexSymmetricSet::slab(std::move(a), std::sqrt(var) * (0.8 + 1.4 * rng.uniform01()));
    }
    if (kind == 1) {
        // ellipsoid B'B scaled so the threshold sits near E[x'Ax]
        Matrix b(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) b(i, j) = rng.normal();
        Matrix shape(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) s += b(k, i) * b(k, j);
                shape(i, j) = s / static_cast<double>(dim);
                shape(j, i) = shape(i, j);
            }
        double trace = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) trace += shape(i, j) * sigma(j, i);
        return ConvexSymmetricSet::ellipsoid(std::move(shape),
                                             trace * (0.7 + 1.3 * rng.uniform01()));
    }
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(dim));
    Matrix faces(m, dim);
    Vector bounds(m);
    for (std::size_t k = 0; k < m; ++k) {
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            faces(k, j) = rng.normal();
            norm += faces(k, j) * faces(k, j);
        }
        norm = std::sqrt(norm);
        double var = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                var += faces(k, i) * sigma(i, j) * faces(k, j);
        var /= norm * norm;
        for (std::size_t j = 0; j < dim; ++j) faces(k, j) /= norm;
        bounds[k] = std::sqrt(var) * (1.2 + 1.4 * rng.uniform01());
    }
    return ConvexSymmetricSet::polytope(std::move(faces), std::move(bounds));
}

}  // namespace detail

// Randomized sweep: each case draws a correlation matrix and two random
// convex symmetric sets from its own stream, then estimates the margin. Case
// construction and estimation both depend only on (seed, case index).
inline std::vector<GciReport> random_sweep(const GciSweepConfig& config,
                                           std::size_t workers = 1) {
    validate_gci_sweep(config);
    std::vector<GciReport> reports(config.cases);
    parallel_for(config.cases, workers, [&](std::size_t c) {
        const std::uint64_t base = static_cast<std::uint64_t>(c) * 8;
        Rng gen(SeededStream{config.seed, base});
        const std::size_t dim =
            2 + static_cast<std::size_t>(gen.uniform01() *
                                         static_cast<double>(config.dim_max - 1));
        const CovarianceMatrix sigma = detail::random_correlation(dim, gen);
        const ConvexSymmetricSet e = detail::random_set(dim, sigma, gen);
        const ConvexSymmetricSet f = detail::random_set(dim, sigma, gen);
        GciReport rep =
            check_gci(sigma, e, f, config.draws, SeededStream{config.seed, base + 1});
        rep.case_id = "case" + std::to_string(c);
        reports[c] = rep;
    });
    return reports;
}

}  // namespace condinf
