#pragma once

// Pointwise backward LD structures on an open subset of ℝⁿ (single chart).
//
// An LDField is a Leibniz tensor Π(x) together with constraint forces G(x)
// (n×k, full rank). At x the structure is
//     L(x) = {(Π(x)η + G(x)λ, η) : η ∈ (Im G(x))°, λ ∈ ℝᵏ},
// so ρ*(L(x)) = (Im G(x))° and L(x) ∩ T_xM = Im G(x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ldkit/errors.hpp"
#include "ldkit/linear_ld.hpp"
#include "ldkit/subspace.hpp"

namespace ldkit {

using MatrixFunction = std::function<Matrix(const Vector&)>;

/// Finite-difference step used for gradients and constraint Jacobians.
inline double fd_step(const Vector& x) { return 1e-6 * std::max(1.0, x.norm()); }

class ScalarField {
public:
    using Value = std::function<double(const Vector&)>;
    using Gradient = std::function<Vector(const Vector&)>;

    ScalarField() = default;
    ScalarField(std::size_t dim, Value value, Gradient gradient = {})
        : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)) {}

    std::size_t dim() const noexcept { return dim_; }
    bool has_analytic_gradient() const noexcept { return static_cast<bool>(gradient_); }

    double operator()(const Vector& x) const {
        check(x);
        return value_(x);
    }

    /// Analytic gradient when supplied, central differences otherwise.
    Vector gradient(const Vector& x) const {
        check(x);
        if (gradient_) return gradient_(x);
        return fd_gradient(x);
    }

    Vector fd_gradient(const Vector& x) const {
        const double h = fd_step(x);
        Vector g(x.size());
        Vector probe = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            probe(i) = x(i) + h;
            const double up = value_(probe);
            probe(i) = x(i) - h;
            const double down = value_(probe);
            probe(i) = x(i);
            g(i) = (up - down) / (2.0 * h);
        }
        return g;
    }

private:
    void check(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != dim_) {
            throw InputError("ScalarField: expected a point of dimension " + std::to_string(dim_));
        }
    }

    std::size_t dim_ = 0;
    Value value_;
    Gradient gradient_;
};

/// Largest relative mismatch between the analytic gradient and central
/// differences over the probe points (0 when no analytic gradient is set).
inline double gradient_mismatch(const ScalarField& f, const std::vector<Vector>& probes) {
    if (!f.has_analytic_gradient()) return 0.0;
    double worst = 0.0;
    for (const Vector& x : probes) {
        const Vector a = f.gradient(x);
        const Vector d = f.fd_gradient(x);
        worst = std::max(worst, (a - d).norm() / std::max(1.0, d.norm()));
    }
    return worst;
}

inline void validate_gradient(const ScalarField& f, const std::vector<Vector>& probes, double rel_tol = 1e-4) {
    const double m = gradient_mismatch(f, probes);
    if (m > rel_tol) {
        throw InputError("analytic gradient disagrees with finite differences (relative mismatch " +
                         std::to_string(m) + ")");
    }
}

class TensorField {
public:
    TensorField() = default;
    TensorField(std::size_t dim, MatrixFunction eval) : dim_(dim), eval_(std::move(eval)) {}

    static TensorField constant(const Matrix& m) {
        return TensorField(static_cast<std::size_t>(m.rows()), [m](const Vector&) { return m; });
    }

    std::size_t dim() const noexcept { return dim_; }

    Matrix operator()(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != dim_) {
            throw InputError("TensorField: expected a point of dimension " + std::to_string(dim_));
        }
        Matrix m = eval_(x);
        const auto d = static_cast<Eigen::Index>(dim_);
        if (m.rows() != d || m.cols() != d) throw InputError("TensorField: eval returned a wrongly shaped matrix");
        require_finite(m, "TensorField");
        return m;
    }

private:
    std::size_t dim_ = 0;
    MatrixFunction eval_;
};

class ConstraintField {
public:
    ConstraintField() = default;
    ConstraintField(std::size_t dim, std::size_t k, MatrixFunction eval) : dim_(dim), k_(k), eval_(std::move(eval)) {}

    /// k = 0: no constraint forces.
    static ConstraintField none(std::size_t dim) {
        return ConstraintField(dim, 0, [dim](const Vector&) { return Matrix(static_cast<Eigen::Index>(dim), 0); });
    }

    static ConstraintField constant(const Matrix& g) {
        return ConstraintField(static_cast<std::size_t>(g.rows()), static_cast<std::size_t>(g.cols()),
                               [g](const Vector&) { return g; });
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t k() const noexcept { return k_; }

    /// G(x) without the rank check.
    Matrix raw(const Vector& x) const {
        if (static_cast<std::size_t>(x.size()) != dim_) {
            throw InputError("ConstraintField: expected a point of dimension " + std::to_string(dim_));
        }
        if (k_ == 0) return Matrix(static_cast<Eigen::Index>(dim_), 0);
        Matrix g = eval_(x);
        if (g.rows() != static_cast<Eigen::Index>(dim_) || g.cols() != static_cast<Eigen::Index>(k_)) {
            throw InputError("ConstraintField: eval returned a wrongly shaped matrix");
        }
        require_finite(g, "ConstraintField");
        return g;
    }

    /// G(x), checked to have full column rank k.
    Matrix operator()(const Vector& x, const Tolerance& tol = {}) const {
        Matrix g = raw(x);
        if (k_ > 0 && rank_kernel(g, tol).rank != k_) {
            throw RegularityError("constraint field is rank deficient at the queried point");
        }
        return g;
    }

private:
    std::size_t dim_ = 0;
    std::size_t k_ = 0;
    MatrixFunction eval_;
};

struct LDField {
    TensorField pi;
    ConstraintField g_field;

    std::size_t dim() const noexcept { return pi.dim(); }

    static LDField make(TensorField pi, ConstraintField g) {
        if (pi.dim() != g.dim()) throw InputError("LDField: tensor and constraint fields disagree on dimension");
        return LDField{std::move(pi), std::move(g)};
    }
};

/// ρ*(L(x)) = (Im G(x))°.
inline Subspace codistribution(const LDField& ld, const Vector& x, const Tolerance& tol = {}) {
    const Matrix g = ld.g_field(x, tol);
    return annihilator(Subspace::span(g, tol));
}

inline LinearLD pointwise(const LDField& ld, const Vector& x, const Tolerance& tol = {}) {
    const Subspace f = codistribution(ld, x, tol);
    const Matrix& fb = f.basis();
    const Matrix pi = ld.pi(x);
    return from_pair(PairRep{Orientation::backward, f, fb.transpose() * pi * fb}, tol);
}

struct BracketValue {
    double full = 0.0;  ///< {{f,g}} = ⟨df | Π dg⟩
    double skew = 0.0;  ///< {f,g} from Π⁻
    double sym = 0.0;   ///< [f,g] from Π⁺
};

namespace detail {

inline void require_admissible(const Matrix& g, const Vector& df, const char* name, const Tolerance& tol) {
    if (g.cols() == 0) return;
    const Subspace img = Subspace::span(g, tol);
    const Vector along = img.basis().transpose() * df;
    if (along.norm() > tol.residual_eps * std::max(1.0, df.norm())) {
        const Vector coeffs = g.completeOrthogonalDecomposition().solve(img.basis() * along);
        throw AdmissibilityError(std::string(name) + " is not admissible: d" + name +
                                     " has a component of norm " + std::to_string(along.norm()) +
                                     " along Im G(x)",
                                 name, coeffs);
    }
}

}  // namespace detail

/// Bracket of admissible functions at x, split into skew and symmetric parts.
inline BracketValue bracket(const LDField& ld, const ScalarField& f, const ScalarField& g, const Vector& x,
                            const Tolerance& tol = {}) {
    const Vector df = f.gradient(x);
    const Vector dg = g.gradient(x);
    if (ld.g_field.k() > 0) {
        const Matrix gm = ld.g_field(x, tol);
        detail::require_admissible(gm, df, "f", tol);
        detail::require_admissible(gm, dg, "g", tol);
    }
    const MapParts parts = decompose_map(ld.pi(x));
    BracketValue b;
    b.skew = df.dot(parts.skew * dg);
    b.sym = df.dot(parts.sym * dg);
    b.full = b.skew + b.sym;
    return b;
}

struct RegularitySample {
    Vector point;
    std::size_t rank_g = 0;
    std::size_t rank_codistribution = 0;
    bool flagged = false;
};

struct RegularityReport {
    std::vector<RegularitySample> samples;
    std::size_t generic_rank_g = 0;
    bool constant_rank = true;

    std::vector<std::size_t> flagged_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].flagged) out.push_back(i);
        }
        return out;
    }
};

/// Ranks of G(x) and ρ*(L(x)) over the samples; samples below the maximal
/// observed rank of G are flagged as rank jumps.
inline RegularityReport regularity_scan(const LDField& ld, const std::vector<Vector>& samples,
                                        const Tolerance& tol = {}) {
    if (samples.empty()) throw InputError("regularity_scan: no samples");
    RegularityReport report;
    const std::size_t n = ld.dim();
    for (const Vector& x : samples) {
        RegularitySample s;
        s.point = x;
        const Matrix g = ld.g_field.raw(x);
        s.rank_g = g.cols() == 0 ? 0 : rank_kernel(g, tol).rank;
        s.rank_codistribution = n - s.rank_g;
        report.generic_rank_g = std::max(report.generic_rank_g, s.rank_g);
        report.samples.push_back(std::move(s));
    }
    for (auto& s : report.samples) {
        s.flagged = s.rank_g < report.generic_rank_g;
        if (s.flagged) report.constant_rank = false;
    }
    return report;
}

/// Largest distance from span G(x) of the Lie brackets [g_i, g_j](x) of the
/// columns of G, with directional derivatives by central differences of step h.
/// A small value is necessary, not sufficient, for involutivity of L ∩ TM.
inline double involutivity_probe(const LDField& ld, const Vector& x, double h = 1e-4, const Tolerance& tol = {}) {
    const Matrix g0 = ld.g_field(x, tol);
    const Eigen::Index k = g0.cols();
    if (k < 2) return 0.0;
    auto directional = [&](const Vector& dir) {
        return Matrix((ld.g_field.raw(x + h * dir) - ld.g_field.raw(x - h * dir)) / (2.0 * h));
    };
    std::vector<Matrix> along;  // along[i] = D G(x)·g_i
    along.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) along.push_back(directional(g0.col(i)));
    const Subspace img = Subspace::span(g0, tol);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            // [g_i, g_j] = Dg_j·g_i − Dg_i·g_j
            const Vector lie = along[static_cast<std::size_t>(i)].col(j) - along[static_cast<std::size_t>(j)].col(i);
            const Vector off = lie - img.basis() * (img.basis().transpose() * lie);
            worst = std::max(worst, off.norm());
        }
    }
    return worst;
}

}  // namespace ldkit
