#pragma once

// Tolerance-aware dense subspace algebra on ℝᵐ and on V ⊕ V* ≅ ℝ²ⁿ.
//
// A subspace is stored as an orthonormal column basis. V* is identified with
// V through the standard dot product, so annihilators are orthogonal
// complements in coordinates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldkit/errors.hpp"

namespace ldkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerance {
    /// Relative singular-value cutoff for rank decisions.
    double rank_eps = 1e-9;
    /// Membership / equation residual bound.
    double residual_eps = 1e-8;

    static Tolerance checked(double rank_eps, double residual_eps) {
        if (!(rank_eps > 0.0) || !(residual_eps > 0.0)) {
            throw InputError("tolerances must be strictly positive");
        }
        return Tolerance{rank_eps, residual_eps};
    }
};

/// Which factor of V ⊕ V*: V (ρ) or V* (ρ*).
enum class Factor { first, second };

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw InputError(std::string(what) + ": non-finite entries");
    }
}

class Subspace {
public:
    /// The zero subspace of ℝᵐ.
    explicit Subspace(std::size_t ambient_dim = 0) : basis_(Matrix::Zero(static_cast<Eigen::Index>(ambient_dim), 0)) {}

    static Subspace zero(std::size_t ambient_dim) { return Subspace(ambient_dim); }

    static Subspace full(std::size_t ambient_dim) {
        const auto m = static_cast<Eigen::Index>(ambient_dim);
        return Subspace(Matrix::Identity(m, m), adopt_tag{});
    }

    /// Column span of `columns`, orthonormalized through an SVD. Singular
    /// values at or below rank_eps·max(σ_max, reference_norm) are dropped;
    /// a nonzero reference_norm keeps blocks of a larger orthonormal basis
    /// from having their round-off promoted to rank.
    static Subspace span(const Matrix& columns, const Tolerance& tol, double reference_norm = 0.0) {
        require_finite(columns, "Subspace::span");
        const Eigen::Index m = columns.rows();
        if (columns.cols() == 0 || m == 0) {
            return Subspace(static_cast<std::size_t>(m));
        }
        Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeFullU);
        const auto& sv = svd.singularValues();
        const double scale = std::max(sv(0), reference_norm);
        if (scale == 0.0) {
            return Subspace(static_cast<std::size_t>(m));
        }
        Eigen::Index r = 0;
        while (r < sv.size() && sv(r) > tol.rank_eps * scale) {
            ++r;
        }
        if (r == m) {
            return full(static_cast<std::size_t>(m));
        }
        return Subspace(svd.matrixU().leftCols(r), adopt_tag{});
    }

    /// Wraps a basis that is already orthonormal; validated against residual_eps.
    static Subspace from_orthonormal(const Matrix& basis, const Tolerance& tol) {
        require_finite(basis, "Subspace::from_orthonormal");
        if (basis.cols() > basis.rows()) {
            throw InputError("Subspace::from_orthonormal: more columns than ambient dimension");
        }
        const Matrix gram = basis.transpose() * basis;
        const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
        if (basis.cols() > 0 && err > tol.residual_eps) {
            throw InputError("Subspace::from_orthonormal: columns are not orthonormal");
        }
        return Subspace(basis, adopt_tag{});
    }

    std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
    bool is_zero() const noexcept { return basis_.cols() == 0; }
    bool is_full() const noexcept { return basis_.cols() == basis_.rows(); }
    const Matrix& basis() const noexcept { return basis_; }

    /// Orthogonal projector onto the subspace.
    Matrix projector() const { return basis_ * basis_.transpose(); }

    /// |v − P v| relative to max(1, |v|).
    double membership_residual(const Vector& v) const {
        const Vector r = v - basis_ * (basis_.transpose() * v);
        return r.norm() / std::max(1.0, v.norm());
    }

    bool contains(const Vector& v, const Tolerance& tol = {}) const { return membership_residual(v) <= tol.residual_eps; }

    bool contains(const Subspace& other, const Tolerance& tol = {}) const {
        check_same_ambient(other, "Subspace::contains");
        for (Eigen::Index j = 0; j < other.basis_.cols(); ++j) {
            if (!contains(Vector(other.basis_.col(j)), tol)) return false;
        }
        return true;
    }

private:
    struct adopt_tag {};
    Subspace(Matrix basis, adopt_tag) : basis_(std::move(basis)) {}

    void check_same_ambient(const Subspace& other, const char* what) const {
        if (other.ambient_dim() != ambient_dim()) {
            throw InputError(std::string(what) + ": ambient dimension mismatch");
        }
    }

    Matrix basis_;
};

/// Spectral norm of the difference of the orthogonal projectors, i.e. the sine
/// of the largest principal angle (1 whenever the dimensions differ).
inline double distance(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim() != b.ambient_dim()) {
        throw InputError("distance: ambient dimension mismatch");
    }
    if (a.ambient_dim() == 0) return 0.0;
    const Matrix d = a.projector() - b.projector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Equality as mutual membership of the bases within residual_eps.
inline bool same_subspace(const Subspace& a, const Subspace& b, const Tolerance& tol) {
    return a.dim() == b.dim() && a.contains(b, tol) && b.contains(a, tol);
}

struct RankKernel {
    std::size_t rank;
    Subspace kernel;
};

inline RankKernel rank_kernel(const Matrix& m, const Tolerance& tol) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw InputError("rank_kernel: empty matrix");
    }
    require_finite(m, "rank_kernel");
    const auto cols = static_cast<std::size_t>(m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    if (sv(0) > 0.0) {
        while (r < sv.size() && sv(r) > tol.rank_eps * sv(0)) ++r;
    }
    if (r == 0) return {0, Subspace::full(cols)};
    if (r == m.cols()) return {static_cast<std::size_t>(r), Subspace::zero(cols)};
    return {static_cast<std::size_t>(r), Subspace::from_orthonormal(svd.matrixV().rightCols(m.cols() - r), tol)};
}

/// Orthogonal complement W° of w. The basis is built deterministically by
/// pivoted Gram–Schmidt on the projected standard basis vectors (first index
/// wins ties), so coordinate-aligned inputs give coordinate-aligned outputs.
inline Subspace annihilator(const Subspace& w) {
    const auto m = static_cast<Eigen::Index>(w.ambient_dim());
    const auto k = static_cast<Eigen::Index>(w.dim());
    if (k == 0) return Subspace::full(static_cast<std::size_t>(m));
    if (k == m) return Subspace::zero(static_cast<std::size_t>(m));

    const Matrix& q = w.basis();
    Matrix residual = Matrix::Identity(m, m) - q * q.transpose();
    Matrix out(m, m - k);
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    auto orthogonalize = [&](Vector v, Eigen::Index filled) {
        for (int pass = 0; pass < 2; ++pass) {
            v -= q * (q.transpose() * v);
            if (filled > 0) v -= out.leftCols(filled) * (out.leftCols(filled).transpose() * v);
        }
        return v;
    };
    for (Eigen::Index s = 0; s < m - k; ++s) {
        double best = -1.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!used[static_cast<std::size_t>(j)]) best = std::max(best, residual.col(j).norm());
        }
        Eigen::Index pick = 0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!used[static_cast<std::size_t>(j)] && residual.col(j).norm() >= (1.0 - 1e-12) * best) {
                pick = j;
                break;
            }
        }
        used[static_cast<std::size_t>(pick)] = true;
        Vector v = orthogonalize(residual.col(pick), s);
        v.normalize();
        out.col(s) = v;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (!used[static_cast<std::size_t>(j)]) residual.col(j) -= v * v.dot(residual.col(j));
        }
    }
    return Subspace::from_orthonormal(out, Tolerance{1e-9, 1e-8});
}

/// a ∩ b, computed as (a° + b°)°.
inline Subspace intersect(const Subspace& a, const Subspace& b, const Tolerance& tol) {
    if (a.ambient_dim() != b.ambient_dim()) {
        throw InputError("intersect: ambient dimension mismatch");
    }
    const Subspace ca = annihilator(a);
    const Subspace cb = annihilator(b);
    Matrix both(static_cast<Eigen::Index>(a.ambient_dim()), ca.basis().cols() + cb.basis().cols());
    both << ca.basis(), cb.basis();
    return annihilator(Subspace::span(both, tol, 1.0));
}

/// Sum a + b.
inline Subspace sum(const Subspace& a, const Subspace& b, const Tolerance& tol) {
    if (a.ambient_dim() != b.ambient_dim()) {
        throw InputError("sum: ambient dimension mismatch");
    }
    Matrix both(static_cast<Eigen::Index>(a.ambient_dim()), a.basis().cols() + b.basis().cols());
    both << a.basis(), b.basis();
    return Subspace::span(both, tol, 1.0);
}

inline std::size_t half_dim(const Subspace& l, const char* what) {
    if (l.ambient_dim() % 2 != 0) {
        throw InputError(std::string(what) + ": ambient dimension must be even");
    }
    return l.ambient_dim() / 2;
}

/// ρ(L) (first) or ρ*(L) (second) as a subspace of ℝⁿ.
inline Subspace project_factor(const Subspace& l, Factor which, const Tolerance& tol) {
    const auto n = static_cast<Eigen::Index>(half_dim(l, "project_factor"));
    const Matrix block = which == Factor::first ? Matrix(l.basis().topRows(n)) : Matrix(l.basis().bottomRows(n));
    return Subspace::span(block, tol, 1.0);
}

/// V ⊕ {0} (first) or {0} ⊕ V* (second) inside ℝ²ⁿ.
inline Subspace factor_embedding(std::size_t n, Factor which) {
    const auto nn = static_cast<Eigen::Index>(n);
    Matrix b = Matrix::Zero(2 * nn, nn);
    if (which == Factor::first) {
        b.topRows(nn).setIdentity();
    } else {
        b.bottomRows(nn).setIdentity();
    }
    return Subspace::from_orthonormal(b, Tolerance{});
}

/// L ∩ V (first) or L ∩ V* (second), returned as a subspace of the factor ℝⁿ.
inline Subspace factor_intersection(const Subspace& l, Factor which, const Tolerance& tol) {
    const std::size_t n = half_dim(l, "factor_intersection");
    const Subspace cut = intersect(l, factor_embedding(n, which), tol);
    return project_factor(cut, which, tol);
}

}  // namespace ldkit
