#pragma once

// Linear Leibniz–Dirac structures L ⊂ V ⊕ V* on V = ℝⁿ.
//
// Coordinates on V ⊕ V* are (v, η) stacked into ℝ²ⁿ. A map on a carrier
// subspace with orthonormal basis C (n×k) is a k×k matrix M acting on carrier
// coordinates: for v = C a the restricted covector has coordinates Cᵀη = M a
// (forward), and dually Cᵀv = M a for η = C a (backward).

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "ldkit/errors.hpp"
#include "ldkit/subspace.hpp"

namespace ldkit {

enum class Orientation { forward, backward };

inline const char* to_string(Orientation o) { return o == Orientation::forward ? "forward" : "backward"; }

struct Classification {
    bool forward = false;
    bool backward = false;
    bool dirac = false;
    bool symmetric_dirac = false;
    bool separable = false;

    /// Distance between ρ(L)° and L ∩ V*.
    double forward_residual = 1.0;
    /// Distance between ρ*(L)° and L ∩ V.
    double backward_residual = 1.0;
    /// max |⟨·,·⟩₊| on pairs of orthonormal basis vectors of L.
    double plus_residual = 0.0;
    /// max |⟨·,·⟩₋| on pairs of orthonormal basis vectors of L.
    double minus_residual = 0.0;
    /// max |⟨η₁|v₂⟩| on pairs of orthonormal basis vectors of L.
    double separable_residual = 0.0;

    bool is_ld() const noexcept { return forward || backward; }
    bool has(Orientation o) const noexcept { return o == Orientation::forward ? forward : backward; }
};

namespace detail {

inline Classification classify_subspace(const Subspace& space, const Tolerance& tol) {
    Classification c;
    const std::size_t n = half_dim(space, "classify");
    const auto nn = static_cast<Eigen::Index>(n);
    const Matrix& b = space.basis();
    const Matrix v = b.topRows(nn);
    const Matrix eta = b.bottomRows(nn);

    // ⟨η_i | v_j⟩ for basis columns i, j.
    const Matrix cross = eta.transpose() * v;
    c.plus_residual = space.is_zero() ? 0.0 : (0.5 * (cross + cross.transpose())).cwiseAbs().maxCoeff();
    c.minus_residual = space.is_zero() ? 0.0 : (0.5 * (cross - cross.transpose())).cwiseAbs().maxCoeff();
    c.separable_residual = space.is_zero() ? 0.0 : cross.cwiseAbs().maxCoeff();

    if (space.dim() != n) {
        return c;
    }

    const Subspace rho = project_factor(space, Factor::first, tol);
    const Subspace rho_star = project_factor(space, Factor::second, tol);
    const Subspace cap_v = factor_intersection(space, Factor::first, tol);
    const Subspace cap_v_star = factor_intersection(space, Factor::second, tol);

    c.forward_residual = distance(annihilator(rho), cap_v_star);
    c.backward_residual = distance(annihilator(rho_star), cap_v);
    c.forward = c.forward_residual <= tol.residual_eps;
    c.backward = c.backward_residual <= tol.residual_eps;
    c.dirac = c.plus_residual <= tol.residual_eps;
    c.symmetric_dirac = c.minus_residual <= tol.residual_eps;
    c.separable = c.separable_residual <= tol.residual_eps;
    return c;
}

}  // namespace detail

/// An n-dimensional subspace of V ⊕ V* satisfying at least one
/// characteristic equation, with its classification cached.
class LinearLD {
public:
    static LinearLD from_subspace(const Subspace& space, const Tolerance& tol = {}) {
        const std::size_t n = half_dim(space, "LinearLD");
        if (space.dim() != n) {
            throw NotLDStructure("subspace has dimension " + std::to_string(space.dim()) + ", expected " +
                                     std::to_string(n),
                                 1.0, 1.0);
        }
        Classification c = detail::classify_subspace(space, tol);
        if (!c.is_ld()) {
            throw NotLDStructure("not an LD structure: neither characteristic equation holds", c.forward_residual,
                                 c.backward_residual);
        }
        return LinearLD(n, space, c, tol);
    }

    std::size_t n() const noexcept { return n_; }
    const Subspace& space() const noexcept { return space_; }
    const Classification& flags() const noexcept { return flags_; }
    const Tolerance& tolerance() const noexcept { return tol_; }

    bool forward() const noexcept { return flags_.forward; }
    bool backward() const noexcept { return flags_.backward; }
    bool dirac() const noexcept { return flags_.dirac; }
    bool symmetric_dirac() const noexcept { return flags_.symmetric_dirac; }
    bool separable() const noexcept { return flags_.separable; }
    bool has(Orientation o) const noexcept { return flags_.has(o); }

    /// Vector part (top n rows) and covector part (bottom n rows) of the basis.
    Matrix vectors() const { return space_.basis().topRows(static_cast<Eigen::Index>(n_)); }
    Matrix covectors() const { return space_.basis().bottomRows(static_cast<Eigen::Index>(n_)); }

private:
    LinearLD(std::size_t n, Subspace space, Classification flags, Tolerance tol)
        : n_(n), space_(std::move(space)), flags_(flags), tol_(tol) {}

    std::size_t n_;
    Subspace space_;
    Classification flags_;
    Tolerance tol_;
};

/// Recomputes the flags of l, possibly under a different tolerance.
inline Classification classify(const LinearLD& l, const Tolerance& tol) {
    return detail::classify_subspace(l.space(), tol);
}

struct ABRep {
    Matrix a;  ///< ℝⁿ → V
    Matrix b;  ///< ℝⁿ → V*
};

struct PairRep {
    Orientation orientation = Orientation::forward;
    Subspace carrier;  ///< E ⊆ V or F ⊆ V*
    Matrix map;        ///< Ω or Π in carrier coordinates, k×k

    /// Builds a representation from spanning columns C (n×k, independent) and
    /// a map given in the coordinates of those columns. The map is carried
    /// over to orthonormal carrier coordinates by congruence with the R factor
    /// of C = QR.
    static PairRep from_spanning(Orientation orientation, const Matrix& columns, const Matrix& map,
                                 const Tolerance& tol = {}) {
        require_finite(columns, "PairRep::from_spanning");
        require_finite(map, "PairRep::from_spanning");
        const Eigen::Index k = columns.cols();
        if (map.rows() != k || map.cols() != k) {
            throw InputError("PairRep::from_spanning: map must be " + std::to_string(k) + "x" + std::to_string(k));
        }
        if (k == 0) {
            return PairRep{orientation, Subspace::zero(static_cast<std::size_t>(columns.rows())), Matrix(0, 0)};
        }
        if (Subspace::span(columns, tol).dim() != static_cast<std::size_t>(k)) {
            throw InputError("PairRep::from_spanning: carrier columns are linearly dependent");
        }
        Eigen::HouseholderQR<Matrix> qr(columns);
        const Matrix q = qr.householderQ() * Matrix::Identity(columns.rows(), k);
        const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        const Matrix r_inv = r.inverse();
        const Matrix m = r_inv.transpose() * map * r_inv;
        return PairRep{orientation, Subspace::from_orthonormal(q, tol), m};
    }
};

/// Zero extension of the carrier map to all of V (resp. V*): C M Cᵀ.
inline Matrix ambient_map(const PairRep& rep) {
    const Matrix& c = rep.carrier.basis();
    return c * rep.map * c.transpose();
}

inline LinearLD from_ab(const ABRep& rep, const Tolerance& tol = {}) {
    require_finite(rep.a, "from_ab");
    require_finite(rep.b, "from_ab");
    const Eigen::Index n = rep.a.rows();
    if (rep.a.cols() != n || rep.b.rows() != n || rep.b.cols() != n || n == 0) {
        throw InputError("from_ab: A and B must both be n x n");
    }
    Matrix stacked(2 * n, n);
    stacked << rep.a, rep.b;
    const Subspace space = Subspace::span(stacked, tol);
    if (space.dim() != static_cast<std::size_t>(n)) {
        throw DegenerateRepresentation("degenerate representation: ker A ∩ ker B has dimension " +
                                       std::to_string(n - static_cast<Eigen::Index>(space.dim())));
    }
    return LinearLD::from_subspace(space, tol);
}

inline LinearLD from_pair(const PairRep& rep, const Tolerance& tol = {}) {
    const Eigen::Index n = static_cast<Eigen::Index>(rep.carrier.ambient_dim());
    const Eigen::Index k = static_cast<Eigen::Index>(rep.carrier.dim());
    if (n == 0) throw InputError("from_pair: carrier lives in a zero-dimensional space");
    if (rep.map.rows() != k || rep.map.cols() != k) {
        throw InputError("from_pair: map must be " + std::to_string(k) + "x" + std::to_string(k) +
                         " to match the carrier dimension");
    }
    require_finite(rep.map, "from_pair");
    const Matrix& c = rep.carrier.basis();
    const Matrix comp = annihilator(rep.carrier).basis();
    Matrix basis = Matrix::Zero(2 * n, n);
    if (rep.orientation == Orientation::forward) {
        // {(v, Ω(v) + μ) : v ∈ E, μ ∈ E°}
        basis.topLeftCorner(n, k) = c;
        basis.bottomLeftCorner(n, k) = c * rep.map;
        basis.bottomRightCorner(n, n - k) = comp;
    } else {
        // {(Π(η) + w, η) : η ∈ F, w ∈ F°}
        basis.topLeftCorner(n, k) = c * rep.map;
        basis.bottomLeftCorner(n, k) = c;
        basis.topRightCorner(n, n - k) = comp;
    }
    return LinearLD::from_subspace(Subspace::span(basis, tol), tol);
}

inline PairRep to_pair(const LinearLD& l, Orientation orientation, const Tolerance& tol = {}) {
    if (!classify(l, tol).has(orientation)) {
        throw NotRepresentable(std::string("structure is not ") + to_string(orientation) +
                               "; no pair representation in that orientation");
    }
    const bool fwd = orientation == Orientation::forward;
    const Subspace carrier = project_factor(l.space(), fwd ? Factor::first : Factor::second, tol);
    const Matrix& c = carrier.basis();
    const Eigen::Index k = c.cols();
    if (k == 0) return PairRep{orientation, carrier, Matrix(0, 0)};
    const Matrix coords = c.transpose() * (fwd ? l.vectors() : l.covectors());   // k×n, rank k
    const Matrix images = c.transpose() * (fwd ? l.covectors() : l.vectors());   // k×n
    // M · coords = images
    const Matrix mt = coords.transpose().completeOrthogonalDecomposition().solve(images.transpose());
    return PairRep{orientation, carrier, mt.transpose()};
}

struct MapParts {
    Matrix sym;
    Matrix skew;
};

inline MapParts decompose_map(const Matrix& omega) {
    if (omega.rows() != omega.cols()) {
        throw InputError("decompose_map: matrix must be square");
    }
    require_finite(omega, "decompose_map");
    const Matrix t = omega.transpose();
    return MapParts{0.5 * (omega + t), 0.5 * (omega - t)};
}

struct SplitPairing {
    /// Matrix of ≪,≫ in (v, η) coordinates, 2n×2n.
    Matrix gram;
    std::size_t positive = 0;
    std::size_t negative = 0;
    /// max |basisᵀ · gram · basis|.
    double isotropy_residual = 0.0;
};

/// The split-sign inner product making l maximally isotropic:
/// ⟨η₁|v₂⟩ + ⟨η₂|v₁⟩ − 2Ψ(v₁,v₂) (forward) or − 2Φ(η₁,η₂) (backward), where
/// Ψ/Φ symmetrize the zero extension of the carrier map.
inline SplitPairing split_pairing(const LinearLD& l, Orientation orientation, const Tolerance& tol = {}) {
    const PairRep rep = to_pair(l, orientation, tol);
    const auto n = static_cast<Eigen::Index>(l.n());
    const Matrix ext = ambient_map(rep);
    const Matrix form = 0.5 * (ext + ext.transpose());
    SplitPairing out;
    out.gram = Matrix::Zero(2 * n, 2 * n);
    out.gram.topRightCorner(n, n).setIdentity();
    out.gram.bottomLeftCorner(n, n).setIdentity();
    if (orientation == Orientation::forward) {
        out.gram.topLeftCorner(n, n) = -2.0 * form;
    } else {
        out.gram.bottomRightCorner(n, n) = -2.0 * form;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(out.gram, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double cutoff = tol.rank_eps * ev.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff) ++out.positive;
        if (ev(i) < -cutoff) ++out.negative;
    }
    const Matrix& b = l.space().basis();
    out.isotropy_residual = (b.transpose() * out.gram * b).cwiseAbs().maxCoeff();
    return out;
}

/// τ(ψ, L) = {(v, η + ψ(v))} (forward) or ν(φ, L) = {(v + φ(η), η)} (backward)
/// for a Dirac structure L and a symmetric form.
inline LinearLD deform(const LinearLD& l, const Matrix& form, Orientation direction, const Tolerance& tol = {}) {
    const auto n = static_cast<Eigen::Index>(l.n());
    if (form.rows() != n || form.cols() != n) {
        throw InputError("deform: form must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    require_finite(form, "deform");
    const double asym = (form - form.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.residual_eps * std::max(1.0, form.cwiseAbs().maxCoeff())) {
        throw InputError("deform: form is not symmetric");
    }
    if (!classify(l, tol).dirac) {
        throw PreconditionError("deform: structure is not a Dirac structure");
    }
    Matrix v = l.vectors();
    Matrix eta = l.covectors();
    if (direction == Orientation::forward) {
        eta += form * v;
    } else {
        v += form * eta;
    }
    Matrix basis(2 * n, n);
    basis << v, eta;
    return LinearLD::from_subspace(Subspace::span(basis, tol), tol);
}

}  // namespace ldkit
