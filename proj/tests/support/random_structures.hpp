#pragma once

// Seeded generators for random linear LD structures and their raw
// ingredients. Everything here builds bases directly from the defining
// formulas so tests can compare against the library's constructions.

#include <cstddef>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "ldkit/linear_ld.hpp"

namespace ldkit::testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
    return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::mt19937& rng) {
    const Eigen::MatrixXd g = gaussian(n, n, rng);
    return 0.5 * (g + g.transpose());
}

inline Eigen::MatrixXd random_skew(Eigen::Index n, std::mt19937& rng) {
    const Eigen::MatrixXd g = gaussian(n, n, rng);
    return 0.5 * (g - g.transpose());
}

/// Random symmetric positive semidefinite matrix of the given rank.
inline Eigen::MatrixXd random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937& rng) {
    const Eigen::MatrixXd f = gaussian(n, rank, rng);
    return f * f.transpose();
}

enum class MapKind { skew, symmetric, general, zero };

inline const char* to_string(MapKind k) {
    switch (k) {
        case MapKind::skew: return "skew";
        case MapKind::symmetric: return "symmetric";
        case MapKind::general: return "general";
        case MapKind::zero: return "zero";
    }
    return "?";
}

inline Eigen::MatrixXd random_map(Eigen::Index k, MapKind kind, std::mt19937& rng) {
    switch (kind) {
        case MapKind::skew: return random_skew(k, rng);
        case MapKind::symmetric: return random_symmetric(k, rng);
        case MapKind::general: return gaussian(k, k, rng);
        case MapKind::zero: return Eigen::MatrixXd::Zero(k, k);
    }
    return {};
}

inline int uniform_int(int lo, int hi, std::mt19937& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Orientation random_orientation(std::mt19937& rng) {
    return uniform_int(0, 1, rng) == 0 ? Orientation::forward : Orientation::backward;
}

inline MapKind random_kind(std::mt19937& rng) { return static_cast<MapKind>(uniform_int(0, 3, rng)); }

/// Orthonormal basis of a random k-dimensional subspace of ℝⁿ.
inline Eigen::MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index k, std::mt19937& rng) {
    if (k == 0) return Eigen::MatrixXd(n, 0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, k, rng));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

/// Orthonormal basis of the orthogonal complement of the columns of q.
inline Eigen::MatrixXd complement(const Eigen::MatrixXd& q) {
    const Eigen::Index n = q.rows();
    const Eigen::Index k = q.cols();
    if (k == 0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return full.rightCols(n - k);
}

/// Spanning columns of L built straight from the orientation's formula:
/// forward  L = {(v, Ω̂ v + μ) : v ∈ E, μ ∈ E°},
/// backward L = {(Π̂ η + w, η) : η ∈ F, w ∈ F°},
/// where Ω̂ = C M Cᵀ for an orthonormal carrier basis C (n×k), map M (k×k).
inline Eigen::MatrixXd pair_columns(Orientation o, const Eigen::MatrixXd& c, const Eigen::MatrixXd& m) {
    const Eigen::Index n = c.rows();
    const Eigen::Index k = c.cols();
    const Eigen::MatrixXd ext = c * m * c.transpose();
    const Eigen::MatrixXd ann = complement(c);
    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(2 * n, n);
    Eigen::MatrixXd carrier_part(n, k);
    carrier_part = ext * c;
    if (o == Orientation::forward) {
        cols.block(0, 0, n, k) = c;
        cols.block(n, 0, n, k) = carrier_part;
        cols.block(n, k, n, n - k) = ann;
    } else {
        cols.block(0, 0, n, k) = carrier_part;
        cols.block(n, 0, n, k) = c;
        cols.block(0, k, n, n - k) = ann;
    }
    return cols;
}

struct RandomInstance {
    std::string family;  ///< "pair", "graph", "separable", "ab"
    Orientation orientation = Orientation::forward;
    MapKind kind = MapKind::general;
    PairRep pair;           ///< generating pair representation
    ABRep ab;               ///< (A, B) with L = Im [A; B]
    Eigen::MatrixXd columns;  ///< spanning columns of L built independently
};

/// A random pair representation with carrier dimension k in [0, n], given
/// through non-orthonormal spanning columns.
inline RandomInstance random_pair_instance(int n, std::mt19937& rng) {
    RandomInstance inst;
    inst.family = "pair";
    inst.orientation = random_orientation(rng);
    inst.kind = random_kind(rng);
    const int k = uniform_int(0, n, rng);
    const Eigen::MatrixXd spanning = gaussian(n, k, rng) + 0.1 * Eigen::MatrixXd::Identity(n, k);
    const Eigen::MatrixXd m = random_map(k, inst.kind, rng);
    inst.pair = PairRep::from_spanning(inst.orientation, spanning, m);
    inst.columns = pair_columns(inst.orientation, inst.pair.carrier.basis(), inst.pair.map);
    inst.ab = ABRep{inst.columns.topRows(n), inst.columns.bottomRows(n)};
    return inst;
}

/// Graph of a map: forward {(v, Ω v)}, backward {(Π η, η)}.
inline RandomInstance random_graph_instance(int n, std::mt19937& rng) {
    RandomInstance inst;
    inst.family = "graph";
    inst.orientation = random_orientation(rng);
    inst.kind = random_kind(rng);
    const Eigen::MatrixXd m = random_map(n, inst.kind, rng);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    inst.pair = PairRep{inst.orientation, Subspace::full(static_cast<std::size_t>(n)), m};
    inst.ab = inst.orientation == Orientation::forward ? ABRep{id, m} : ABRep{m, id};
    inst.columns.resize(2 * n, n);
    inst.columns << inst.ab.a, inst.ab.b;
    return inst;
}

/// K ⊕ K° for a random K of dimension in [0, n].
inline RandomInstance random_separable_instance(int n, std::mt19937& rng) {
    RandomInstance inst;
    inst.family = "separable";
    inst.orientation = random_orientation(rng);
    inst.kind = MapKind::zero;
    const int k = uniform_int(0, n, rng);
    const Eigen::MatrixXd kb = random_orthonormal(n, k, rng);
    const Eigen::MatrixXd ann = complement(kb);
    inst.columns = Eigen::MatrixXd::Zero(2 * n, n);
    inst.columns.block(0, 0, n, k) = kb;
    inst.columns.block(n, k, n, n - k) = ann;
    inst.ab = ABRep{inst.columns.topRows(n), inst.columns.bottomRows(n)};
    // As a forward pair: E = K, Ω = 0. As a backward pair: F = K°, Π = 0.
    const Eigen::MatrixXd carrier = inst.orientation == Orientation::forward ? kb : ann;
    const Eigen::Index kc = carrier.cols();
    inst.pair = PairRep{inst.orientation,
                        kc == 0 ? Subspace::zero(static_cast<std::size_t>(n))
                                : Subspace::from_orthonormal(carrier, Tolerance{}),
                        Eigen::MatrixXd::Zero(kc, kc)};
    return inst;
}

/// (A, B) obtained by mixing the spanning columns of a random pair instance
/// with an invertible matrix, so neither A nor B need be invertible.
inline RandomInstance random_ab_instance(int n, std::mt19937& rng) {
    RandomInstance inst = random_pair_instance(n, rng);
    inst.family = "ab";
    Eigen::MatrixXd mix = gaussian(n, n, rng) + 2.0 * Eigen::MatrixXd::Identity(n, n);
    while (std::abs(mix.determinant()) < 1e-2) mix = gaussian(n, n, rng) + 2.0 * Eigen::MatrixXd::Identity(n, n);
    inst.columns = inst.columns * mix;
    inst.ab = ABRep{inst.columns.topRows(n), inst.columns.bottomRows(n)};
    return inst;
}

/// Cycles through the four families.
inline RandomInstance random_instance(int index, int n, std::mt19937& rng) {
    switch (index % 4) {
        case 0: return random_pair_instance(n, rng);
        case 1: return random_graph_instance(n, rng);
        case 2: return random_separable_instance(n, rng);
        default: return random_ab_instance(n, rng);
    }
}

}  // namespace ldkit::testing
