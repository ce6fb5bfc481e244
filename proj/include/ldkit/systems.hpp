#pragma once

// Ready-made DIHSystem constructors (gradient, metriplectic, damped
// mechanical) and a name-keyed catalog, plus an independently coded
// extrapolated-midpoint integrator used to cross-check simulate().

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ldkit/dynamics.hpp"
#include "ldkit/errors.hpp"
#include "ldkit/field_ld.hpp"
#include "ldkit/subspace.hpp"

namespace ldkit {

/// Canonical Poisson matrix [[0, I], [−I, 0]] on ℝ²ᵐ.
inline Matrix canonical_poisson(std::size_t m) {
    const auto mm = static_cast<Eigen::Index>(m);
    Matrix b = Matrix::Zero(2 * mm, 2 * mm);
    b.topRightCorner(mm, mm).setIdentity();
    b.bottomLeftCorner(mm, mm) = -Matrix::Identity(mm, mm);
    return b;
}

/// Deterministic probe points in [−1, 1]ⁿ for shape checks.
inline std::vector<Vector> default_probes(std::size_t n, std::size_t count = 5) {
    std::vector<Vector> out;
    out.push_back(Vector::Zero(static_cast<Eigen::Index>(n)));
    for (std::size_t c = 1; c < count; ++c) {
        Vector x(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            x(static_cast<Eigen::Index>(i)) = std::sin(1.7 * static_cast<double>(c) + 0.9 * static_cast<double>(i) +
                                                       0.3 * static_cast<double>(c * i));
        }
        out.push_back(x);
    }
    return out;
}

namespace detail {

inline void require_symmetric_psd(const Matrix& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InputError(std::string(what) + ": matrix is not symmetric at a probe point");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw InputError(std::string(what) + ": matrix is not positive semidefinite at a probe point");
    }
}

inline void require_skew(const Matrix& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InputError(std::string(what) + ": matrix is not skew-symmetric at a probe point");
    }
}

}  // namespace detail

/// ẋ = −g♯(x) ∂S/∂x + G(x) λ.
inline DIHSystem gradient_system(const TensorField& g_sharp, const ScalarField& s, const ConstraintField& f_ann,
                                 const std::vector<Vector>& probes = {}) {
    const std::size_t n = g_sharp.dim();
    for (const Vector& x : probes.empty() ? default_probes(n) : probes) {
        detail::require_symmetric_psd(g_sharp(x), "gradient_system");
    }
    TensorField pi(n, [g_sharp](const Vector& x) { return Matrix(-g_sharp(x)); });
    return DIHSystem::make(LDField::make(std::move(pi), f_ann), s);
}

/// Π = P − g♯ with P skew and g♯ symmetric positive semidefinite.
inline DIHSystem metriplectic_system(const TensorField& p, const TensorField& g_sharp, const ScalarField& h,
                                     const ConstraintField& f_ann, const std::vector<Vector>& probes = {}) {
    const std::size_t n = p.dim();
    if (g_sharp.dim() != n) throw InputError("metriplectic_system: P and g disagree on dimension");
    for (const Vector& x : probes.empty() ? default_probes(n) : probes) {
        detail::require_skew(p(x), "metriplectic_system (P)");
        detail::require_symmetric_psd(g_sharp(x), "metriplectic_system (g)");
    }
    TensorField pi(n, [p, g_sharp](const Vector& x) { return Matrix(p(x) - g_sharp(x)); });
    return DIHSystem::make(LDField::make(std::move(pi), f_ann), h);
}

/// Mechanical system with damping on T*Q, state (q, p) ∈ ℝ²ᵐ:
/// Π = [[0, I], [−I, −R]], G = [0; A], constraints Aᵀ q̇ = 0.
/// r maps a state to the m×m damping matrix, a to the m×k constraint matrix.
inline DIHSystem damped_mechanical(std::size_t m, MatrixFunction r, std::size_t k, MatrixFunction a,
                                   const ScalarField& h, MatrixFunction jacobian = {},
                                   const std::vector<Vector>& probes = {}) {
    const std::size_t n = 2 * m;
    const auto mm = static_cast<Eigen::Index>(m);
    const auto kk = static_cast<Eigen::Index>(k);
    if (h.dim() != n) throw InputError("damped_mechanical: Hamiltonian must live on a 2m-dimensional state");
    for (const Vector& x : probes.empty() ? default_probes(n) : probes) {
        const Matrix rx = r(x);
        if (rx.rows() != mm || rx.cols() != mm) throw InputError("damped_mechanical: R must be m x m");
        detail::require_symmetric_psd(rx, "damped_mechanical (R)");
        if (k > 0) {
            const Matrix ax = a(x);
            if (ax.rows() != mm || ax.cols() != kk) throw InputError("damped_mechanical: A must be m x k");
        }
    }
    const Matrix b = canonical_poisson(m);
    TensorField pi(n, [b, r, mm](const Vector& x) {
        Matrix out = b;
        out.bottomRightCorner(mm, mm) = -r(x);
        return out;
    });
    ConstraintField g = k == 0 ? ConstraintField::none(n) : ConstraintField(n, k, [a, mm, kk](const Vector& x) {
        Matrix out = Matrix::Zero(2 * mm, kk);
        out.bottomRows(mm) = a(x);
        return out;
    });
    return DIHSystem::make(LDField::make(std::move(pi), std::move(g)), h, std::move(jacobian));
}

/// H = |p|²/2 on ℝ²ᵐ with its gradient.
inline ScalarField kinetic_energy(std::size_t m) {
    const auto mm = static_cast<Eigen::Index>(m);
    return ScalarField(
        2 * m, [mm](const Vector& x) { return 0.5 * x.tail(mm).squaredNorm(); },
        [mm](const Vector& x) {
            Vector g = Vector::Zero(x.size());
            g.tail(mm) = x.tail(mm);
            return g;
        });
}

/// Particle in ℝ³ with the nonholonomic constraint ż = y ẋ and friction
/// −μᵢ pᵢ; state (x, y, z, p_x, p_y, p_z). mu maps a state to (μ₁, μ₂, μ₃).
inline DIHSystem damped_particle(std::function<Eigen::Vector3d(const Vector&)> mu) {
    auto r = [mu](const Vector& x) { return Matrix(mu(x).asDiagonal()); };
    auto a = [](const Vector& x) {
        Matrix col(3, 1);
        col << x(1), 0.0, -1.0;
        return col;
    };
    return damped_mechanical(3, r, 1, a, kinetic_energy(3));
}

inline DIHSystem damped_particle(const Eigen::Vector3d& mu) {
    return damped_particle([mu](const Vector&) { return mu; });
}

/// Catalog request: a registered name, parameter overrides, optional x0.
struct SystemSpec {
    std::string name;
    std::map<std::string, double> parameters;
    std::optional<Vector> initial_state;
};

struct CatalogEntry {
    std::string name;
    DIHSystem system;
    std::map<std::string, double> parameters;  ///< defaults merged with overrides
    Vector initial_state;
    Vector domain_lo;  ///< box used for regularity sampling
    Vector domain_hi;
};

inline std::vector<std::string> catalog_names() {
    return {"harmonic_oscillator", "gradient_flow", "damped_oscillator", "damped_particle"};
}

namespace detail {

inline std::map<std::string, double> merge_parameters(const std::string& name,
                                                      std::map<std::string, double> defaults,
                                                      const std::map<std::string, double>& overrides) {
    for (const auto& [key, value] : overrides) {
        auto it = defaults.find(key);
        if (it == defaults.end()) {
            throw InputError("system '" + name + "' has no parameter '" + key + "'");
        }
        if (!std::isfinite(value)) throw InputError("parameter '" + key + "' is not finite");
        it->second = value;
    }
    return defaults;
}

inline Vector box(std::size_t n, double v) { return Vector::Constant(static_cast<Eigen::Index>(n), v); }

}  // namespace detail

inline CatalogEntry make_catalog_system(const SystemSpec& spec) {
    CatalogEntry e;
    e.name = spec.name;
    if (spec.name == "harmonic_oscillator") {
        e.parameters = detail::merge_parameters(spec.name, {{"omega", 1.0}}, spec.parameters);
        const double w2 = e.parameters["omega"] * e.parameters["omega"];
        ScalarField h(
            2, [w2](const Vector& x) { return 0.5 * (w2 * x(0) * x(0) + x(1) * x(1)); },
            [w2](const Vector& x) { return Vector((Vector(2) << w2 * x(0), x(1)).finished()); });
        e.system = DIHSystem::make(LDField::make(TensorField::constant(canonical_poisson(1)), ConstraintField::none(2)),
                                   h);
        e.initial_state = (Vector(2) << 1.0, 0.0).finished();
        e.domain_lo = detail::box(2, -2.0);
        e.domain_hi = detail::box(2, 2.0);
    } else if (spec.name == "gradient_flow") {
        e.parameters = detail::merge_parameters(spec.name, {{"g1", 1.0}, {"g2", 2.0}}, spec.parameters);
        const Matrix g = Eigen::Vector2d(e.parameters["g1"], e.parameters["g2"]).asDiagonal();
        ScalarField s(
            2, [](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; });
        e.system = gradient_system(TensorField::constant(g), s, ConstraintField::none(2));
        e.initial_state = (Vector(2) << 1.0, 1.0).finished();
        e.domain_lo = detail::box(2, -2.0);
        e.domain_hi = detail::box(2, 2.0);
    } else if (spec.name == "damped_oscillator") {
        e.parameters = detail::merge_parameters(spec.name, {{"mu", 0.5}}, spec.parameters);
        const Matrix g = Eigen::Vector2d(0.0, e.parameters["mu"]).asDiagonal();
        ScalarField h(
            2, [](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; });
        e.system = metriplectic_system(TensorField::constant(canonical_poisson(1)), TensorField::constant(g), h,
                                       ConstraintField::none(2));
        e.initial_state = (Vector(2) << 1.0, 0.0).finished();
        e.domain_lo = detail::box(2, -2.0);
        e.domain_hi = detail::box(2, 2.0);
    } else if (spec.name == "damped_particle") {
        e.parameters =
            detail::merge_parameters(spec.name, {{"mu1", 1.0}, {"mu2", 1.0}, {"mu3", 1.0}}, spec.parameters);
        e.system = damped_particle(Eigen::Vector3d(e.parameters["mu1"], e.parameters["mu2"], e.parameters["mu3"]));
        e.initial_state = (Vector(6) << 0.0, 0.0, 0.0, 1.0, 0.0, 0.0).finished();
        e.domain_lo = detail::box(6, -2.0);
        e.domain_hi = detail::box(6, 2.0);
    } else {
        throw InputError("unknown system '" + spec.name + "'");
    }
    if (spec.initial_state) {
        if (static_cast<std::size_t>(spec.initial_state->size()) != e.system.n) {
            throw InputError("initial_state for '" + spec.name + "' must have " + std::to_string(e.system.n) +
                             " entries");
        }
        e.initial_state = *spec.initial_state;
    }
    return e;
}

namespace oracle {

/// Gragg's modified midpoint rule over one macro step with N (even) substeps.
template <class Flow>
Vector modified_midpoint(const Flow& f, const Vector& y, const Vector& f0, double big_h, int substeps) {
    const double h = big_h / substeps;
    Vector prev = y;
    Vector cur = y + h * f0;
    for (int m = 1; m < substeps; ++m) {
        Vector next = prev + 2.0 * h * f(cur);
        prev = std::move(cur);
        cur = std::move(next);
    }
    return 0.5 * (cur + prev + h * f(cur));
}

/// Richardson combination of the N = 2 and N = 4 midpoint sequences; the
/// midpoint error expands in even powers, so the result is fourth order.
template <class Flow>
Vector extrapolated_midpoint_step(const Flow& f, const Vector& y, double big_h) {
    const Vector f0 = f(y);
    const Vector coarse = modified_midpoint(f, y, f0, big_h, 2);
    const Vector fine = modified_midpoint(f, y, f0, big_h, 4);
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace oracle

/// Reference trajectory from an independently coded integrator: extrapolated
/// modified midpoint with half the step size, Newton projection after every
/// half step. Samples are recorded on the same dt grid as simulate().
inline Trajectory oracle_simulate(const DIHSystem& sys, const Vector& x0, double dt, double t_end,
                                  double projection_tol = 1e-10, std::size_t max_projection_iters = 20,
                                  const Tolerance& tol = {}) {
    IntegratorConfig cfg{dt, t_end, projection_tol, max_projection_iters, tol};
    cfg.validate();
    detail::require_consistent(sys, x0, projection_tol, tol);

    auto f = [&](const Vector& y) { return detail::flow(sys, y, projection_tol, tol); };
    auto project = [&](Vector y, double t) {
        for (std::size_t it = 0;; ++it) {
            const Vector c = constraint_value(sys, y, tol);
            if (c.norm() <= projection_tol) return y;
            if (it == max_projection_iters) {
                throw Error("oracle projection failed at t = " + std::to_string(t));
            }
            const Matrix g = sys.ld.g_field(y, tol);
            const Matrix reduced = constraint_jacobian(sys, y, tol) * g;
            y -= g * reduced.colPivHouseholderQr().solve(c);
        }
    };

    Trajectory traj;
    traj.n = sys.n;
    traj.k = sys.k();
    auto sample = [&](double t, const Vector& y) {
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.multipliers.push_back(detail::solve_multipliers(sys, y, projection_tol, tol).lambda);
        traj.residuals.push_back(constraint_value(sys, y, tol).norm());
        traj.energies.push_back(sys.h_field(y));
        traj.energy_rates.push_back(energy_rate(sys, y));
    };
    sample(0.0, x0);

    const std::size_t steps = detail::step_count(t_end, dt);
    Vector y = x0;
    double t = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        const double t_next = s == steps ? t_end : static_cast<double>(s) * dt;
        const double half = 0.5 * (t_next - t);
        y = project(oracle::extrapolated_midpoint_step(f, y, half), t + half);
        y = project(oracle::extrapolated_midpoint_step(f, y, half), t_next);
        t = t_next;
        sample(t, y);
    }
    return traj;
}

/// Largest |a.states[i] − b.states[i]|∞ over samples with matching times.
inline double max_state_discrepancy(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) throw InputError("max_state_discrepancy: trajectories have different lengths");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i]))) {
            throw InputError("max_state_discrepancy: sample times differ");
        }
        worst = std::max(worst, (a.states[i] - b.states[i]).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace ldkit
