#pragma once

// Dissipative implicit Hamiltonian systems (ẋ, dH(x)) ∈ L(x), locally
//     ẋ = Π(x) ∂H/∂x + G(x) λ,   0 = Gᵀ(x) ∂H/∂x.
// Multipliers come from differentiating the algebraic constraint once along
// the flow; integration is classical RK4 followed by a Newton projection
// back onto {Gᵀ ∂H/∂x = 0} along the columns of G.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ldkit/errors.hpp"
#include "ldkit/field_ld.hpp"
#include "ldkit/subspace.hpp"

namespace ldkit {

struct DIHSystem {
    std::size_t n = 0;
    LDField ld;
    ScalarField h_field;
    /// Optional analytic ∂/∂x (Gᵀ ∂H/∂x), k×n. Finite differences otherwise.
    MatrixFunction constraint_jacobian;

    static DIHSystem make(LDField ld, ScalarField h, MatrixFunction jacobian = {}) {
        const std::size_t n = ld.dim();
        if (h.dim() != n || ld.g_field.dim() != n) {
            throw InputError("DIHSystem: field dimensions disagree");
        }
        return DIHSystem{n, std::move(ld), std::move(h), std::move(jacobian)};
    }

    std::size_t k() const noexcept { return ld.g_field.k(); }
};

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    double projection_tol = 1e-10;
    std::size_t max_projection_iters = 20;
    Tolerance tol{};

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("IntegratorConfig: dt must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InputError("IntegratorConfig: t_end must be >= 0");
        if (!(projection_tol > 0.0)) throw InputError("IntegratorConfig: projection_tol must be positive");
        if (max_projection_iters == 0) throw InputError("IntegratorConfig: max_projection_iters must be positive");
    }
};

struct Trajectory {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> multipliers;
    std::vector<double> residuals;     ///< |Gᵀ ∂H/∂x|
    std::vector<double> energies;      ///< H
    std::vector<double> energy_rates;  ///< [H,H]

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }

    bool consistent_lengths() const noexcept {
        const std::size_t m = times.size();
        return states.size() == m && multipliers.size() == m && residuals.size() == m && energies.size() == m &&
               energy_rates.size() == m;
    }
};

struct ConsistencyReport {
    Vector point;
    bool in_chi_c = false;
    double residual = 0.0;
};

struct Multipliers {
    Vector lambda;
    double ls_residual = 0.0;
};

/// Integration stopped early; carries everything accepted so far.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, double last_time, Trajectory partial)
        : Error(what), last_time_(last_time), partial_(std::move(partial)) {}

    double last_time() const noexcept { return last_time_; }
    const Trajectory& partial() const noexcept { return partial_; }
    const Vector& last_state() const { return partial_.states.back(); }

private:
    double last_time_;
    Trajectory partial_;
};

/// Gᵀ(x) ∂H/∂x.
inline Vector constraint_value(const DIHSystem& sys, const Vector& x, const Tolerance& tol = {}) {
    const Matrix g = sys.ld.g_field(x, tol);
    if (g.cols() == 0) return Vector(0);
    return g.transpose() * sys.h_field.gradient(x);
}

inline ConsistencyReport consistency(const DIHSystem& sys, const Vector& x, double projection_tol,
                                     const Tolerance& tol = {}) {
    if (static_cast<std::size_t>(x.size()) != sys.n) {
        throw InputError("state has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(sys.n));
    }
    ConsistencyReport r;
    r.point = x;
    r.residual = constraint_value(sys, x, tol).norm();
    r.in_chi_c = r.residual <= projection_tol;
    return r;
}

/// J(x) = ∂/∂x (Gᵀ ∂H/∂x), k×n.
inline Matrix constraint_jacobian(const DIHSystem& sys, const Vector& x, const Tolerance& tol = {}) {
    const auto k = static_cast<Eigen::Index>(sys.k());
    const auto n = static_cast<Eigen::Index>(sys.n);
    if (k == 0) return Matrix(0, n);
    if (sys.constraint_jacobian) {
        Matrix j = sys.constraint_jacobian(x);
        if (j.rows() != k || j.cols() != n) throw InputError("constraint jacobian has the wrong shape");
        return j;
    }
    const double step = fd_step(x);
    Matrix j(k, n);
    Vector probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        probe(i) = x(i) + step;
        const Vector up = constraint_value(sys, probe, tol);
        probe(i) = x(i) - step;
        const Vector down = constraint_value(sys, probe, tol);
        probe(i) = x(i);
        j.col(i) = (up - down) / (2.0 * step);
    }
    return j;
}

namespace detail {

/// Multipliers without the χ_c gate; used for stage evaluations.
inline Multipliers solve_multipliers(const DIHSystem& sys, const Vector& x, double projection_tol,
                                     const Tolerance& tol) {
    Multipliers m;
    if (sys.k() == 0) {
        m.lambda = Vector(0);
        return m;
    }
    const Matrix g = sys.ld.g_field(x, tol);
    const Matrix pi = sys.ld.pi(x);
    const Vector dh = sys.h_field.gradient(x);
    const Matrix j = constraint_jacobian(sys, x, tol);
    const Matrix jg = j * g;
    const Vector target = -(j * (pi * dh));
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jg);
    cod.setThreshold(tol.rank_eps);
    m.lambda = cod.solve(target);
    m.ls_residual = (jg * m.lambda - target).norm();
    if (m.ls_residual > projection_tol) {
        throw DegenerateMultiplierError("multiplier system J·G is singular and inconsistent (least-squares residual " +
                                            std::to_string(m.ls_residual) + ")",
                                        m.ls_residual);
    }
    return m;
}

inline Vector velocity(const DIHSystem& sys, const Vector& x, const Multipliers& m, const Tolerance& tol) {
    Vector v = sys.ld.pi(x) * sys.h_field.gradient(x);
    if (sys.k() > 0) v += sys.ld.g_field(x, tol) * m.lambda;
    return v;
}

inline Vector flow(const DIHSystem& sys, const Vector& x, double projection_tol, const Tolerance& tol) {
    return velocity(sys, x, solve_multipliers(sys, x, projection_tol, tol), tol);
}

inline void require_consistent(const DIHSystem& sys, const Vector& x, double projection_tol, const Tolerance& tol) {
    const ConsistencyReport r = consistency(sys, x, projection_tol, tol);
    if (!r.in_chi_c) {
        throw ConsistencyError("state is not in the consistency set chi_c (|G^T dH| = " +
                                   std::to_string(r.residual) + ")",
                               r.residual);
    }
}

}  // namespace detail

inline Multipliers multipliers(const DIHSystem& sys, const Vector& x, double projection_tol = 1e-10,
                               const Tolerance& tol = {}) {
    detail::require_consistent(sys, x, projection_tol, tol);
    return detail::solve_multipliers(sys, x, projection_tol, tol);
}

inline Vector rhs(const DIHSystem& sys, const Vector& x, double projection_tol = 1e-10, const Tolerance& tol = {}) {
    return detail::velocity(sys, x, multipliers(sys, x, projection_tol, tol), tol);
}

/// [H,H](x) = ⟨dH | Π⁺ dH⟩.
inline double energy_rate(const DIHSystem& sys, const Vector& x) {
    const Vector dh = sys.h_field.gradient(x);
    const Matrix pi = sys.ld.pi(x);
    return dh.dot(0.5 * (pi + pi.transpose()) * dh);
}

/// Multiplier-free form [K; 0] ẋ = [KΠ; Gᵀ] ∂H/∂x with K G = 0.
struct KernelForm {
    Matrix k_matrix;     ///< (n−k)×n, full rank, K G = 0
    Matrix lhs;          ///< [K; 0], n×n
    Matrix rhs_operator; ///< [KΠ; Gᵀ], n×n
    Vector rhs;          ///< rhs_operator · ∂H/∂x
};

inline KernelForm kernel_form(const DIHSystem& sys, const Vector& x, const Tolerance& tol = {}) {
    const auto n = static_cast<Eigen::Index>(sys.n);
    const Matrix g = sys.ld.g_field(x, tol);
    const Eigen::Index k = g.cols();
    KernelForm out;
    out.k_matrix = annihilator(Subspace::span(g, tol)).basis().transpose();
    if (out.k_matrix.rows() != n - k) {
        throw RegularityError("kernel_form: K(x) does not have rank n-k");
    }
    if (k > 0 && (out.k_matrix * g).cwiseAbs().maxCoeff() > tol.residual_eps * std::max(1.0, g.norm())) {
        throw RegularityError("kernel_form: K(x) G(x) != 0");
    }
    const Matrix pi = sys.ld.pi(x);
    out.lhs = Matrix::Zero(n, n);
    out.lhs.topRows(n - k) = out.k_matrix;
    out.rhs_operator = Matrix(n, n);
    out.rhs_operator.topRows(n - k) = out.k_matrix * pi;
    out.rhs_operator.bottomRows(k) = g.transpose();
    out.rhs = out.rhs_operator * sys.h_field.gradient(x);
    return out;
}

struct ProjectionResult {
    Vector state;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Newton iteration x ← x + G(x)δ with (J G) δ = −Gᵀ∂H/∂x.
inline ProjectionResult project_to_constraints(const DIHSystem& sys, Vector x, double projection_tol,
                                               std::size_t max_iters, const Tolerance& tol = {}) {
    ProjectionResult r;
    Vector c = constraint_value(sys, x, tol);
    r.residual = c.norm();
    while (r.residual > projection_tol && r.iterations < max_iters) {
        const Matrix g = sys.ld.g_field(x, tol);
        const Matrix jg = constraint_jacobian(sys, x, tol) * g;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(jg);
        cod.setThreshold(tol.rank_eps);
        x += g * cod.solve(Vector(-c));
        c = constraint_value(sys, x, tol);
        r.residual = c.norm();
        ++r.iterations;
    }
    r.state = std::move(x);
    r.converged = r.residual <= projection_tol;
    return r;
}

namespace detail {

inline void record(Trajectory& traj, const DIHSystem& sys, double t, const Vector& x, double projection_tol,
                   const Tolerance& tol) {
    // Evaluate everything before appending so a throw leaves traj intact.
    Vector lambda = solve_multipliers(sys, x, projection_tol, tol).lambda;
    const double residual = constraint_value(sys, x, tol).norm();
    const double energy = sys.h_field(x);
    const double rate = energy_rate(sys, x);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.multipliers.push_back(std::move(lambda));
    traj.residuals.push_back(residual);
    traj.energies.push_back(energy);
    traj.energy_rates.push_back(rate);
}

inline std::size_t step_count(double t_end, double dt) {
    if (t_end <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

}  // namespace detail

inline Trajectory simulate(const DIHSystem& sys, const Vector& x0, const IntegratorConfig& cfg) {
    cfg.validate();
    detail::require_consistent(sys, x0, cfg.projection_tol, cfg.tol);

    Trajectory traj;
    traj.n = sys.n;
    traj.k = sys.k();
    detail::record(traj, sys, 0.0, x0, cfg.projection_tol, cfg.tol);

    const std::size_t steps = detail::step_count(cfg.t_end, cfg.dt);
    Vector x = x0;
    double t = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        const double t_next = s == steps ? cfg.t_end : static_cast<double>(s) * cfg.dt;
        const double h = t_next - t;
        try {
            auto f = [&](const Vector& y) { return detail::flow(sys, y, cfg.projection_tol, cfg.tol); };
            const Vector k1 = f(x);
            const Vector k2 = f(x + 0.5 * h * k1);
            const Vector k3 = f(x + 0.5 * h * k2);
            const Vector k4 = f(x + h * k3);
            Vector trial = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!trial.allFinite()) {
                throw StepFailure("non-finite state at t = " + std::to_string(t_next), t, traj);
            }
            ProjectionResult p =
                project_to_constraints(sys, std::move(trial), cfg.projection_tol, cfg.max_projection_iters, cfg.tol);
            if (!p.converged) {
                throw StepFailure("projection did not converge at t = " + std::to_string(t_next) + " (residual " +
                                      std::to_string(p.residual) + ")",
                                  t, traj);
            }
            detail::record(traj, sys, t_next, p.state, cfg.projection_tol, cfg.tol);
            x = std::move(p.state);
            t = t_next;
        } catch (const StepFailure&) {
            throw;
        } catch (const Error& e) {
            throw StepFailure(std::string("step failed after t = ") + std::to_string(t) + ": " + e.what(), t, traj);
        }
    }
    return traj;
}

struct AuditOptions {
    /// Allowed per-step increase of H for the monotonicity verdict.
    double monotone_tol = 1e-10;
    /// Bound for max |dH/dt|; negative selects 2·dt_max².
    double rate_tol = -1.0;
};

struct EnergyAudit {
    std::size_t points = 0;
    double max_deviation = 0.0;       ///< max |finite-difference dH/dt − [H,H]|
    double max_abs_fd_rate = 0.0;     ///< max |finite-difference dH/dt|
    double max_abs_rate = 0.0;        ///< max |[H,H]|
    double max_increase = 0.0;        ///< max (H_{i+1} − H_i), 0 if none
    double max_constraint_residual = 0.0;
    double rate_tol = 0.0;
    double dt_max = 0.0;
    bool monotone_non_increasing = true;
    bool rates_nonpositive = true;    ///< [H,H] ≤ 0 at every sample (within monotone_tol)
    bool rates_within_tol = true;     ///< max |dH/dt| ≤ rate_tol
    /// Only set by the system-aware overload: max |stored [H,H] − recomputed|.
    double bracket_discrepancy = 0.0;
};

namespace detail {

/// Derivative at ts[at] of the quadratic through three samples.
inline double three_point_derivative(const double* ts, const double* hs, int at) {
    const double t0 = ts[0], t1 = ts[1], t2 = ts[2];
    const double x = ts[at];
    const double l0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
    const double l1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
    const double l2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
    return hs[0] * l0 + hs[1] * l1 + hs[2] * l2;
}

}  // namespace detail

/// Finite-difference dH/dt along the samples (second order, one-sided at the ends).
inline std::vector<double> finite_difference_rates(const std::vector<double>& t, const std::vector<double>& h) {
    const std::size_t m = t.size();
    std::vector<double> out(m, 0.0);
    if (m < 2) return out;
    if (m == 2) {
        out[0] = out[1] = (h[1] - h[0]) / (t[1] - t[0]);
        return out;
    }
    out[0] = detail::three_point_derivative(&t[0], &h[0], 0);
    for (std::size_t i = 1; i + 1 < m; ++i) out[i] = detail::three_point_derivative(&t[i - 1], &h[i - 1], 1);
    out[m - 1] = detail::three_point_derivative(&t[m - 3], &h[m - 3], 2);
    return out;
}

inline EnergyAudit energy_audit(const Trajectory& traj, const AuditOptions& opt = {}) {
    if (traj.empty()) throw InputError("energy_audit: empty trajectory");
    if (!traj.consistent_lengths()) throw InputError("energy_audit: trajectory columns have different lengths");
    EnergyAudit a;
    a.points = traj.size();
    for (std::size_t i = 1; i < traj.size(); ++i) {
        a.dt_max = std::max(a.dt_max, traj.times[i] - traj.times[i - 1]);
    }
    a.rate_tol = opt.rate_tol >= 0.0 ? opt.rate_tol : 2.0 * a.dt_max * a.dt_max;
    const std::vector<double> fd = finite_difference_rates(traj.times, traj.energies);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double rate = traj.energy_rates[i];
        if (traj.size() > 1) {
            a.max_deviation = std::max(a.max_deviation, std::abs(fd[i] - rate));
            a.max_abs_fd_rate = std::max(a.max_abs_fd_rate, std::abs(fd[i]));
        }
        a.max_abs_rate = std::max(a.max_abs_rate, std::abs(rate));
        a.max_constraint_residual = std::max(a.max_constraint_residual, traj.residuals[i]);
        if (rate > opt.monotone_tol) a.rates_nonpositive = false;
        if (i > 0) {
            const double inc = traj.energies[i] - traj.energies[i - 1];
            a.max_increase = std::max(a.max_increase, inc);
            if (inc > opt.monotone_tol) a.monotone_non_increasing = false;
        }
    }
    a.rates_within_tol = a.max_abs_fd_rate <= a.rate_tol;
    return a;
}

/// As above, additionally recomputing [H,H] from the system at every state.
inline EnergyAudit energy_audit(const DIHSystem& sys, const Trajectory& traj, const AuditOptions& opt = {}) {
    EnergyAudit a = energy_audit(traj, opt);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        a.bracket_discrepancy = std::max(a.bracket_discrepancy, std::abs(energy_rate(sys, traj.states[i]) -
                                                                         traj.energy_rates[i]));
    }
    return a;
}

}  // namespace ldkit
