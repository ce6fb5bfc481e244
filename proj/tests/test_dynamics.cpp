#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ldkit/dynamics.hpp"
#include "ldkit/systems.hpp"
#include "support/oracles.hpp"
#include "support/random_structures.hpp"

using namespace ldkit;
namespace lt = ldkit::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

DIHSystem catalog(const std::string& name, std::map<std::string, double> params = {}) {
    return make_catalog_system(SystemSpec{name, std::move(params), std::nullopt}).system;
}

ScalarField half_norm(std::size_t n) {
    return ScalarField(
        n, [](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; });
}

/// Random consistent particle state: px, pz tied by pz = y px.
Vector particle_state(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    Vector s(6);
    for (int i = 0; i < 6; ++i) s(i) = u(rng);
    s(5) = s(1) * s(3);
    return s;
}

}  // namespace

TEST(Multipliers, NoConstraints) {
    const Multipliers m = multipliers(catalog("harmonic_oscillator"), vec({1, 0}));
    EXPECT_EQ(m.lambda.size(), 0);
    EXPECT_EQ(m.ls_residual, 0.0);
}

TEST(Multipliers, ParticleAtRest) {
    const Multipliers m = multipliers(damped_particle(Eigen::Vector3d(1, 1, 1)), vec({0, 0, 0, 1, 0, 0}));
    ASSERT_EQ(m.lambda.size(), 1);
    EXPECT_NEAR(m.lambda(0), 0.0, 1e-9);
}

TEST(Multipliers, ParticleAnisotropicDamping) {
    const Eigen::Vector3d mu(2, 1, 0);
    const Vector x = vec({0, 1, 0, 1, 0, 1});
    EXPECT_NEAR(lt::particle_lambda(x, mu), 1.0, 1e-15);
    EXPECT_NEAR(multipliers(damped_particle(mu), x).lambda(0), 1.0, 1e-8);
}

TEST(Multipliers, MatchSymbolicOracleOnRandomStates) {
    std::mt19937 rng(40);
    std::uniform_real_distribution<double> pos(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector3d mu(pos(rng), pos(rng), pos(rng));
        const DIHSystem sys = damped_particle(mu);
        const Vector x = particle_state(rng);
        EXPECT_NEAR(multipliers(sys, x).lambda(0), lt::particle_lambda(x, mu), 1e-7);
        EXPECT_LE((rhs(sys, x) - lt::particle_rhs(x, mu)).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(Multipliers, InconsistentState) {
    const DIHSystem sys = damped_particle(Eigen::Vector3d(1, 1, 1));
    try {
        multipliers(sys, vec({0, 0, 0, 1, 0, 1}));
        FAIL() << "expected ConsistencyError";
    } catch (const ConsistencyError& e) {
        EXPECT_NEAR(e.residual(), 1.0, 1e-12);
        EXPECT_NE(std::string(e.what()).find("chi_c"), std::string::npos);
    }
}

TEST(Multipliers, DegenerateReducedSystem) {
    // G = (1, 0), H = x1 x2, Π = I: c = x2, J = (0, 1), J G = 0, J Π dH = x1 = 1.
    const ScalarField h(
        2, [](const Vector& x) { return x(0) * x(1); }, [](const Vector& x) { return vec({x(1), x(0)}); });
    const Matrix pi = Matrix::Identity(2, 2);
    Matrix g(2, 1);
    g << 1, 0;
    const DIHSystem sys = DIHSystem::make(LDField::make(TensorField::constant(pi), ConstraintField::constant(g)), h);
    EXPECT_THROW(multipliers(sys, vec({1.0, 0.0})), DegenerateMultiplierError);
}

TEST(Multipliers, SingularButConsistentUsesMinimumNorm) {
    // Two identical-effect constraints would be rank deficient; instead use
    // J G = 0 with J Π dH = 0 so the minimum-norm solution is λ = 0.
    const ScalarField h(2, [](const Vector& x) { return x(0) * x(1); },
                        [](const Vector& x) { return vec({x(1), x(0)}); });
    Matrix g(2, 1);
    g << 1, 0;
    const DIHSystem sys =
        DIHSystem::make(LDField::make(TensorField::constant(Matrix::Zero(2, 2)), ConstraintField::constant(g)), h);
    const Multipliers m = multipliers(sys, vec({1.0, 0.0}));
    EXPECT_NEAR(m.lambda(0), 0.0, 1e-14);
    EXPECT_LE(m.ls_residual, 1e-14);
}

TEST(Rhs, Examples) {
    EXPECT_LE((rhs(catalog("harmonic_oscillator"), vec({0.3, 0.4})) - vec({0.4, -0.3})).norm(), 1e-14);
    const DIHSystem grad = gradient_system(TensorField::constant(Matrix::Identity(2, 2)), half_norm(2),
                                           ConstraintField::none(2));
    EXPECT_LE((rhs(grad, vec({0.3, 0.4})) - vec({-0.3, -0.4})).norm(), 1e-14);
    const Vector v = rhs(damped_particle(Eigen::Vector3d(1, 1, 1)), vec({0, 0, 0, 1, 0, 0}));
    EXPECT_LE((v - vec({1, 0, 0, -1, 0, 0})).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rhs, ConstraintIsPreservedToFirstOrder) {
    std::mt19937 rng(41);
    const Eigen::Vector3d mu(1.0, 0.5, 2.0);
    const DIHSystem sys = damped_particle(mu);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = particle_state(rng);
        const Vector v = rhs(sys, x);
        EXPECT_LE(std::abs((constraint_jacobian(sys, x) * v)(0)), 1e-8);
    }
}

TEST(KernelForm, NoConstraints) {
    const DIHSystem sys = catalog("harmonic_oscillator");
    const KernelForm kf = kernel_form(sys, vec({1, 2}));
    EXPECT_LE((kf.k_matrix - Matrix::Identity(2, 2)).norm(), 1e-14);
    EXPECT_LE((kf.lhs * rhs(sys, vec({1, 2})) - kf.rhs).norm(), 1e-12);
}

TEST(KernelForm, LastCoordinateConstraint) {
    Matrix g = Matrix::Zero(3, 1);
    g(2, 0) = 1;
    const DIHSystem sys =
        DIHSystem::make(LDField::make(TensorField::constant(Matrix::Zero(3, 3)), ConstraintField::constant(g)),
                        ScalarField(3, [](const Vector& x) { return x(0); }));
    const KernelForm kf = kernel_form(sys, vec({0, 0, 0}));
    Matrix expected = Matrix::Zero(2, 3);
    expected(0, 0) = expected(1, 1) = 1;
    EXPECT_LE((kf.k_matrix - expected).norm(), 1e-14);
}

TEST(KernelForm, ParticleReducedSystemHolds) {
    std::mt19937 rng(42);
    const DIHSystem sys = damped_particle(Eigen::Vector3d(1, 1, 1));
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = particle_state(rng);
        const KernelForm kf = kernel_form(sys, x);
        EXPECT_EQ(kf.k_matrix.rows(), 5);
        EXPECT_EQ(kf.k_matrix.cols(), 6);
        const Vector g = vec({0, 0, 0, x(1), 0, -1});
        EXPECT_LE((kf.k_matrix * g).norm(), 1e-12);
        EXPECT_LE((kf.lhs * rhs(sys, x) - kf.rhs).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Simulate, HarmonicOscillatorConservesEnergy) {
    const DIHSystem sys = catalog("harmonic_oscillator");
    const Trajectory traj = simulate(sys, vec({1, 0}), IntegratorConfig{1e-3, 10.0});
    ASSERT_TRUE(traj.consistent_lengths());
    EXPECT_EQ(traj.size(), 10001u);
    EXPECT_DOUBLE_EQ(traj.times.back(), 10.0);
    for (double e : traj.energies) EXPECT_NEAR(e, 0.5, 1e-8);
    EXPECT_LE((traj.states.back() - lt::harmonic_exact(vec({1, 0}), 1.0, 10.0)).norm(), 1e-10);
}

TEST(Simulate, GradientFlowExact) {
    const DIHSystem sys = gradient_system(TensorField::constant(Matrix::Identity(2, 2)), half_norm(2),
                                          ConstraintField::none(2));
    const Trajectory traj = simulate(sys, vec({1, 1}), IntegratorConfig{1e-3, 1.0});
    EXPECT_LE((traj.states.back() - std::exp(-1.0) * vec({1, 1})).norm(), 1e-6);
}

TEST(Simulate, ShortLastStepHitsHorizon) {
    const Trajectory traj = simulate(catalog("harmonic_oscillator"), vec({1, 0}), IntegratorConfig{0.3, 1.0});
    ASSERT_EQ(traj.size(), 5u);
    EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
    EXPECT_NEAR(traj.times[3], 0.9, 1e-15);
}

TEST(Simulate, ZeroHorizon) {
    const Trajectory traj = simulate(catalog("harmonic_oscillator"), vec({1, 0}), IntegratorConfig{0.1, 0.0});
    EXPECT_EQ(traj.size(), 1u);
}

TEST(Simulate, ConfigValidation) {
    const DIHSystem sys = catalog("harmonic_oscillator");
    EXPECT_THROW(simulate(sys, vec({1, 0}), IntegratorConfig{0.0, 1.0}), InputError);
    EXPECT_THROW(simulate(sys, vec({1, 0}), IntegratorConfig{0.1, -1.0}), InputError);
    IntegratorConfig bad{0.1, 1.0};
    bad.projection_tol = 0.0;
    EXPECT_THROW(simulate(sys, vec({1, 0}), bad), InputError);
}

TEST(Simulate, RejectsInconsistentStart) {
    EXPECT_THROW(simulate(damped_particle(Eigen::Vector3d(1, 1, 1)), vec({0, 0, 0, 1, 0, 1}), IntegratorConfig{}),
                 ConsistencyError);
}

TEST(Simulate, StepFailureCarriesPartialTrajectory) {
    // ẋ = x² blows up near t = 1; the tensor field eventually turns non-finite.
    const ScalarField h(1, [](const Vector& x) { return x(0); }, [](const Vector&) { return vec({1.0}); });
    const TensorField pi(1, [](const Vector& x) { return Matrix::Constant(1, 1, x(0) * x(0)); });
    const DIHSystem sys = DIHSystem::make(LDField::make(pi, ConstraintField::none(1)), h);
    try {
        simulate(sys, vec({1.0}), IntegratorConfig{0.1, 5.0});
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_GT(e.partial().size(), 1u);
        EXPECT_TRUE(e.partial().consistent_lengths());
        EXPECT_DOUBLE_EQ(e.last_time(), e.partial().times.back());
        EXPECT_LT(e.last_time(), 5.0);
    }
}

TEST(Simulate, ProjectionFailureReported) {
    // The particle constraint is affine along G, so one Newton step is exact.
    // A quartic term in pz makes it curved: c = y px − pz − pz³.
    const ScalarField h(
        6, [](const Vector& x) { return 0.5 * x.tail(3).squaredNorm() + 0.25 * std::pow(x(5), 4); },
        [](const Vector& x) {
            Vector g = Vector::Zero(6);
            g.tail(3) = x.tail(3);
            g(5) += std::pow(x(5), 3);
            return g;
        });
    const DIHSystem sys = DIHSystem::make(damped_particle(Eigen::Vector3d(1, 1, 1)).ld, h);
    IntegratorConfig cfg{0.2, 2.0};
    cfg.max_projection_iters = 1;
    cfg.projection_tol = 1e-15;
    const Vector x0 = vec({0, 0.5, 0, 1.25, 0.3, 0.5});
    ASSERT_TRUE(consistency(sys, x0, 1e-15).in_chi_c);
    EXPECT_THROW(simulate(sys, x0, cfg), StepFailure);
}

TEST(Simulate, ParticleStaysOnConstraint) {
    const Eigen::Vector3d mu(1, 1, 1);
    const DIHSystem sys = damped_particle(mu);
    const Trajectory traj = simulate(sys, vec({0, 0, 0, 1, 0, 0}), IntegratorConfig{1e-2, 5.0});
    for (std::size_t i = 0; i < traj.size(); ++i) {
        EXPECT_LE(std::abs(lt::particle_constraint(traj.states[i])), 1e-10);
        EXPECT_LE(traj.residuals[i], 1e-10);
        EXPECT_NEAR(traj.energy_rates[i], lt::particle_energy_rate(traj.states[i], mu), 1e-12);
        if (i > 0) {
            EXPECT_LE(traj.energies[i] - traj.energies[i - 1], 1e-10);
        }
    }
}

TEST(Projection, ReturnsToManifold) {
    const DIHSystem sys = damped_particle(Eigen::Vector3d(1, 1, 1));
    const ProjectionResult p = project_to_constraints(sys, vec({0, 0.7, 0, 1, 0, 0.1}), 1e-12, 20);
    EXPECT_TRUE(p.converged);
    EXPECT_LE(std::abs(lt::particle_constraint(p.state)), 1e-12);
    // Motion only along G = (0,0,0,y,0,−1).
    EXPECT_EQ(p.state.head(3), vec({0, 0.7, 0}));
    EXPECT_EQ(p.state(4), 0.0);
}

TEST(EnergyAudit, DiracSystem) {
    const Trajectory traj = simulate(catalog("harmonic_oscillator"), vec({1, 0}), IntegratorConfig{1e-2, 5.0});
    const EnergyAudit a = energy_audit(catalog("harmonic_oscillator"), traj);
    EXPECT_TRUE(a.rates_within_tol);
    EXPECT_LE(a.max_abs_rate, 1e-15);
    EXPECT_LE(a.bracket_discrepancy, 1e-15);
    EXPECT_NEAR(a.rate_tol, 2e-4, 1e-12);
}

TEST(EnergyAudit, GradientFlowDissipates) {
    const DIHSystem sys = catalog("gradient_flow");
    const Trajectory traj = simulate(sys, vec({1, 1}), IntegratorConfig{1e-2, 3.0});
    const EnergyAudit a = energy_audit(sys, traj);
    EXPECT_TRUE(a.monotone_non_increasing);
    EXPECT_TRUE(a.rates_nonpositive);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        // [S,S] = −∇S·g∇S
        const Vector x = traj.states[i];
        EXPECT_NEAR(traj.energy_rates[i], -(x(0) * x(0) + 2 * x(1) * x(1)), 1e-12);
    }
    // One-sided differences at the ends: about dt²·|S'''|/3 with |S'''(0)| = 33.
    EXPECT_LE(a.max_deviation, 1.5e-3);
}

TEST(EnergyAudit, DeviationShrinksQuadratically) {
    const DIHSystem sys = damped_particle(Eigen::Vector3d(1, 1, 1));
    const Vector x0 = vec({0, 0.5, 0, 1, 0.2, 0.5});
    const double coarse = energy_audit(simulate(sys, x0, IntegratorConfig{0.02, 2.0})).max_deviation;
    const double fine = energy_audit(simulate(sys, x0, IntegratorConfig{0.01, 2.0})).max_deviation;
    EXPECT_GT(coarse / fine, 3.0);
}

TEST(EnergyAudit, EmptyTrajectory) { EXPECT_THROW(energy_audit(Trajectory{}), InputError); }

TEST(FiniteDifferenceRates, ExactForQuadratics) {
    const std::vector<double> t{0.0, 0.1, 0.3, 0.35, 0.8};
    std::vector<double> h;
    for (double s : t) h.push_back(3 * s * s - s + 2);
    const std::vector<double> d = finite_difference_rates(t, h);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(d[i], 6 * t[i] - 1, 1e-12);
}
