// ldkit: verify LD structure specs, simulate catalog systems, audit trajectories.
//
// Exit codes: 0 success, 2 parse/usage failure, 3 not an LD structure,
// 4 initial state outside chi_c, 5 integration step failure, 1 anything else.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ldkit/ldkit.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParse = 2,
    kNotLD = 3,
    kInconsistent = 4,
    kStepFailure = 5,
};

struct Options {
    std::string input;
    double dt = 1e-3;
    double t_end = 10.0;
    double tol_rank = 1e-9;
    double tol_residual = 1e-8;
    double tol_projection = 1e-10;
    double tol_monotone = 1e-10;
    double tol_rate = -1.0;
    std::string format = "csv";
    std::string output;
};

double default_rank_tolerance() {
    if (const char* env = std::getenv("LDKIT_TOL_RANK")) {
        try {
            const double v = std::stod(env);
            if (v > 0.0) return v;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid LDKIT_TOL_RANK='" << env << "'\n";
    }
    return 1e-9;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }
const char* true_false(bool b) { return b ? "true" : "false"; }

std::string format_vector(const ldkit::Vector& v) {
    std::ostringstream os;
    os << std::setprecision(12) << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ']';
    return os.str();
}

ldkit::Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ldkit::ParseError("cannot open '" + path + "'");
    return ldkit::detail::parse_json_text(in);
}

void print_classification(const ldkit::LinearLD& l, const ldkit::Tolerance& tol) {
    const ldkit::Classification& c = l.flags();
    std::cout << "n: " << l.n() << '\n'
              << "dim(L): " << l.space().dim() << '\n'
              << "forward: " << true_false(c.forward) << '\n'
              << "backward: " << true_false(c.backward) << '\n'
              << "dirac: " << true_false(c.dirac) << '\n'
              << "symmetric_dirac: " << true_false(c.symmetric_dirac) << '\n'
              << "separable: " << true_false(c.separable) << '\n'
              << std::setprecision(3) << std::scientific << "forward_residual: " << c.forward_residual << '\n'
              << "backward_residual: " << c.backward_residual << '\n'
              << "plus_pairing_residual: " << c.plus_residual << '\n'
              << "minus_pairing_residual: " << c.minus_residual << '\n'
              << "separable_residual: " << c.separable_residual << '\n';
    const auto orientation = c.forward ? ldkit::Orientation::forward : ldkit::Orientation::backward;
    const ldkit::SplitPairing sp = ldkit::split_pairing(l, orientation, tol);
    std::cout << "signature: (" << sp.positive << "," << sp.negative << ")\n"
              << "signature_orientation: " << ldkit::to_string(orientation) << '\n'
              << "isotropy_residual: " << sp.isotropy_residual << '\n';
    std::cout << std::defaultfloat;
}

int cmd_verify(const Options& opt) {
    const ldkit::Tolerance tol = ldkit::Tolerance::checked(opt.tol_rank, opt.tol_residual);
    const ldkit::Json j = load_json(opt.input);
    if (j.is_object() && j.contains("name")) {
        // System spec: classify L(x0) pointwise.
        const ldkit::CatalogEntry e = ldkit::make_catalog_system(ldkit::parse_system_spec(j));
        const ldkit::Vector& x0 = e.initial_state;
        std::cout << "system: " << e.name << '\n' << "point: " << format_vector(x0) << '\n';
        const ldkit::LinearLD l = ldkit::pointwise(e.system.ld, x0, tol);
        print_classification(l, tol);
        const ldkit::ConsistencyReport r = ldkit::consistency(e.system, x0, opt.tol_projection, tol);
        std::cout << "constraint_rank: " << e.system.k() << '\n'
                  << "in_chi_c: " << true_false(r.in_chi_c) << '\n'
                  << "consistency_residual: " << std::scientific << std::setprecision(3) << r.residual << '\n';
        return kOk;
    }
    const ldkit::StructureSpec spec = ldkit::parse_structure_spec(j);
    const ldkit::LinearLD l = ldkit::build_structure(spec, tol);
    std::cout << "kind: " << (spec.kind == ldkit::StructureSpec::Kind::ab ? "ab" : "pair") << '\n';
    print_classification(l, tol);
    return kOk;
}

void write_trajectory(const ldkit::Trajectory& traj, const Options& opt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ldkit::InputError("cannot write '" + path + "'");
    if (opt.format == "json") {
        ldkit::write_trajectory_json(out, traj);
    } else {
        ldkit::write_trajectory_csv(out, traj);
    }
}

int cmd_simulate(const Options& opt) {
    const ldkit::Tolerance tol = ldkit::Tolerance::checked(opt.tol_rank, opt.tol_residual);
    if (!(opt.dt > 0.0) || !(opt.t_end > 0.0)) {
        std::cerr << "error: --dt and --t-end must be positive\n";
        return kParse;
    }
    const ldkit::CatalogEntry e = ldkit::make_catalog_system(ldkit::parse_system_spec(load_json(opt.input)));
    const std::string path = opt.output.empty() ? "trajectory." + opt.format : opt.output;
    ldkit::IntegratorConfig cfg{opt.dt, opt.t_end, opt.tol_projection, 20, tol};

    ldkit::Trajectory traj;
    try {
        traj = ldkit::simulate(e.system, e.initial_state, cfg);
    } catch (const ldkit::ConsistencyError& err) {
        std::cerr << "error: initial state " << format_vector(e.initial_state)
                  << " is not in the consistency set chi_c (|G^T dH| = " << err.residual() << ")\n";
        return kInconsistent;
    } catch (const ldkit::StepFailure& err) {
        write_trajectory(err.partial(), opt, path);
        std::cerr << "error: step failure, last valid time t = " << err.last_time() << ": " << err.what() << '\n'
                  << "partial trajectory written to " << path << '\n';
        return kStepFailure;
    }
    write_trajectory(traj, opt, path);

    const ldkit::EnergyAudit audit = ldkit::energy_audit(traj);
    double rate_min = std::numeric_limits<double>::infinity();
    double rate_max = -rate_min;
    for (double r : traj.energy_rates) {
        rate_min = std::min(rate_min, r);
        rate_max = std::max(rate_max, r);
    }
    std::cout << "system: " << e.name << '\n'
              << "steps: " << traj.size() - 1 << '\n'
              << "t_end: " << traj.times.back() << '\n'
              << "final_state: " << format_vector(traj.states.back()) << '\n'
              << std::scientific << std::setprecision(6)
              << "max_constraint_residual: " << audit.max_constraint_residual << '\n'
              << "H(0): " << traj.energies.front() << '\n'
              << "H(t_end): " << traj.energies.back() << '\n'
              << "bracket_HH_min: " << rate_min << '\n'
              << "bracket_HH_max: " << rate_max << '\n'
              << std::defaultfloat << "H_non_increasing: " << yes_no(audit.monotone_non_increasing) << '\n'
              << "output: " << path << " (" << opt.format << ")\n";
    return kOk;
}

int cmd_audit(const Options& opt) {
    std::ifstream in(opt.input);
    if (!in) throw ldkit::ParseError("cannot open '" + opt.input + "'");
    const ldkit::Trajectory traj = ldkit::read_trajectory(in);
    ldkit::AuditOptions ao;
    ao.monotone_tol = opt.tol_monotone;
    ao.rate_tol = opt.tol_rate;
    const ldkit::EnergyAudit a = ldkit::energy_audit(traj, ao);
    std::cout << "points: " << a.points << '\n'
              << "state_dim: " << traj.n << '\n'
              << "multipliers: " << traj.k << '\n'
              << std::scientific << std::setprecision(6) << "dt_max: " << a.dt_max << '\n'
              << "max_deviation: " << a.max_deviation << '\n'
              << "max |dH/dt|: " << a.max_abs_fd_rate << '\n'
              << "max |[H,H]|: " << a.max_abs_rate << '\n'
              << "rate_tol: " << a.rate_tol << '\n'
              << "max_increase: " << a.max_increase << '\n'
              << "max_constraint_residual: " << a.max_constraint_residual << '\n'
              << std::defaultfloat << "max |dH/dt| <= tol: " << yes_no(a.rates_within_tol) << '\n'
              << "monotone non-increasing: " << yes_no(a.monotone_non_increasing) << '\n'
              << "[H,H] <= 0 at every step: " << yes_no(a.rates_nonpositive) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ldkit: Leibniz-Dirac structures and dissipative implicit Hamiltonian systems"};
    app.require_subcommand(1);
    Options opt;
    opt.tol_rank = default_rank_tolerance();

    auto add_tolerances = [&](CLI::App* sub) {
        sub->add_option("--tol-rank", opt.tol_rank, "Relative singular-value cutoff (env LDKIT_TOL_RANK)");
        sub->add_option("--tol-residual", opt.tol_residual, "Membership / equation residual tolerance");
        sub->add_option("--tol-projection", opt.tol_projection, "Constraint residual bound for chi_c and projection");
    };

    CLI::App* verify = app.add_subcommand("verify", "Classify a structure spec (or L(x0) of a system spec)");
    verify->add_option("spec", opt.input, "Structure-spec or system-spec JSON file")->required();
    add_tolerances(verify);

    CLI::App* simulate = app.add_subcommand("simulate", "Integrate a catalog system");
    simulate->add_option("system", opt.input, "System-spec JSON file")->required();
    simulate->add_option("--dt", opt.dt, "Time step");
    simulate->add_option("--t-end", opt.t_end, "Horizon");
    simulate->add_option("--format", opt.format, "Trajectory format")->check(CLI::IsMember({"csv", "json"}));
    simulate->add_option("--output", opt.output, "Trajectory file (default trajectory.<format>)");
    add_tolerances(simulate);

    CLI::App* audit = app.add_subcommand("audit", "Energy and constraint audit of a trajectory file");
    audit->add_option("trajectory", opt.input, "Trajectory CSV or JSON file")->required();
    audit->add_option("--tol-monotone", opt.tol_monotone, "Allowed per-step increase of H");
    audit->add_option("--tol-rate", opt.tol_rate, "Bound on |dH/dt| (default 2*dt^2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kParse;
    }

    try {
        if (verify->parsed()) return cmd_verify(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        return cmd_audit(opt);
    } catch (const ldkit::DegenerateRepresentation& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cout << "verdict: degenerate representation\n";
        return kNotLD;
    } catch (const ldkit::NotLDStructure& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cout << "verdict: not an LD structure\n"
                  << std::scientific << std::setprecision(3) << "forward_residual: " << e.forward_residual() << '\n'
                  << "backward_residual: " << e.backward_residual() << '\n';
        return kNotLD;
    } catch (const ldkit::ConsistencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInconsistent;
    } catch (const ldkit::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
