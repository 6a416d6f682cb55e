// validation.hpp: oracle and invariant suite behind `tpdc validate`.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tpdc/bath.hpp"
#include "tpdc/commands.hpp"
#include "tpdc/fock_space.hpp"
#include "tpdc/oracles.hpp"
#include "tpdc/scenario.hpp"
#include "tpdc/spectrum.hpp"
#include "tpdc/steady_state.hpp"
#include "tpdc/sweep.hpp"

namespace tpdc {

struct CheckResult {
    std::string name;
    bool pass{false};
    std::string measured;
    std::string expected;
    double seconds{0.0};
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.pass ? 0 : 1;
        return n;
    }
};

struct ValidationOptions {
    bool include_slow{true};  // the long g = 0.3 GHz time-domain runs
    unsigned workers{3};      // for the parallel/serial check
};

// One headline operating point.
struct OperatingPoint {
    double g, omega_q, kappa_e, omega_in;
    std::size_t n_lev;
    double t_final;  // time-domain run length, ns
};

inline OperatingPoint headline_weak() {  // g = 0.3 GHz
    return {from_ghz(0.3), from_ghz(10.72), from_khz(255.0), from_ghz(8.9456), 5, 10000.0};
}
inline OperatingPoint headline_strong() {  // g = 1.0 GHz
    return {from_ghz(1.0), from_ghz(9.735), from_mhz(35.4), from_ghz(8.378), 8, 300.0};
}

struct OracleComparison {
    double perturbative_ratio1{0.0};
    double time_domain_ratio1{0.0};
    double rel_diff{0.0};
    double drift{0.0};
    double trace_error{0.0};
};

// Perturbative fluxes (order P) vs direct integration at F_in = factor x onset.
inline OracleComparison compare_with_time_domain(const OperatingPoint& op, double onset_factor, int order,
                                                 int steps_per_period = 40) {
    const Eigensystem es = eigendecompose(symmetric_system(op.omega_q, op.g));
    const BathSet bath = symmetric_bath(op.kappa_e);
    const double F = onset_factor * saturation_onset(op.kappa_e, 0.0);
    const DriveField d{std::sqrt(F), op.omega_in};
    SolverOptions so;
    so.n_lev = op.n_lev;
    so.order = order;
    const ResponseTensors rt = build_response_tensors(es, bath, d, so);
    const PerturbativeSolution sol = solve_stationary(rt, so);
    const FluxResult pf = fluxes(sol, rt, bath, d);
    TimeDomainOptions to;
    to.t_final = op.t_final;
    to.steps_per_period = steps_per_period;
    const TimeDomainResult td = time_domain_steady_state(rt, bath, d, to);
    OracleComparison c;
    c.perturbative_ratio1 = pf.ratio1();
    c.time_domain_ratio1 = td.flux.ratio1();
    c.rel_diff = std::abs(pf.ratio1() - td.flux.ratio1()) / std::abs(td.flux.ratio1());
    c.drift = td.drift;
    c.trace_error = td.max_trace_error;
    return c;
}

// Relative change of the |g01>/|g30> pair energies (from ground) at the
// (6,2) optimum when the truncation grows to (8,3).
inline double truncation_change(double g, double window_lo = from_ghz(9.3), double window_hi = from_ghz(11.2)) {
    const SystemParams small = symmetric_system(0.0, g, 6, 2);
    const auto opt = find_optimum_scanned(small, window_lo, window_hi, 39);
    const PairSample a = anticrossing_pair(small, opt.omega_q_opt);
    const PairSample b = anticrossing_pair(symmetric_system(0.0, g, 8, 3), opt.omega_q_opt);
    const double lo = std::abs((b.lower - b.ground) - (a.lower - a.ground)) / (a.lower - a.ground);
    const double hi = std::abs((b.upper - b.ground) - (a.upper - a.ground)) / (a.upper - a.ground);
    return std::max(lo, hi);
}

namespace detail {

inline std::string num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace detail

inline ValidationReport run_validation(const Scenario& s, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    auto run = [&](const std::string& name, const std::string& expected, const std::function<std::pair<bool, std::string>()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult c;
        c.name = name;
        c.expected = expected;
        try {
            auto [ok, measured] = f();
            c.pass = ok;
            c.measured = measured;
        } catch (const std::exception& e) {
            c.pass = false;
            c.measured = std::string("exception: ") + e.what();
        }
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.checks.push_back(c);
    };

    run("hamiltonian hermiticity and parity", "<= 1e-12 relative", [] {
        double worst = 0.0;
        for (double g : {0.0, 0.3, 1.0})
            for (double wq : {9.735, 10.72}) {
                const SystemParams p = symmetric_system(from_ghz(wq), from_ghz(g));
                const SystemModel m = build_model(p);
                const double scale = max_abs(m.hamiltonian);
                const OperatorMatrix P = parity_operator(p);
                worst = std::max({worst, hermiticity_defect(m.hamiltonian) / scale,
                                  max_abs(m.hamiltonian * P - P * m.hamiltonian) / scale,
                                  hermiticity_defect(m.ops.X), hermiticity_defect(m.ops.Y), hermiticity_defect(m.ops.Z)});
            }
        return std::pair{worst <= 1e-12, detail::num(worst)};
    });

    run("eigensystem residual, unitarity, parity selection", "<= 1e-10", [] {
        double worst = 0.0;
        for (double g : {0.1, 0.3, 1.0}) {
            const SystemModel m = build_model(symmetric_system(from_ghz(10.0), from_ghz(g)));
            const Eigensystem es = eigendecompose(m);
            worst = std::max({worst, eigen_residual(m.hamiltonian, es), unitarity_defect(es),
                              es.x.diagonal().cwiseAbs().maxCoeff(), es.y.diagonal().cwiseAbs().maxCoeff(),
                              es.z.diagonal().cwiseAbs().maxCoeff(), hermiticity_defect(es.x),
                              hermiticity_defect(es.y), hermiticity_defect(es.z)});
        }
        return std::pair{worst <= 1e-10, detail::num(worst)};
    });

    run("truncation convergence (6,2) -> (8,3), g in {0.1,0.3,0.5,1.0} GHz", "< 1e-6 relative", [] {
        std::string m;
        double worst = 0.0;
        for (double g : {0.1, 0.3, 0.5, 1.0}) {
            const double d = truncation_change(from_ghz(g));
            worst = std::max(worst, d);
            m += "g=" + detail::num(g) + ":" + detail::num(d) + " ";
        }
        return std::pair{worst < 1e-6, m};
    });

    run("two-oscillator impedance matching", "|T| = 1 at sqrt(k1 k2) = 2 g_eff; argmax kappa = 2 g_eff", [] {
        const double g = from_khz(222.5);
        const double t_match = std::abs(two_oscillator_transmission({1.0, g, 2.0 * g, 2.0 * g, 1.0}));
        const double t_closed = std::abs(two_oscillator_transmission_resonant(g, 2.0 * g, 2.0 * g));
        const GoldenResult best = golden_maximize(
            [&](double k) { return std::abs(two_oscillator_transmission({1.0, g, k, k, 1.0})); }, 0.1 * g, 10.0 * g, true,
            1e-10);
        const double rel = std::abs(best.x - 2.0 * g) / (2.0 * g);
        const bool ok = std::abs(t_match - 1.0) <= 1e-12 && std::abs(t_closed - 1.0) <= 1e-12 && rel <= 1e-4;
        return std::pair{ok, "|T|=" + detail::num(t_match) + " argmax/2g-1=" + detail::num(rel)};
    });

    run("impedance match at configured kappa_e", "|T| >= 0.5", [&] {
        const auto a = find_optimum_scanned(s.system, s.anticross.window_lo, s.anticross.window_hi,
                                            s.anticross.coarse_points);
        const double k = s.bath.rate(ChannelId::ext1);
        const double t = std::abs(two_oscillator_transmission_resonant(a.g_eff, k, k));
        return std::pair{t >= 0.5, "|T|=" + detail::num(t) + " at kappa_e=" + detail::num(to_khz(k)) + " kHz, g_eff=" +
                                       detail::num(to_khz(a.g_eff)) + " kHz"};
    });

    run("radiation kernel f vs f_app at t = 4 ns", "plateau <= 15%, tails <= 15%", [] {
        const BathChannel c{ChannelId::ext1, from_khz(255.0)};
        double plateau = 0.0, tail = 0.0;
        for (double e : {3.0, 9.0}) {
            const double eps = from_ghz(e);
            for (double r = 0.5; r <= 3.5 + 1e-9; r += 0.1) {
                const auto smp = radiation_kernel(c, eps, r, 4.0);
                plateau = std::max(plateau, std::abs(smp.f_exact - smp.f_app) / std::abs(smp.f_app));
            }
            for (double r : {-3.0, -1.0, -0.5, 4.5, 5.0, 7.0}) {
                const auto smp = radiation_kernel(c, eps, r, 4.0);
                tail = std::max(tail, std::abs(smp.f_exact) / (std::sqrt(two_pi) * coupling_xi(c, eps)));
            }
        }
        return std::pair{plateau <= 0.15 && tail <= 0.15, "plateau " + detail::num(plateau) + ", tail " + detail::num(tail)};
    });

    run("self-energy vs quadrature (20 samples)", "<= 1%", [] {
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> eps_d(from_ghz(-15.0), from_ghz(15.0)), rate_d(0.001, 0.5);
        const double guard = from_mhz(50.0);
        double worst = 0.0;
        int n = 0;
        while (n < 20) {
            const double eps = eps_d(rng);
            const BathChannel c{all_channels[std::size_t(n) % 5], rate_d(rng)};
            if (std::abs(eps) < guard || std::abs(eps - c.cutoff) < guard) continue;
            const Complex a = self_energy(c, eps), q = self_energy_quadrature(c, eps);
            worst = std::max(worst, std::abs(a - q) / std::abs(a));
            ++n;
        }
        return std::pair{worst <= 0.01, detail::num(worst)};
    });

    run("stationary solution pairing and trace", "<= 1e-10", [] {
        const OperatingPoint op = headline_weak();
        const Eigensystem es = eigendecompose(symmetric_system(op.omega_q, op.g));
        SolverOptions so;
        so.n_lev = 12;
        so.order = 3;
        const auto rt = build_response_tensors(es, symmetric_bath(op.kappa_e), {0.0, op.omega_in}, so);
        const auto sol = solve_stationary(rt, so);
        double worst = 0.0;
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; q <= 3; ++q) {
                const double scale = std::max(1.0, sol.s(p, q).cwiseAbs().maxCoeff());
                worst = std::max(worst, (sol.s(p, q) - sol.s(q, p).adjoint()).cwiseAbs().maxCoeff() / scale);
                const Complex tr = sol.s(p, q).trace();
                worst = std::max(worst, std::abs(tr - Complex(p == 0 && q == 0 ? 1.0 : 0.0)) / scale);
            }
        return std::pair{worst <= 1e-10, detail::num(worst)};
    });

    auto oracle = [&](const std::string& label, const OperatingPoint& op, double factor, int order, double tol) {
        run("oracle " + label, "rel diff <= " + detail::num(tol), [=] {
            const OracleComparison c = compare_with_time_domain(op, factor, order);
            return std::pair{c.rel_diff <= tol && c.trace_error <= 1e-8,
                             "F1/F_in pert " + detail::num(c.perturbative_ratio1) + " td " +
                                 detail::num(c.time_domain_ratio1) + " diff " + detail::num(c.rel_diff)};
        });
    };
    oracle("g=1.0 GHz weak drive", headline_strong(), 0.01, 2, 0.01);
    oracle("g=1.0 GHz at onset", headline_strong(), 1.0, 8, 0.05);
    if (opt.include_slow) {
        oracle("g=0.3 GHz weak drive", headline_weak(), 0.01, 2, 0.01);
        oracle("g=0.3 GHz at onset", headline_weak(), 1.0, 8, 0.05);
    }

    run("RK4 step halving (g=1.0 GHz)", "< 0.1%", [] {
        const OperatingPoint op = headline_strong();
        const OracleComparison a = compare_with_time_domain(op, 0.01, 2, 40);
        const OracleComparison b = compare_with_time_domain(op, 0.01, 2, 80);
        const double d = std::abs(a.time_domain_ratio1 - b.time_domain_ratio1) / std::abs(b.time_domain_ratio1);
        return std::pair{d < 1e-3, detail::num(d)};
    });

    run("retained levels 25 vs 42", "< 0.1%", [] {
        double worst = 0.0;
        for (const OperatingPoint& op : {headline_weak(), headline_strong()}) {
            const Eigensystem es = eigendecompose(symmetric_system(op.omega_q, op.g));
            const BathSet b = symmetric_bath(op.kappa_e);
            SolverOptions a, full;
            a.n_lev = 25;
            const double fa = evaluate_point(es, b, {0.0, op.omega_in}, a).flux.ratio1();
            const double ff = evaluate_point(es, b, {0.0, op.omega_in}, full).flux.ratio1();
            worst = std::max(worst, std::abs(fa - ff) / std::abs(ff));
        }
        return std::pair{worst < 1e-3, detail::num(worst)};
    });

    run("determinism and parallel/serial equivalence", "byte-identical CSV", [&] {
        Scenario t = s;
        t.system = symmetric_system(from_ghz(10.72), from_ghz(0.3));
        t.bath = symmetric_bath(from_khz(255.0));
        t.drive = {0.0, from_ghz(8.9456)};
        t.solver.n_lev = 12;
        t.solver.order = 1;
        t.sweep.axes = {AxisSpec{"kappa_e", 1e-4, 1e-3, 4, true}, AxisSpec{"omega_in", 8.9450, 8.9462, 4, false}};
        t.sweep.refine = true;
        auto csv = [&](unsigned w) {
            std::ostringstream os;
            write_sweep_csv(os, run_sweep(t, w));
            return os.str();
        };
        const std::string a = csv(1), b = csv(1), c = csv(opt.workers);
        return std::pair{a == b && a == c, std::string(a == b ? "serial repeat identical" : "serial repeat differs") +
                                               (a == c ? ", parallel identical" : ", parallel differs")};
    });
    return rep;
}

inline std::string format_report(const ValidationReport& rep) {
    std::ostringstream os;
    for (const auto& c : rep.checks)
        os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " | measured: " << c.measured
           << " | expected: " << c.expected << " | " << detail::num(c.seconds) << " s\n";
    os << rep.checks.size() - rep.failures() << "/" << rep.checks.size() << " checks passed\n";
    return os.str();
}

}  // namespace tpdc
