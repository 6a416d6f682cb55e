// commands.hpp: anticross / rabi / sweep / saturation commands. Each one
// writes <stem>*.csv plus a <stem>.meta.json sidecar into the output directory
// and returns its summary.
#pragma once

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tpdc/scenario.hpp"
#include "tpdc/spectrum.hpp"
#include "tpdc/steady_state.hpp"
#include "tpdc/sweep.hpp"

namespace tpdc {

struct RunOptions {
    std::string out_dir;   // overrides the scenario's output.dir when non-empty
    unsigned workers{1};
};

namespace detail {

inline std::filesystem::path output_dir(const Scenario& s, const RunOptions& run) {
    std::filesystem::path dir = run.out_dir.empty() ? s.output.dir : run.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

inline void write_meta(const std::filesystem::path& dir, const Scenario& s, const std::string& command,
                       const nlohmann::json& summary, const std::vector<std::string>& files) {
    nlohmann::json m;
    m["command"] = command;
    m["version"] = library_version;
    m["config"] = resolved_json(s);
    m["config_source"] = s.source;
    m["files"] = files;
    m["summary"] = summary;
    write_text(dir / (s.output.stem + ".meta.json"), m.dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------- anticross

inline nlohmann::json cmd_anticross(const Scenario& s, const RunOptions& run = {}) {
    const auto dir = detail::output_dir(s, run);
    std::vector<std::string> files;
    nlohmann::json summary;
    if (s.anticross.scan) {
        const auto grid_ghz = s.anticross.scan->values();
        std::vector<double> grid;
        for (double v : grid_ghz) grid.push_back(from_ghz(v));
        const auto pts = scan_branches(s.system, grid);
        std::ostringstream os;
        os << "omega_q[GHz],eps_lower[GHz],eps_upper[GHz],eps_branch_a[GHz],eps_branch_b[GHz],overlap_g01_branch_a\n";
        for (const auto& p : pts)
            os << fmt(to_ghz(p.omega_q)) << "," << fmt(to_ghz(p.eps_lower)) << "," << fmt(to_ghz(p.eps_upper)) << ","
               << fmt(to_ghz(p.eps_branch_a)) << "," << fmt(to_ghz(p.eps_branch_b)) << "," << fmt(p.overlap_g01_a)
               << "\n";
        const std::string name = s.output.stem + "_branches.csv";
        detail::write_text(dir / name, os.str());
        files.push_back(name);
        summary["branch_points"] = pts.size();
    }
    std::vector<double> gs = s.anticross.g_list;
    if (gs.empty()) gs.push_back(s.system.g_1);
    struct Row {
        AnticrossingResult r;
        std::string error;
    };
    std::vector<Row> rows(gs.size());
    parallel_for(gs.size(), run.workers, [&](std::size_t i) {
        SystemParams p = s.system;
        p.g_1 = p.g_3 = gs[i];
        try {
            rows[i].r = find_optimum_scanned(p, s.anticross.window_lo, s.anticross.window_hi, s.anticross.coarse_points,
                                             s.anticross.tolerance);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    std::ostringstream os;
    os << "g[GHz],omega_q_opt[GHz],g_eff[GHz],g_eff[kHz],omega_in_opt[GHz],status,reason\n";
    nlohmann::json opt = nlohmann::json::array();
    std::size_t failed = 0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        os << fmt(to_ghz(gs[i])) << ",";
        if (rows[i].error.empty()) {
            const auto& r = rows[i].r;
            os << fmt(to_ghz(r.omega_q_opt)) << "," << fmt(to_ghz(r.g_eff)) << "," << fmt(to_khz(r.g_eff)) << ","
               << fmt(to_ghz(r.omega_in_opt)) << ",ok,\n";
            opt.push_back({{"g", to_ghz(gs[i])},
                           {"omega_q_opt", to_ghz(r.omega_q_opt)},
                           {"g_eff_khz", to_khz(r.g_eff)},
                           {"omega_in_opt", to_ghz(r.omega_in_opt)}});
        } else {
            ++failed;
            std::string reason = rows[i].error;
            std::replace(reason.begin(), reason.end(), ',', ';');
            os << ",,,,error," << reason << "\n";
        }
    }
    const std::string name = s.output.stem + "_optimum.csv";
    detail::write_text(dir / name, os.str());
    files.push_back(name);
    summary["optimum"] = opt;
    summary["failed_points"] = failed;
    if (s.output.plot_script) {
        std::ostringstream gp;
        gp << "set datafile separator ','\nset key autotitle columnhead\n";
        if (s.anticross.scan)
            gp << "set xlabel 'omega_q [GHz]'\nset ylabel 'energy from ground [GHz]'\n"
               << "plot '" << s.output.stem << "_branches.csv' using 1:2 with lines, '' using 1:3 with lines\npause -1\n";
        gp << "set logscale xy\nset xlabel 'g [GHz]'\nset ylabel 'g_eff [kHz]'\n"
           << "plot '" << name << "' using 1:4 with linespoints\npause -1\n";
        detail::write_text(dir / (s.output.stem + ".gp"), gp.str());
        files.push_back(s.output.stem + ".gp");
    }
    detail::write_meta(dir, s, "anticross", summary, files);
    if (failed == gs.size()) throw std::domain_error("anticross: no optimum found (" + rows[0].error + ")");
    return summary;
}

// --------------------------------------------------------------------- rabi

inline nlohmann::json cmd_rabi(const Scenario& s, const RunOptions& run = {}) {
    const auto dir = detail::output_dir(s, run);
    SystemParams p = s.system;
    nlohmann::json summary;
    double g_eff = 0.0;
    if (s.rabi.at_optimum) {
        const auto opt = find_optimum_scanned(p, s.anticross.window_lo, s.anticross.window_hi, s.anticross.coarse_points,
                                              s.anticross.tolerance);
        p.omega_q = opt.omega_q_opt;
        g_eff = opt.g_eff;
    } else {
        g_eff = 0.5 * anticrossing_pair(p, p.omega_q).splitting();
    }
    const Eigensystem es = eigendecompose(build_model(p));
    std::vector<double> times;
    for (long k = 0; double(k) * s.rabi.dt <= s.rabi.t_max + 1e-9; ++k) times.push_back(double(k) * s.rabi.dt);
    const RabiTrace tr = rabi_evolve(es, flat_index(p, 0, 0, 1), flat_index(p, 0, 3, 0), times);
    std::ostringstream os;
    os << "t[ns],P_g01,P_g30,P_other\n";
    for (std::size_t k = 0; k < times.size(); ++k)
        os << fmt(times[k]) << "," << fmt(tr.p_initial[k]) << "," << fmt(tr.p_partner[k]) << "," << fmt(tr.p_other[k])
           << "\n";
    const std::string name = s.output.stem + "_rabi.csv";
    detail::write_text(dir / name, os.str());
    std::vector<std::string> files{name};
    summary["omega_q"] = to_ghz(p.omega_q);
    summary["g_eff_khz"] = to_khz(g_eff);
    try {
        const double T = rabi_period(tr);
        summary["period_ns"] = T;
        summary["g_eff_T_over_pi"] = g_eff * T / pi;
    } catch (const std::exception& e) {
        summary["period_error"] = e.what();
    }
    if (s.output.plot_script) {
        detail::write_text(dir / (s.output.stem + ".gp"),
                           "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't [ns]'\n"
                           "set ylabel 'population'\nplot '" + name +
                               "' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\npause -1\n");
        files.push_back(s.output.stem + ".gp");
    }
    detail::write_meta(dir, s, "rabi", summary, files);
    return summary;
}

// -------------------------------------------------------------------- sweep

inline nlohmann::json cmd_sweep(const Scenario& s, const RunOptions& run = {}) {
    const auto dir = detail::output_dir(s, run);
    const SweepResult r = run_sweep(s, run.workers);
    std::ostringstream os;
    write_sweep_csv(os, r);
    const std::string name = s.output.stem + ".csv";
    detail::write_text(dir / name, os.str());
    std::vector<std::string> files{name};
    if (s.output.plot_script) {
        detail::write_text(dir / (s.output.stem + ".gp"), sweep_plot_script(r, name));
        files.push_back(s.output.stem + ".gp");
    }
    const nlohmann::json summary = sweep_summary(r);
    detail::write_meta(dir, s, "sweep", summary, files);
    return summary;
}

// --------------------------------------------------------------- saturation

// omega_in maximizing the linear-response F1/F_in within +-2 kappa_e of the configured drive.
inline double flux_optimal_omega_in(const Scenario& s) {
    const double ke = s.bath.rate(ChannelId::ext1);
    const Eigensystem es = eigendecompose(build_model(s.system));
    SolverOptions lin = s.solver;
    lin.order = 1;
    auto f = [&](double w) {
        DriveField d{0.0, w};
        return evaluate_point(es, s.bath, d, lin).flux.ratio1();
    };
    return golden_maximize(f, s.drive.omega_in - 2.0 * ke, s.drive.omega_in + 2.0 * ke, false, 1e-6).x;
}

struct SaturationCurve {
    double detuning{0.0};     // kappa_e units
    double omega_in{0.0};     // rad/ns
    double onset{0.0};        // photons/ns
    std::vector<double> F_in;
    std::vector<FluxResult> flux;
    std::vector<std::string> method;   // "perturbative" or "harmonic"
    std::optional<double> drop_point;  // F_in where efficiency = 0.9 x its low-flux value
};

inline std::vector<SaturationCurve> saturation_curves(const Scenario& s, unsigned workers = 1) {
    const double ke = s.bath.rate(ChannelId::ext1);
    if (!(ke > 0.0)) throw ConfigError("saturation: kappa_e must be > 0");
    const double ref = s.saturation.reference_omega_in ? *s.saturation.reference_omega_in : flux_optimal_omega_in(s);
    const Eigensystem es = eigendecompose(build_model(s.system));
    std::vector<SaturationCurve> curves(s.saturation.detunings.size());
    parallel_for(curves.size(), workers, [&](std::size_t c) {
        SaturationCurve& cv = curves[c];
        cv.detuning = s.saturation.detunings[c];
        cv.omega_in = ref + cv.detuning * ke;
        cv.onset = saturation_onset(ke, cv.detuning * ke);
        SolverOptions opt = s.solver;
        opt.order = s.saturation.order;
        DriveField d{0.0, cv.omega_in};
        const ResponseTensors rt = build_response_tensors(es, s.bath, d, opt);
        const PerturbativeSolution sol = solve_stationary(rt, opt);
        auto at = [&](double F) {
            DriveField dd{std::sqrt(F), cv.omega_in};
            return fluxes(sol, rt, s.bath, dd, opt.order_tolerance);
        };
        // past the radius of convergence of the flux series
        auto resum = [&](double F) {
            return harmonic_steady_state(rt, s.bath, DriveField{std::sqrt(F), cv.omega_in}).flux;
        };
        const int n = s.saturation.points;
        for (int k = 0; k < n; ++k) {
            const double x = -s.saturation.decades_below +
                             (s.saturation.decades_below + s.saturation.decades_above) * double(k) / double(n - 1);
            const double F = cv.onset * std::pow(10.0, x);
            cv.F_in.push_back(F);
            FluxResult f = at(F);
            std::string how = "perturbative";
            if (!f.converged && s.saturation.harmonic_fallback) {
                try {
                    f = resum(F);
                    how = "harmonic";
                } catch (const ConvergenceError&) {
                }
            }
            cv.flux.push_back(f);
            cv.method.push_back(how);
        }
        // first sampled bracket of the 10% drop, refined on the series when it converged there
        const double target = 0.9 * cv.flux.front().efficiency();
        for (std::size_t k = 1; k < cv.flux.size() && !cv.drop_point; ++k) {
            const double e0 = cv.flux[k - 1].efficiency(), e1 = cv.flux[k].efficiency();
            if (!(e0 >= target && e1 < target)) continue;
            const double u0 = std::log(cv.F_in[k - 1]), u1 = std::log(cv.F_in[k]);
            if (cv.method[k] == "perturbative" && cv.flux[k].converged)
                cv.drop_point = std::exp(
                    find_crossing([&](double u) { return at(std::exp(u)).efficiency(); }, u0, u1, target, 1e-8));
            else
                cv.drop_point = std::exp(u0 + (u1 - u0) * (e0 - target) / (e0 - e1));
        }
    });
    return curves;
}

inline nlohmann::json cmd_saturation(const Scenario& s, const RunOptions& run = {}) {
    const auto dir = detail::output_dir(s, run);
    const auto curves = saturation_curves(s, run.workers);
    std::ostringstream os;
    os << "detuning[kappa_e],omega_in[GHz],F_in[photons/ns],F_in/onset,efficiency,F1_out/F_in,F3_out/F_in,"
          "onset[photons/ns],order_tail,method,status,reason\n";
    nlohmann::json js = nlohmann::json::array();
    std::size_t flagged = 0;
    for (const auto& cv : curves) {
        for (std::size_t k = 0; k < cv.F_in.size(); ++k) {
            const FluxResult& f = cv.flux[k];
            os << fmt(cv.detuning) << "," << fmt(to_ghz(cv.omega_in)) << "," << fmt(cv.F_in[k]) << ","
               << fmt(cv.F_in[k] / cv.onset) << "," << fmt(f.efficiency()) << "," << fmt(f.ratio1()) << ","
               << fmt(f.ratio3()) << "," << fmt(cv.onset) << "," << fmt(f.order_tail) << "," << cv.method[k] << ","
               << (f.converged ? "ok," : "error,order expansion not converged") << "\n";
            flagged += f.converged ? 0 : 1;
        }
        nlohmann::json c{{"detuning_kappa_e", cv.detuning},
                         {"omega_in", to_ghz(cv.omega_in)},
                         {"onset", cv.onset},
                         {"low_flux_efficiency", cv.flux.front().efficiency()}};
        bool monotone = true;
        for (std::size_t k = 1; k < cv.flux.size(); ++k)
            monotone = monotone && cv.flux[k].efficiency() <= cv.flux[k - 1].efficiency() + 1e-12;
        c["monotone"] = monotone;
        if (cv.drop_point) {
            c["drop_10pct_F_in"] = *cv.drop_point;
            c["drop_over_onset"] = *cv.drop_point / cv.onset;
        }
        js.push_back(c);
    }
    const std::string name = s.output.stem + ".csv";
    detail::write_text(dir / name, os.str());
    std::vector<std::string> files{name};
    if (s.output.plot_script) {
        std::ostringstream gp;
        gp << "set datafile separator ','\nset logscale x\nset xlabel 'F_in [photons/ns]'\n"
           << "set ylabel 'efficiency F1_out/(3F_in)'\nplot ";
        for (std::size_t c = 0; c < curves.size(); ++c)
            gp << (c ? ", " : "") << "'" << name << "' every ::" << 1 + c * curves[c].F_in.size() << "::"
               << (c + 1) * curves[c].F_in.size() << " using 3:5 with lines title 'detuning " << fmt(curves[c].detuning)
               << " kappa_e'";
        gp << "\npause -1\n";
        detail::write_text(dir / (s.output.stem + ".gp"), gp.str());
        files.push_back(s.output.stem + ".gp");
    }
    nlohmann::json summary{{"curves", js}, {"flagged_points", flagged}, {"order", s.saturation.order}};
    detail::write_meta(dir, s, "saturation", summary, files);
    return summary;
}

}  // namespace tpdc
