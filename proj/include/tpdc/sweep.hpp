// sweep.hpp: grid evaluation over scenario parameters, worker pool,
// CSV/metadata/plot-script output and 1-D helpers (refinement, crossings).
#pragma once

#include <boost/math/tools/toms748_solve.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tpdc/golden_section.hpp"
#include "tpdc/scenario.hpp"
#include "tpdc/spectrum.hpp"
#include "tpdc/steady_state.hpp"

namespace tpdc {

inline constexpr const char* library_version = "0.1.0";

// Runs f(i) for i in [0, n) on up to `workers` threads. Results must be
// written by index; the first exception is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
    workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// %.10g keeps output byte-stable across runs.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::string parameter_unit(const std::string& name) { return name == "flux" ? "photons/ns" : "GHz"; }

struct SweepRecord {
    std::vector<double> coords;  // file units
    bool ok{false};
    std::string reason;
    FluxResult flux;
    std::optional<double> Q_i;  // omega_1 / kappa_1i
    std::optional<double> T_1;  // 1/gamma, ns
};

struct SweepResult {
    std::vector<AxisSpec> axes;
    std::vector<SweepRecord> records;  // row-major, last axis fastest
    std::optional<std::size_t> argmax;
    std::vector<double> refined;       // refined argmax coordinates, file units
    double refined_ratio1{0.0};
    bool linear_response{true};
};

inline Scenario scenario_at(const Scenario& base, const std::vector<AxisSpec>& axes, const std::vector<double>& coords) {
    Scenario s = base;
    for (std::size_t a = 0; a < axes.size(); ++a) apply_parameter(s, axes[a].param, coords[a]);
    return s;
}

// Fluxes for one fully resolved scenario. Failures become error records.
inline SweepRecord evaluate_record(const Scenario& s, std::vector<double> coords = {}) {
    SweepRecord rec;
    rec.coords = std::move(coords);
    if (s.bath.rate(ChannelId::int1) > 0.0) rec.Q_i = s.system.omega_1 / s.bath.rate(ChannelId::int1);
    if (s.bath.rate(ChannelId::qubit) > 0.0) rec.T_1 = 1.0 / s.bath.rate(ChannelId::qubit);
    try {
        s.system.validate();
        const Eigensystem es = eigendecompose(build_model(s.system));
        const PointEvaluation ev = evaluate_point(es, s.bath, s.drive, s.solver);
        rec.flux = ev.flux;
        if (!std::isfinite(rec.flux.F1_out) || !std::isfinite(rec.flux.F3_out)) {
            rec.reason = "non-finite flux";
        } else if (!rec.flux.converged) {
            rec.reason = "order expansion not converged (tail " + fmt(rec.flux.order_tail) + ")";
        } else {
            rec.ok = true;
        }
    } catch (const std::exception& e) {
        rec.reason = e.what();
    }
    return rec;
}

inline double ratio1_at(const Scenario& base, const std::vector<AxisSpec>& axes, const std::vector<double>& coords) {
    const SweepRecord r = evaluate_record(scenario_at(base, axes, coords), coords);
    if (!r.ok) throw std::runtime_error("refinement point failed: " + r.reason);
    return r.flux.ratio1();
}

// Golden-section maximization of g on [lo, hi]; log-spaced when `log`.
inline GoldenResult golden_maximize(const std::function<double(double)>& g, double lo, double hi, bool log,
                                    double rel_tol = 1e-5) {
    auto to_x = [&](double u) { return log ? std::exp(u) : u; };
    const double a = log ? std::log(lo) : lo, b = log ? std::log(hi) : hi;
    GoldenResult r = golden_section_minimize([&](double u) { return -g(to_x(u)); }, a, b, rel_tol * std::max(std::abs(b - a), 1e-300) + (log ? rel_tol : 0.0));
    r.x = to_x(r.x);
    r.fx = -r.fx;
    return r;
}

// One golden-section pass per axis around the coarse argmax, bracketed by its grid neighbours.
inline std::pair<std::vector<double>, double> refine_argmax(const Scenario& base, const std::vector<AxisSpec>& axes,
                                                            const std::vector<std::size_t>& index) {
    std::vector<double> x;
    for (std::size_t a = 0; a < axes.size(); ++a) x.push_back(axes[a].values()[index[a]]);
    double best = ratio1_at(base, axes, x);
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto v = axes[a].values();
        const std::size_t k = index[a];
        const double lo = v[k == 0 ? 0 : k - 1], hi = v[std::min(k + 1, v.size() - 1)];
        auto g = [&](double u) {
            auto y = x;
            y[a] = u;
            return ratio1_at(base, axes, y);
        };
        const GoldenResult r = golden_maximize(g, lo, hi, axes[a].log);
        if (r.fx > best) {
            best = r.fx;
            x[a] = r.x;
        }
    }
    return {x, best};
}

inline SweepResult run_sweep(const Scenario& base, unsigned workers = 1) {
    if (base.sweep.axes.empty()) throw ConfigError("sweep: no axes configured");
    SweepResult res;
    res.axes = base.sweep.axes;
    res.linear_response = base.drive.flux() == 0.0;
    std::vector<std::vector<double>> vals;
    std::size_t total = 1;
    for (const auto& a : res.axes) {
        vals.push_back(a.values());
        total *= vals.back().size();
    }
    res.records.resize(total);
    parallel_for(total, workers, [&](std::size_t i) {
        std::vector<double> coords(res.axes.size());
        std::size_t rem = i;
        for (std::size_t a = res.axes.size(); a-- > 0;) {
            coords[a] = vals[a][rem % vals[a].size()];
            rem /= vals[a].size();
        }
        res.records[i] = evaluate_record(scenario_at(base, res.axes, coords), coords);
    });
    for (std::size_t i = 0; i < total; ++i)
        if (res.records[i].ok && (!res.argmax || res.records[i].flux.ratio1() > res.records[*res.argmax].flux.ratio1()))
            res.argmax = i;
    if (res.argmax && base.sweep.refine) {
        std::vector<std::size_t> idx(res.axes.size());
        std::size_t rem = *res.argmax;
        for (std::size_t a = res.axes.size(); a-- > 0;) {
            idx[a] = rem % vals[a].size();
            rem /= vals[a].size();
        }
        try {
            std::tie(res.refined, res.refined_ratio1) = refine_argmax(base, res.axes, idx);
        } catch (const std::exception&) {
            res.refined.clear();
        }
    }
    return res;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    for (const auto& a : r.axes) os << a.param << "[" << parameter_unit(a.param) << "],";
    os << "F_in[photons/ns],F1_out/F_in,F3_out/F_in,efficiency,conservation_residual,Q_i,T_1[ns],status,reason\n";
    for (const auto& rec : r.records) {
        for (double c : rec.coords) os << fmt(c) << ",";
        if (rec.ok) {
            os << fmt(rec.flux.F_in) << "," << fmt(rec.flux.ratio1()) << "," << fmt(rec.flux.ratio3()) << ","
               << fmt(rec.flux.efficiency()) << "," << fmt(rec.flux.conservation_residual()) << ",";
        } else {
            os << ",,,,,";
        }
        os << (rec.Q_i ? fmt(*rec.Q_i) : "") << "," << (rec.T_1 ? fmt(*rec.T_1) : "") << ","
           << (rec.ok ? "ok" : "error") << ",";
        std::string reason = rec.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        os << reason << "\n";
    }
}

inline nlohmann::json sweep_summary(const SweepResult& r) {
    nlohmann::json j;
    std::size_t failed = 0;
    for (const auto& rec : r.records) failed += rec.ok ? 0 : 1;
    j["points"] = r.records.size();
    j["failed_points"] = failed;
    j["linear_response"] = r.linear_response;
    if (r.argmax) {
        const auto& rec = r.records[*r.argmax];
        nlohmann::json g;
        for (std::size_t a = 0; a < r.axes.size(); ++a) g[r.axes[a].param] = rec.coords[a];
        g["F1_out/F_in"] = rec.flux.ratio1();
        j["grid_argmax"] = g;
    }
    if (!r.refined.empty()) {
        nlohmann::json g;
        for (std::size_t a = 0; a < r.axes.size(); ++a) g[r.axes[a].param] = r.refined[a];
        g["F1_out/F_in"] = r.refined_ratio1;
        j["refined_argmax"] = g;
    }
    return j;
}

inline std::string sweep_plot_script(const SweepResult& r, const std::string& csv_name) {
    std::ostringstream os;
    os << "# gnuplot script for " << csv_name << "\n"
       << "set datafile separator ','\nset key autotitle columnhead\n";
    auto label = [](const AxisSpec& a) { return a.param + " [" + parameter_unit(a.param) + "]"; };
    const std::size_t nax = r.axes.size();
    if (nax == 1) {
        if (r.axes[0].log) os << "set logscale x\n";
        os << "set xlabel '" << label(r.axes[0]) << "'\nset ylabel 'flux / F_in'\n"
           << "plot '" << csv_name << "' using 1:3 with lines title 'F1/F_in', '' using 1:4 with lines title 'F3/F_in'\n";
    } else {
        if (r.axes[0].log) os << "set logscale x\n";
        if (r.axes[1].log) os << "set logscale y\n";
        os << "set xlabel '" << label(r.axes[0]) << "'\nset ylabel '" << label(r.axes[1]) << "'\n"
           << "set view map\nset pm3d map\nset dgrid3d " << r.axes[1].points << "," << r.axes[0].points << "\n"
           << "splot '" << csv_name << "' using 1:2:4 with pm3d title 'F1/F_in'\n";
    }
    os << "pause -1\n";
    return os.str();
}

// ----------------------------------------------------------- 1-D helpers

// x in [lo, hi] with f(x) = target; f(lo) - target and f(hi) - target must differ in sign.
inline double find_crossing(const std::function<double(double)>& f, double lo, double hi, double target,
                            double rel_tol = 1e-9) {
    auto g = [&](double x) { return f(x) - target; };
    const double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0)) throw std::domain_error("find_crossing: target not bracketed");
    boost::uintmax_t iters = 200;
    auto tol = [&](double a, double b) { return std::abs(b - a) <= rel_tol * std::max(std::abs(a), std::abs(b)); };
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    return 0.5 * (r.first + r.second);
}

// Interior local maxima of a sampled curve, ordered by height (largest first).
inline std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k + 1 < y.size(); ++k)
        if (y[k] > y[k - 1] && y[k] >= y[k + 1]) out.push_back(k);
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    return out;
}

}  // namespace tpdc
