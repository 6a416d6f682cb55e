// scenario.hpp: JSON scenario files. Frequencies and rates in the file are
// linear GHz; the loader multiplies by 2pi. Fluxes are photons/ns.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpdc/bath.hpp"
#include "tpdc/fock_space.hpp"
#include "tpdc/steady_state.hpp"
#include "tpdc/units.hpp"

namespace tpdc {

inline constexpr int scenario_schema_version = 1;

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct AxisSpec {
    std::string param;
    double min{0.0};
    double max{0.0};
    int points{2};
    bool log{false};

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int k = 0; k < points; ++k) {
            const double f = points == 1 ? 0.0 : double(k) / double(points - 1);
            v[std::size_t(k)] = log ? std::exp(std::log(min) + f * (std::log(max) - std::log(min))) : min + f * (max - min);
        }
        return v;
    }
};

struct SweepSpec {
    std::vector<AxisSpec> axes;
    bool refine{true};
};

struct AnticrossSpec {
    double window_lo{from_ghz(10.5)};
    double window_hi{from_ghz(11.0)};
    int coarse_points{41};
    double tolerance{from_khz(1.0)};
    std::optional<AxisSpec> scan;   // omega_q grid for the branch plot (GHz)
    std::vector<double> g_list;     // rad/ns, optimum curve vs g
};

struct RabiSpec {
    double t_max{5000.0};  // ns
    double dt{1.0};        // ns
    bool at_optimum{true};
};

struct SaturationSpec {
    std::vector<double> detunings{0.0, 0.5, 1.0, 2.0};  // units of kappa_e
    double decades_below{2.5};
    double decades_above{0.5};
    int points{31};
    int order{16};
    bool harmonic_fallback{true};  // resum points where the order expansion diverges
    std::optional<double> reference_omega_in;  // default: flux-optimal omega_in
};

struct OutputSpec {
    std::string dir{"out"};
    std::string stem{"result"};
    bool plot_script{true};
};

struct Scenario {
    SystemParams system{};
    BathSet bath{};
    DriveField drive{};
    SolverOptions solver{};
    SweepSpec sweep{};
    AnticrossSpec anticross{};
    RabiSpec rabi{};
    SaturationSpec saturation{};
    OutputSpec output{};
    nlohmann::json source;  // the file as parsed
};

namespace detail {

// Best-effort line of the first occurrence of "key" after the parent's key.
inline int locate_key(const std::string& text, const std::vector<std::string>& path) {
    std::size_t pos = 0;
    for (const auto& key : path) {
        const auto found = text.find("\"" + key + "\"", pos);
        if (found == std::string::npos) break;
        pos = found;
    }
    if (path.empty() || pos == 0) return 0;
    return 1 + int(std::count(text.begin(), text.begin() + long(pos), '\n'));
}

class Reader {
public:
    Reader(const nlohmann::json& j, const std::string& text, std::vector<std::string> path)
        : j_(j), text_(text), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg, const std::string& key = {}) const {
        auto p = path_;
        if (!key.empty()) p.push_back(key);
        std::string where;
        for (const auto& k : p) where += "/" + k;
        throw ConfigError((where.empty() ? std::string("/") : where) + ": " + msg, locate_key(text_, p));
    }

    void only(std::initializer_list<const char*> keys) const {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!allowed.count(it.key())) fail("unknown key", it.key());
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) fail("expected a number", key);
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail("must be finite", key);
        return x;
    }
    double nonneg(const std::string& key, double fallback) const {
        const double x = number(key, fallback);
        if (x < 0.0) fail("must be >= 0", key);
        return x;
    }
    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) fail("expected an integer", key);
        return v.get<int>();
    }
    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) fail("expected true/false", key);
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) fail("expected a string", key);
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array()) fail("expected an array of numbers", key);
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail("expected an array of numbers", key);
            out.push_back(e.get<double>());
        }
        return out;
    }
    Reader child(const std::string& key) const {
        auto p = path_;
        p.push_back(key);
        return Reader(j_.at(key), text_, p);
    }
    const nlohmann::json& json() const { return j_; }
    const std::vector<std::string>& path() const { return path_; }

private:
    const nlohmann::json& j_;
    const std::string& text_;
    std::vector<std::string> path_;
};

inline AxisSpec read_axis(const Reader& r) {
    r.only({"param", "min", "max", "points", "scale"});
    AxisSpec a;
    a.param = r.string("param", "");
    if (a.param.empty()) r.fail("axis needs a 'param'");
    if (!r.has("min") || !r.has("max")) r.fail("axis needs 'min' and 'max'");
    a.min = r.number("min", 0.0);
    a.max = r.number("max", 0.0);
    a.points = r.integer("points", 2);
    if (a.points < 2) r.fail("points must be >= 2", "points");
    const std::string scale = r.string("scale", "linear");
    if (scale != "linear" && scale != "log") r.fail("scale must be 'linear' or 'log'", "scale");
    a.log = scale == "log";
    if (!(a.max > a.min)) r.fail("max must exceed min", "max");
    if (a.log && !(a.min > 0.0)) r.fail("log axis needs min > 0", "min");
    return a;
}

}  // namespace detail

// Names accepted on sweep axes.
inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"omega_q", "omega_1", "omega_3", "g", "g_1", "g_3",
                                                "kappa_e", "kappa_i", "kappa_1e", "kappa_1i", "kappa_3e",
                                                "kappa_3i", "gamma", "cutoff", "omega_in", "flux"};
    return names;
}

inline bool is_system_parameter(const std::string& name) {
    return name == "omega_q" || name == "omega_1" || name == "omega_3" || name == "g" || name == "g_1" ||
           name == "g_3";
}

// Set a parameter given in file units (GHz, or photons/ns for "flux").
inline void apply_parameter(Scenario& s, const std::string& name, double value) {
    const double w = from_ghz(value);
    if (name == "omega_q") s.system.omega_q = w;
    else if (name == "omega_1") s.system.omega_1 = w;
    else if (name == "omega_3") s.system.omega_3 = w;
    else if (name == "g") s.system.g_1 = s.system.g_3 = w;
    else if (name == "g_1") s.system.g_1 = w;
    else if (name == "g_3") s.system.g_3 = w;
    else if (name == "kappa_e") s.bath[ChannelId::ext1].rate = s.bath[ChannelId::ext3].rate = w;
    else if (name == "kappa_i") s.bath[ChannelId::int1].rate = s.bath[ChannelId::int3].rate = w;
    else if (name == "kappa_1e") s.bath[ChannelId::ext1].rate = w;
    else if (name == "kappa_1i") s.bath[ChannelId::int1].rate = w;
    else if (name == "kappa_3e") s.bath[ChannelId::ext3].rate = w;
    else if (name == "kappa_3i") s.bath[ChannelId::int3].rate = w;
    else if (name == "gamma") s.bath[ChannelId::qubit].rate = w;
    else if (name == "cutoff") s.bath.set_cutoff(w);
    else if (name == "omega_in") s.drive.omega_in = w;
    else if (name == "flux") {
        if (value < 0.0) throw std::invalid_argument("flux must be >= 0");
        s.drive.E_in = std::sqrt(value);
    } else
        throw std::invalid_argument("unknown parameter '" + name + "'");
}

inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports "at line L, column C" in what()
        int line = 0;
        const std::string w = e.what();
        const auto at = w.find("line ");
        if (at != std::string::npos) line = std::atoi(w.c_str() + at + 5);
        throw ConfigError(std::string("JSON syntax error: ") + e.what(), line);
    }
    const detail::Reader root(j, text, {});
    root.only({"schema_version", "description", "system", "bath", "drive", "solver", "sweep", "anticross", "rabi",
               "saturation", "output"});
    if (!root.has("schema_version")) root.fail("missing schema_version");
    const int version = root.integer("schema_version", 0);
    if (version != scenario_schema_version)
        root.fail("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(scenario_schema_version) + ")",
                  "schema_version");

    Scenario s;
    s.source = j;
    s.system = symmetric_system(from_ghz(10.72), from_ghz(0.3));
    if (root.has("system")) {
        const auto r = root.child("system");
        r.only({"omega_q", "omega_1", "omega_3", "g", "g_1", "g_3", "n1_max", "n3_max"});
        s.system.omega_q = from_ghz(r.nonneg("omega_q", to_ghz(s.system.omega_q)));
        s.system.omega_1 = from_ghz(r.nonneg("omega_1", to_ghz(s.system.omega_1)));
        s.system.omega_3 = from_ghz(r.nonneg("omega_3", to_ghz(s.system.omega_3)));
        if (r.has("g") && (r.has("g_1") || r.has("g_3"))) r.fail("give either 'g' or 'g_1'/'g_3'", "g");
        const double g = r.nonneg("g", to_ghz(s.system.g_1));
        s.system.g_1 = from_ghz(r.nonneg("g_1", g));
        s.system.g_3 = from_ghz(r.nonneg("g_3", r.has("g") ? g : to_ghz(s.system.g_3)));
        s.system.n1_max = r.integer("n1_max", s.system.n1_max);
        s.system.n3_max = r.integer("n3_max", s.system.n3_max);
        try {
            s.system.validate();
        } catch (const std::invalid_argument& e) {
            r.fail(e.what());
        }
    }
    if (root.has("bath")) {
        const auto r = root.child("bath");
        r.only({"kappa_e", "kappa_i", "kappa_1e", "kappa_1i", "kappa_3e", "kappa_3i", "gamma", "cutoff", "lamb_shift",
                "eps_floor"});
        const double ke = r.nonneg("kappa_e", 0.0), ki = r.nonneg("kappa_i", 0.0);
        s.bath[ChannelId::ext1].rate = from_ghz(r.nonneg("kappa_1e", ke));
        s.bath[ChannelId::ext3].rate = from_ghz(r.nonneg("kappa_3e", ke));
        s.bath[ChannelId::int1].rate = from_ghz(r.nonneg("kappa_1i", ki));
        s.bath[ChannelId::int3].rate = from_ghz(r.nonneg("kappa_3i", ki));
        s.bath[ChannelId::qubit].rate = from_ghz(r.nonneg("gamma", 0.0));
        const double kx = r.number("cutoff", to_ghz(default_cutoff));
        if (!(kx > 0.0)) r.fail("must be > 0", "cutoff");
        s.bath.set_cutoff(from_ghz(kx));
        try {
            s.solver.lamb = lamb_shift_from_string(r.string("lamb_shift", "absorbed"));
        } catch (const std::invalid_argument& e) {
            r.fail(e.what(), "lamb_shift");
        }
        s.solver.eps_floor = from_ghz(r.nonneg("eps_floor", to_ghz(default_eps_floor)));
    }
    if (root.has("drive")) {
        const auto r = root.child("drive");
        r.only({"omega_in", "flux"});
        s.drive.omega_in = from_ghz(r.nonneg("omega_in", 0.0));
        s.drive.E_in = std::sqrt(r.nonneg("flux", 0.0));
    }
    if (root.has("solver")) {
        const auto r = root.child("solver");
        r.only({"order", "n_lev", "order_tolerance"});
        s.solver.order = r.integer("order", 1);
        if (s.solver.order < 1) r.fail("must be >= 1", "order");
        const int n = r.integer("n_lev", 0);
        if (n < 0 || n > s.system.dimension()) r.fail("must be in [0, D]", "n_lev");
        s.solver.n_lev = std::size_t(n);
        s.solver.order_tolerance = r.nonneg("order_tolerance", s.solver.order_tolerance);
    }
    if (root.has("sweep")) {
        const auto r = root.child("sweep");
        r.only({"axes", "refine"});
        s.sweep.refine = r.boolean("refine", true);
        if (r.has("axes")) {
            const auto& axes = r.json().at("axes");
            if (!axes.is_array()) r.fail("expected an array", "axes");
            if (axes.size() > 2) r.fail("at most 2 sweep axes", "axes");
            for (std::size_t k = 0; k < axes.size(); ++k) {
                auto p = r.path();
                p.push_back("axes");
                const detail::Reader ar(axes[k], text, p);
                AxisSpec a = detail::read_axis(ar);
                const auto& names = sweep_parameters();
                if (std::find(names.begin(), names.end(), a.param) == names.end())
                    ar.fail("unknown sweep parameter '" + a.param + "'", "param");
                for (const auto& b : s.sweep.axes)
                    if (b.param == a.param) ar.fail("duplicate sweep parameter", "param");
                s.sweep.axes.push_back(a);
            }
        }
    }
    if (root.has("anticross")) {
        const auto r = root.child("anticross");
        r.only({"window", "coarse_points", "tolerance", "scan", "g_list"});
        const auto w = r.numbers("window", {to_ghz(s.anticross.window_lo), to_ghz(s.anticross.window_hi)});
        if (w.size() != 2 || !(w[1] > w[0])) r.fail("expected [lo, hi] with hi > lo", "window");
        s.anticross.window_lo = from_ghz(w[0]);
        s.anticross.window_hi = from_ghz(w[1]);
        s.anticross.coarse_points = r.integer("coarse_points", s.anticross.coarse_points);
        if (s.anticross.coarse_points < 3) r.fail("must be >= 3", "coarse_points");
        s.anticross.tolerance = from_ghz(r.number("tolerance", to_ghz(s.anticross.tolerance)));
        if (!(s.anticross.tolerance > 0.0)) r.fail("must be > 0", "tolerance");
        if (r.has("scan")) s.anticross.scan = detail::read_axis(r.child("scan"));
        for (double g : r.numbers("g_list", {})) {
            if (!(g > 0.0)) r.fail("entries must be > 0", "g_list");
            s.anticross.g_list.push_back(from_ghz(g));
        }
    }
    if (root.has("rabi")) {
        const auto r = root.child("rabi");
        r.only({"t_max", "dt", "at_optimum"});
        s.rabi.t_max = r.number("t_max", s.rabi.t_max);
        s.rabi.dt = r.number("dt", s.rabi.dt);
        if (!(s.rabi.dt > 0.0) || !(s.rabi.t_max > s.rabi.dt)) r.fail("need 0 < dt < t_max");
        s.rabi.at_optimum = r.boolean("at_optimum", true);
    }
    if (root.has("saturation")) {
        const auto r = root.child("saturation");
        r.only({"detunings", "decades_below", "decades_above", "points", "order", "harmonic_fallback",
                "reference_omega_in"});
        s.saturation.detunings = r.numbers("detunings", s.saturation.detunings);
        s.saturation.decades_below = r.nonneg("decades_below", s.saturation.decades_below);
        s.saturation.decades_above = r.nonneg("decades_above", s.saturation.decades_above);
        s.saturation.points = r.integer("points", s.saturation.points);
        if (s.saturation.points < 2) r.fail("must be >= 2", "points");
        s.saturation.order = r.integer("order", s.saturation.order);
        if (s.saturation.order < 1) r.fail("must be >= 1", "order");
        s.saturation.harmonic_fallback = r.boolean("harmonic_fallback", s.saturation.harmonic_fallback);
        if (r.has("reference_omega_in")) s.saturation.reference_omega_in = from_ghz(r.nonneg("reference_omega_in", 0.0));
    }
    if (root.has("output")) {
        const auto r = root.child("output");
        r.only({"dir", "stem", "plot_script"});
        s.output.dir = r.string("dir", s.output.dir);
        s.output.stem = r.string("stem", s.output.stem);
        s.output.plot_script = r.boolean("plot_script", true);
        if (s.output.stem.empty() || s.output.stem.find('/') != std::string::npos)
            r.fail("stem must be a plain file name", "stem");
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    try {
        return parse_scenario(os.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what(), e.line());
    }
}

// Resolved parameters in file units, for metadata sidecars.
inline nlohmann::json resolved_json(const Scenario& s) {
    nlohmann::json j;
    j["schema_version"] = scenario_schema_version;
    j["system"] = {{"omega_q", to_ghz(s.system.omega_q)}, {"omega_1", to_ghz(s.system.omega_1)},
                   {"omega_3", to_ghz(s.system.omega_3)}, {"g_1", to_ghz(s.system.g_1)},
                   {"g_3", to_ghz(s.system.g_3)},         {"n1_max", s.system.n1_max},
                   {"n3_max", s.system.n3_max}};
    j["bath"] = {{"kappa_1e", to_ghz(s.bath.rate(ChannelId::ext1))}, {"kappa_1i", to_ghz(s.bath.rate(ChannelId::int1))},
                 {"kappa_3e", to_ghz(s.bath.rate(ChannelId::ext3))}, {"kappa_3i", to_ghz(s.bath.rate(ChannelId::int3))},
                 {"gamma", to_ghz(s.bath.rate(ChannelId::qubit))},    {"cutoff", to_ghz(s.bath[ChannelId::ext1].cutoff)},
                 {"lamb_shift", to_string(s.solver.lamb)},             {"eps_floor", to_ghz(s.solver.eps_floor)}};
    j["drive"] = {{"omega_in", to_ghz(s.drive.omega_in)}, {"flux", s.drive.flux()}};
    j["solver"] = {{"order", s.solver.order}, {"n_lev", s.solver.n_lev}, {"order_tolerance", s.solver.order_tolerance}};
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : s.sweep.axes)
        axes.push_back({{"param", a.param}, {"min", a.min}, {"max", a.max}, {"points", a.points},
                        {"scale", a.log ? "log" : "linear"}});
    j["sweep"] = {{"axes", axes}, {"refine", s.sweep.refine}};
    nlohmann::json sat = {{"detunings", s.saturation.detunings},
                          {"decades_below", s.saturation.decades_below},
                          {"decades_above", s.saturation.decades_above},
                          {"points", s.saturation.points},
                          {"order", s.saturation.order},
                          {"harmonic_fallback", s.saturation.harmonic_fallback}};
    if (s.saturation.reference_omega_in) sat["reference_omega_in"] = to_ghz(*s.saturation.reference_omega_in);
    j["saturation"] = sat;
    j["output"] = {{"dir", s.output.dir}, {"stem", s.output.stem}, {"plot_script", s.output.plot_script}};
    return j;
}

}  // namespace tpdc
