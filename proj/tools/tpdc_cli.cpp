// tpdc: command-line front end.
//
// exit codes: 0 success, 1 config error, 2 solver failure, 3 validation failure

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "tpdc/commands.hpp"
#include "tpdc/oracles.hpp"
#include "tpdc/scenario.hpp"
#include "tpdc/validation.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    unsigned workers{1};
    int order{0};
    long seed{0};
    std::string lamb;
    int n_lev{-1};
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
    auto* opt = sub->add_option("--config", c.config, "scenario file (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", c.out, "output directory (overrides output.dir)");
    sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1u, 256u));
    sub->add_option("--order", c.order, "perturbation order P (overrides solver.order / saturation.order)")
        ->check(CLI::Range(1, 32));
    sub->add_option("--seed", c.seed, "reserved; all computations are deterministic");
    sub->add_option("--lamb-shift", c.lamb, "absorbed | explicit")->check(CLI::IsMember({"absorbed", "explicit"}));
    sub->add_option("--n-lev", c.n_lev, "retained eigenstates (0 = all)")->check(CLI::Range(0, 10000));
}

tpdc::Scenario load(const Common& c, const std::string& command) {
    tpdc::Scenario s = c.config.empty() ? tpdc::parse_scenario("{\"schema_version\": 1, \"bath\": {\"kappa_e\": 0.000255},"
                                                               " \"drive\": {\"omega_in\": 8.9456}}")
                                        : tpdc::load_scenario(c.config);
    if (c.order > 0) {
        if (command == "saturation") s.saturation.order = c.order;
        else s.solver.order = c.order;
    }
    if (!c.lamb.empty()) s.solver.lamb = tpdc::lamb_shift_from_string(c.lamb);
    if (c.n_lev >= 0) {
        if (c.n_lev > s.system.dimension()) throw tpdc::ConfigError("--n-lev exceeds the Hilbert dimension");
        s.solver.n_lev = std::size_t(c.n_lev);
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-photon down-conversion in ultrastrong cavity QED: spectra, steady-state fluxes, sweeps"};
    app.require_subcommand(1);
    Common c;
    auto* anticross = app.add_subcommand("anticross", "branch energies and |g01>/|g30> optimum vs g");
    auto* rabi = app.add_subcommand("rabi", "vacuum Rabi oscillation |g01> <-> |g30>");
    auto* sweep = app.add_subcommand("sweep", "flux grid over up to two parameters");
    auto* saturation = app.add_subcommand("saturation", "efficiency vs input photon rate");
    auto* validate = app.add_subcommand("validate", "oracle and invariant suite");
    add_common(anticross, c, true);
    add_common(rabi, c, true);
    add_common(sweep, c, true);
    add_common(saturation, c, true);
    add_common(validate, c, false);
    bool fast = false;
    validate->add_flag("--fast", fast, "skip the long g = 0.3 GHz time-domain runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const tpdc::Scenario s = load(c, name);
        const tpdc::RunOptions run{c.out, c.workers};
        if (name == "validate") {
            tpdc::ValidationOptions vo;
            vo.include_slow = !fast;
            vo.workers = std::max(2u, c.workers);
            const auto rep = tpdc::run_validation(s, vo);
            std::cout << tpdc::format_report(rep);
            return rep.all_pass() ? 0 : 3;
        }
        nlohmann::json summary;
        if (name == "anticross") summary = tpdc::cmd_anticross(s, run);
        else if (name == "rabi") summary = tpdc::cmd_rabi(s, run);
        else if (name == "sweep") summary = tpdc::cmd_sweep(s, run);
        else if (name == "saturation") summary = tpdc::cmd_saturation(s, run);
        std::cout << summary.dump(2) << "\n";
        return 0;
    } catch (const tpdc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
}
