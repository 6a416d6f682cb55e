#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(TPDC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path write_config(const std::string& name, const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST(Cli, ConfigErrorExitsWithOne) {
    EXPECT_EQ(run("sweep --config /nonexistent.json"), 1);
    const auto bad = write_config("tpdc_bad.json", "{\"schema_version\": 1, \"bath\": {\"kappa_e\": \"x\"}}");
    EXPECT_EQ(run("sweep --config " + bad.string()), 1);
    EXPECT_EQ(run("bogus"), 1);
}

TEST(Cli, SolverFailureExitsWithTwo) {
    const auto cfg = write_config("tpdc_nobracket.json",
                                  "{\"schema_version\": 1, \"system\": {\"g\": 0.3}, \"anticross\": {\"window\": [11.0, 11.5]}}");
    EXPECT_EQ(run("anticross --config " + cfg.string() + " --out " +
                  (std::filesystem::temp_directory_path() / "tpdc_cli_fail").string()),
              2);
}

TEST(Cli, SweepIsByteIdenticalAcrossRunsAndWorkers) {
    const auto cfg = write_config("tpdc_sweep.json", R"({"schema_version": 1,
        "system": {"omega_q": 10.72, "g": 0.3}, "bath": {"kappa_e": 0.000255}, "drive": {"omega_in": 8.9456},
        "solver": {"n_lev": 12},
        "sweep": {"axes": [{"param": "omega_in", "min": 8.9450, "max": 8.9462, "points": 5}], "refine": false},
        "output": {"stem": "cli"}})");
    const auto a = std::filesystem::temp_directory_path() / "tpdc_cli_a";
    const auto b = std::filesystem::temp_directory_path() / "tpdc_cli_b";
    ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + a.string() + " --workers 1"), 0);
    ASSERT_EQ(run("sweep --config " + cfg.string() + " --out " + b.string() + " --workers 3 --seed 99"), 0);
    EXPECT_EQ(slurp(a / "cli.csv"), slurp(b / "cli.csv"));
    EXPECT_EQ(slurp(a / "cli.meta.json"), slurp(b / "cli.meta.json"));
}
