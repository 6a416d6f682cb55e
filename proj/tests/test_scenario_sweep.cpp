#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tpdc/commands.hpp"
#include "tpdc/scenario.hpp"
#include "tpdc/sweep.hpp"

using namespace tpdc;

namespace {

const char* small_sweep = R"({
  "schema_version": 1,
  "system": {"omega_q": 10.72, "g": 0.3},
  "bath": {"kappa_e": 0.000255},
  "drive": {"omega_in": 8.9456},
  "solver": {"n_lev": 12},
  "sweep": {"axes": [
    {"param": "kappa_e", "min": 0.0001, "max": 0.001, "points": 4, "scale": "log"},
    {"param": "omega_in", "min": 8.9450, "max": 8.9462, "points": 3}
  ]},
  "output": {"stem": "t"}
})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST(Scenario, ParsesAndAppliesTwoPi) {
    const Scenario s = parse_scenario(small_sweep);
    EXPECT_DOUBLE_EQ(s.system.omega_q, from_ghz(10.72));
    EXPECT_DOUBLE_EQ(s.system.g_1, from_ghz(0.3));
    EXPECT_DOUBLE_EQ(s.system.g_3, from_ghz(0.3));
    EXPECT_DOUBLE_EQ(s.bath.rate(ChannelId::ext1), from_ghz(0.000255));
    EXPECT_DOUBLE_EQ(s.bath.rate(ChannelId::ext3), from_ghz(0.000255));
    EXPECT_EQ(s.bath.rate(ChannelId::int1), 0.0);
    EXPECT_EQ(s.solver.n_lev, 12u);
    EXPECT_EQ(s.solver.lamb, LambShift::absorbed);
    ASSERT_EQ(s.sweep.axes.size(), 2u);
    EXPECT_TRUE(s.sweep.axes[0].log);
    EXPECT_NEAR(s.sweep.axes[0].values()[3], 0.001, 1e-15);
}

TEST(Scenario, SyntaxErrorsCarryLineNumbers) {
    try {
        parse_scenario("{\n  \"schema_version\": 1,\n  \"system\": {\"g\": 0.3,,}\n}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(Scenario, SemanticErrorsNameKeyAndLine) {
    try {
        parse_scenario("{\n  \"schema_version\": 1,\n  \"sweep\": {\"axes\": [\n    {\"param\": \"bogus\", \"min\": 1, \"max\": 2}\n  ]}\n}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
        EXPECT_EQ(e.line(), 4);
    }
    EXPECT_THROW(parse_scenario(R"({"schema_version": 2})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"system": {}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "bath": {"kappa_e": -1}})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "typo": 1})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"schema_version": 1, "sweep": {"axes": [{"param": "g", "min": 1, "max": 2, "points": 1}]}})"),
                 ConfigError);
    EXPECT_THROW(
        parse_scenario(R"({"schema_version": 1, "sweep": {"axes": [{"param": "g", "min": 1, "max": 2}, {"param": "gamma", "min": 1, "max": 2}, {"param": "flux", "min": 1, "max": 2}]}})"),
        ConfigError);
    EXPECT_THROW(load_scenario("/nonexistent/file.json"), ConfigError);
}

TEST(Sweep, CsvHasUnitsAndNoNaN) {
    const Scenario s = parse_scenario(small_sweep);
    const SweepResult r = run_sweep(s, 1);
    ASSERT_EQ(r.records.size(), 12u);
    std::ostringstream os;
    write_sweep_csv(os, r);
    const std::string csv = os.str();
    EXPECT_EQ(csv.find("nan"), std::string::npos);
    EXPECT_EQ(csv.rfind("kappa_e[GHz],omega_in[GHz],F_in[photons/ns],F1_out/F_in", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
    ASSERT_TRUE(r.argmax.has_value());
    ASSERT_EQ(r.refined.size(), 2u);
    EXPECT_GE(r.refined_ratio1, r.records[*r.argmax].flux.ratio1());
}

TEST(Sweep, FailuresBecomeErrorRows) {
    Scenario s = parse_scenario(small_sweep);
    s.solver.n_lev = 3;  // excludes the |g01>/|g30> pair
    const SweepResult r = run_sweep(s, 1);
    std::ostringstream os;
    write_sweep_csv(os, r);
    for (const auto& rec : r.records) {
        EXPECT_FALSE(rec.ok);
        EXPECT_FALSE(rec.reason.empty());
    }
    EXPECT_NE(os.str().find(",error,"), std::string::npos);
    EXPECT_EQ(os.str().find("nan"), std::string::npos);
}

TEST(Sweep, DeterministicAndWorkerCountIndependent) {
    const Scenario s = parse_scenario(small_sweep);
    auto csv = [&](unsigned w) {
        std::ostringstream os;
        write_sweep_csv(os, run_sweep(s, w));
        return os.str();
    };
    const std::string a = csv(1);
    EXPECT_EQ(a, csv(1));
    EXPECT_EQ(a, csv(3));
}

TEST(Sweep, DerivedQualityFactorAndLifetime) {
    Scenario s = parse_scenario(small_sweep);
    apply_parameter(s, "kappa_i", 92.9e-6);
    apply_parameter(s, "gamma", 5.55e-3);
    const SweepRecord r = evaluate_record(s);
    ASSERT_TRUE(r.Q_i && r.T_1);
    EXPECT_NEAR(*r.Q_i, 3.23e4, 0.01 * 3.23e4);
    EXPECT_NEAR(*r.T_1, 28.7, 0.01 * 28.7);
}

TEST(Sweep, FindCrossingAndPeaks) {
    EXPECT_NEAR(find_crossing([](double x) { return x * x; }, 0.0, 3.0, 2.0), std::sqrt(2.0), 1e-8);
    EXPECT_THROW(find_crossing([](double x) { return x * x; }, 2.0, 3.0, 2.0), std::domain_error);
    const auto peaks = local_maxima({0, 1, 0, 3, 0, 2, 0});
    ASSERT_EQ(peaks.size(), 3u);
    EXPECT_EQ(peaks[0], 3u);
}

TEST(Commands, SweepWritesCsvMetaAndPlot) {
    const auto dir = std::filesystem::temp_directory_path() / "tpdc_cmd_sweep";
    std::filesystem::remove_all(dir);
    const Scenario s = parse_scenario(small_sweep);
    cmd_sweep(s, {dir.string(), 1});
    EXPECT_TRUE(std::filesystem::exists(dir / "t.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "t.gp"));
    const auto meta = nlohmann::json::parse(slurp(dir / "t.meta.json"));
    EXPECT_EQ(meta["command"], "sweep");
    EXPECT_EQ(meta["config"]["schema_version"], 1);
    EXPECT_TRUE(meta["summary"].contains("refined_argmax"));
    const std::string first = slurp(dir / "t.csv");
    cmd_sweep(s, {dir.string(), 2});
    EXPECT_EQ(first, slurp(dir / "t.csv"));
}

TEST(Commands, AnticrossOptimumRows) {
    const auto dir = std::filesystem::temp_directory_path() / "tpdc_cmd_anticross";
    std::filesystem::remove_all(dir);
    Scenario s = parse_scenario(R"({"schema_version": 1,
        "anticross": {"window": [9.3, 11.2], "g_list": [0.15, 0.3, 1.0]}, "output": {"stem": "a"}})");
    const auto summary = cmd_anticross(s, {dir.string(), 1});
    ASSERT_EQ(summary["optimum"].size(), 3u);
    EXPECT_NEAR(summary["optimum"][1]["omega_q_opt"].get<double>(), 10.72, 10.72e-3);
    EXPECT_NEAR(summary["optimum"][2]["omega_q_opt"].get<double>(), 9.735, 9.735e-3);
    const double ratio = summary["optimum"][1]["g_eff_khz"].get<double>() / summary["optimum"][0]["g_eff_khz"].get<double>();
    EXPECT_NEAR(ratio, 16.0, 0.8);
}

TEST(Commands, SaturationOnsetColumnAndOrdering) {
    Scenario s = parse_scenario(R"({"schema_version": 1, "system": {"omega_q": 10.72, "g": 0.3},
        "bath": {"kappa_e": 0.000255}, "drive": {"omega_in": 8.9456}, "solver": {"n_lev": 12},
        "saturation": {"points": 7}})");
    const auto curves = saturation_curves(s, 1);
    ASSERT_EQ(curves.size(), 4u);
    const double ke = s.bath.rate(ChannelId::ext1);
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const double dw = curves[c].detuning * ke;
        EXPECT_DOUBLE_EQ(curves[c].onset, (0.25 * ke * ke + dw * dw) / (10.0 * ke));
        if (c > 0) EXPECT_GT(curves[c].onset, curves[c - 1].onset);
        ASSERT_EQ(curves[c].method.size(), curves[c].flux.size());
        for (std::size_t k = 1; k < curves[c].flux.size(); ++k)
            EXPECT_LE(curves[c].flux[k].efficiency(), curves[c].flux[k - 1].efficiency() + 1e-12);
        for (const auto& f : curves[c].flux) EXPECT_TRUE(f.converged);
    }
    // the top of the detuned curves lies past the radius of convergence of the series
    EXPECT_EQ(curves[2].method.front(), "perturbative");
    EXPECT_EQ(curves[2].method.back(), "harmonic");
}
