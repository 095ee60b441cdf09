#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ngf/driver.hpp"

using namespace ngf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ngf_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Config, DefaultsMatchStudySetup) {
    const RunConfig c = parse_config_string("");
    EXPECT_EQ(c.n, 12);
    EXPECT_EQ(c.J, 1000);
    EXPECT_EQ(c.K, 1000);
    EXPECT_EQ(c.T, 4.0);
    EXPECT_EQ(c.epsilon, 1e-3);
    EXPECT_EQ(c.domain_lo, -10.0);
    EXPECT_EQ(c.domain_hi, 20.0);
    EXPECT_EQ(c.param_count, 101);
    EXPECT_EQ(c.resample, ResamplePolicy::per_step);
    EXPECT_EQ(c.pairing, Pairing::paper);
}

TEST(Config, UnknownKeyIsNamed) {
    try {
        parse_config_string("epsilonn = 1e-3\n");
        FAIL();
    } catch (const ConfigErrors& e) {
        ASSERT_EQ(e.problems().size(), 1u);
        EXPECT_NE(e.problems()[0].find("epsilonn"), std::string::npos);
    }
}

TEST(Config, EveryViolationListed) {
    try {
        parse_config_string("n = 0\nJ = -3\nepsilon = 0\nscheme = rk3\nK = 1\nK = 2\n");
        FAIL();
    } catch (const ConfigErrors& e) {
        const std::string all = e.what();
        for (const char* key : {"n:", "J:", "epsilon:", "scheme", "duplicate key 'K'"})
            EXPECT_NE(all.find(key), std::string::npos) << key << " missing from: " << all;
    }
}

TEST(Config, ZeroStepsOnlyForFilter) {
    EXPECT_NO_THROW(parse_config_string("K = 0\n"));
    EXPECT_THROW(parse_config_string("mode = forward\nK = 0\n"), ConfigErrors);
}

TEST(Config, EmitParseRoundTrip) {
    for (const auto& name : preset_names()) {
        const RunConfig c = preset(name);
        const std::string text = emit_config(c);
        EXPECT_EQ(emit_config(parse_config_string(text)), text) << name;
    }
    RunConfig odd;
    odd.epsilon = 0.1 + 0.2;
    odd.snapshot_times = {0.0, 1.0 / 3.0};
    odd.seed = 12345678901234ULL;
    EXPECT_EQ(parse_config_string(emit_config(odd)).epsilon, odd.epsilon);
    EXPECT_EQ(parse_config_string(emit_config(odd)).snapshot_times, odd.snapshot_times);
    EXPECT_EQ(parse_config_string(emit_config(odd)).seed, odd.seed);
}

TEST(Config, PresetsValidate) {
    ASSERT_EQ(preset_names().size(), 4u);
    for (const auto& name : preset_names()) EXPECT_TRUE(validate(preset(name)).empty()) << name;
    const auto mv = preset("paper-m10-moving");
    EXPECT_EQ(mv.sensor_kind, SensorKind::moving_interval);
    EXPECT_EQ(mv.sensor_m, 10);
    EXPECT_EQ(mv.sensor_lo1, 4.0);
    EXPECT_EQ(mv.sensor_hi1, 6.0);
    EXPECT_EQ(preset("paper-m10-support").sensor_hi0, 0.0);
    EXPECT_EQ(preset("paper-m100").sensor_m, 100);
    EXPECT_THROW(preset("paper-m7"), ConfigErrors);
}

TEST(Config, SeedFromEnvironment) {
    RunConfig c;
    ::setenv("NGF_SEED", "17", 1);
    apply_environment(c);
    EXPECT_EQ(c.seed, 17u);
    ::setenv("NGF_SEED", "-2", 1);
    EXPECT_THROW(apply_environment(c), ConfigErrors);
    ::unsetenv("NGF_SEED");
}

TEST(Driver, FitOnlyWritesReport) {
    RunConfig c;
    c.mode = RunMode::fit_only;
    c.fit_restarts = 2;
    c.output_dir = scratch("fit").string();
    const auto res = run(c);
    ASSERT_TRUE(res.fit);
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "fit_report.csv"));
    std::ifstream th(fs::path(c.output_dir) / "theta0.csv");
    EXPECT_EQ(read_csv(th, NetworkConfig(12, 1)).data(), res.fit->theta.data());
    const auto manifest = slurp(fs::path(c.output_dir) / "manifest.txt");
    EXPECT_EQ(emit_config(parse_config_string(manifest)), emit_config(c));
}

TEST(Driver, ShortFilterRunAndDiagnose) {
    RunConfig c = preset("paper-m100");
    c.truth = TruthKind::soliton;
    c.u0 = InitialCondition::soliton;
    c.u0_a1 = 0.0;
    c.T = 0.04;
    c.K = 10;
    c.J = 300;
    c.snapshot_times = {0.0, 0.04};
    c.output_dir = scratch("filter").string();
    const auto res = run(c);
    ASSERT_TRUE(res.filter);
    EXPECT_EQ(res.filter->records.size(), 11u);
    for (const char* f : {"trajectory.csv", "snapshots.csv", "eigenfractions.csv", "spectrum.csv", "observations.csv"})
        EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f)) << f;
    std::ifstream in(fs::path(c.output_dir) / "trajectory.csv");
    const auto summary = diagnose_trajectory(csv::read(in));
    EXPECT_EQ(summary.front().second, 11.0);
}

TEST(Driver, ForwardRunWritesTrajectory) {
    RunConfig c;
    c.mode = RunMode::forward;
    c.truth = TruthKind::soliton;
    c.u0 = InitialCondition::soliton;
    c.u0_a1 = 0.0;
    c.T = 0.02;
    c.K = 5;
    c.J = 200;
    c.fit_restarts = 1;
    c.snapshot_times = {0.0, 0.02};
    c.output_dir = scratch("forward").string();
    const auto res = run(c);
    ASSERT_TRUE(res.forward);
    EXPECT_TRUE(res.forward->completed);
    std::ifstream in(fs::path(c.output_dir) / "trajectory.csv");
    EXPECT_EQ(csv::read(in).rows.size(), 6u);
}
