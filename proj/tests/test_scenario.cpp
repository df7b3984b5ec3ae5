#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "levirotor/scenario/commands.hpp"

using namespace levirotor;
using namespace levirotor::scenario;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("levirotor_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

ScenarioConfig with_overrides(const ScenarioConfig& base, const std::vector<std::string>& overrides)
{
    YAML::Node root(YAML::NodeType::Map);
    for (const auto& o : overrides) apply_override(root, o);
    ScenarioConfig c = parse_config(root, base);
    validate(c);
    return c;
}

}  // namespace

TEST(Units, PrefixesAndCompounds)
{
    EXPECT_DOUBLE_EQ(parse_quantity("0.35 mm", Quantity::length), 0.35e-3);
    EXPECT_DOUBLE_EQ(parse_quantity("2 us", Quantity::time), 2e-6);
    EXPECT_DOUBLE_EQ(parse_quantity("2 \xC2\xB5s", Quantity::time), 2e-6);
    EXPECT_DOUBLE_EQ(parse_quantity("200 e", Quantity::charge), 200 * elementary_charge);
    EXPECT_DOUBLE_EQ(parse_quantity("1e6 amu", Quantity::mass), 1e6 * atomic_mass_unit);
    EXPECT_DOUBLE_EQ(parse_quantity("3 e nm", Quantity::dipole), 3 * elementary_charge * 1e-9);
    EXPECT_DOUBLE_EQ(parse_quantity("2.8e-38 kg m^2", Quantity::inertia), 2.8e-38);
    EXPECT_DOUBLE_EQ(parse_quantity("5 V/m", Quantity::field), 5.0);
    EXPECT_DOUBLE_EQ(parse_quantity("11.15 MOhm", Quantity::resistance), 11.15e6);
    EXPECT_DOUBLE_EQ(parse_quantity("1.794 nF", Quantity::capacitance), 1.794e-9);
    EXPECT_DOUBLE_EQ(parse_quantity("90 deg", Quantity::angle), pi / 2);
    EXPECT_DOUBLE_EQ(parse_quantity("42", Quantity::voltage), 42.0);
}

TEST(Units, HertzMeansCyclesForAngularFrequencies)
{
    EXPECT_DOUBLE_EQ(parse_quantity("75 MHz", Quantity::angular_frequency), two_pi * 75e6);
    EXPECT_DOUBLE_EQ(parse_quantity("1000 rad/s", Quantity::angular_frequency), 1000.0);
    EXPECT_DOUBLE_EQ(parse_quantity("44.5 Hz", Quantity::rate), 44.5);
    EXPECT_DOUBLE_EQ(parse_quantity("44.5 1/s", Quantity::rate), 44.5);
}

TEST(Units, RejectsWrongDimensionAndGarbage)
{
    EXPECT_THROW(parse_quantity("3 V", Quantity::length), ConfigError);
    EXPECT_THROW(parse_quantity("3 parsec", Quantity::length), ConfigError);
    EXPECT_THROW(parse_quantity("fast", Quantity::time), ConfigError);
    EXPECT_THROW(parse_quantity("1 m/s/s", Quantity::length), ConfigError);
}

TEST(Units, FormatRoundTripsExactly)
{
    for (double v : {1.0 / 3.0, 2.8e-38, two_pi * 75e6, -7.60649e-11})
        EXPECT_EQ(parse_quantity(format_quantity(v, Quantity::length), Quantity::length), v);
}

TEST(Config, UnknownKeyNamesTheField)
{
    try {
        load_config("trap:\n  type: ring\n  U_acc: 3 V\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("trap.U_acc"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_config("durations: 1 s\n"), ConfigError);
    EXPECT_THROW(load_config("mode: sideways\n"), ConfigError);
}

TEST(Config, ValidationNamesTheField)
{
    try {
        with_overrides(preset_fig5(), {"circuit.R=-5"});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("circuit", 0), 0u) << e.what();
    }
    EXPECT_THROW(with_overrides(preset_fig2(), {"duration=-1 s"}), ConfigError);
    EXPECT_THROW(with_overrides(preset_fig2(), {"stride=0"}), ConfigError);
}

TEST(Config, PresetsRoundTripThroughYaml)
{
    for (const auto& p : preset_list()) {
        const ScenarioConfig c = preset(p.name);
        const std::string text = serialize(c);
        const ScenarioConfig back = load_config(text);
        EXPECT_EQ(serialize(back), text) << p.name;
        EXPECT_EQ(config_hash(back), config_hash(c)) << p.name;
        EXPECT_EQ(back.system.particle.mass, c.system.particle.mass);
        EXPECT_EQ(back.system.trap.omega_ac, c.system.trap.omega_ac);
        EXPECT_EQ(back.schedule.size(), c.schedule.size());
    }
    EXPECT_THROW(preset("fig9"), ConfigError);
}

TEST(Config, OverridesAndPartialScheduleEntries)
{
    const ScenarioConfig c = with_overrides(preset_fig2(), {"duration=2us", "trap.U_ac=500 V", "initial.R=[0, 0, 1 nm]"});
    EXPECT_DOUBLE_EQ(c.duration, 2e-6);
    EXPECT_DOUBLE_EQ(c.system.trap.U_ac, 500.0);
    EXPECT_DOUBLE_EQ(c.initial.R.z(), 1e-9);
    EXPECT_EQ(c.system.particle.mass, preset_fig2().system.particle.mass);
    EXPECT_NE(config_hash(c), config_hash(preset_fig2()));
    EXPECT_THROW(with_overrides(preset_fig2(), {"novalue"}), ConfigError);

    // A schedule entry that only changes R keeps the previous L and C.
    const ScenarioConfig s = load_config(serialize(preset_fig5()) + "");
    YAML::Node root = YAML::Load(serialize(preset_fig5()));
    root["schedule"][1]["circuit"] = YAML::Load("{R: 3 MOhm}");
    const ScenarioConfig m = parse_config(root);
    ASSERT_EQ(m.schedule.size(), 2u);
    EXPECT_DOUBLE_EQ(m.schedule[1].circuit->R, 3e6);
    EXPECT_DOUBLE_EQ(m.schedule[1].circuit->C, 10e-9);
    EXPECT_EQ(s.schedule.size(), 2u);
}

TEST(Config, HashIsStableAndSensitive)
{
    EXPECT_EQ(config_hash(preset_fig4()), config_hash(preset_fig4()));
    EXPECT_EQ(config_hash(preset_fig4()).size(), 16u);
    ScenarioConfig c = preset_fig4();
    c.seed += 1;
    EXPECT_NE(config_hash(c), config_hash(preset_fig4()));
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, SymmetricSpecExtraction)
{
    const ScenarioConfig c = preset_fig5();
    const SymmetricParticleSpec s = symmetric_spec(c.system.particle);
    const double q = 1e5 * elementary_charge, ell = 2500e-9;
    EXPECT_DOUBLE_EQ(s.q, q);
    EXPECT_NEAR(s.p3, 0.1 * q * ell, 1e-12 * q * ell);
    EXPECT_NEAR(s.Q3, 0.15 * q * ell * ell, 1e-12 * q * ell * ell);
    EXPECT_THROW(symmetric_spec(preset_fig2().system.particle), ConfigError);
}

TEST(Commands, ZeroDurationWritesHeaderAndInitialRow)
{
    const auto dir = fresh_dir("zero");
    ScenarioConfig c = with_overrides(preset_fig2(), {"duration=0 s"});
    RunContext ctx{"simulate", dir, 1};
    EXPECT_EQ(run_command("simulate", c, ctx), exit_ok);
    const std::string text = slurp(dir / "trajectory_exact.csv");
    EXPECT_EQ(text.rfind("# format_version: 1\n", 0), 0u);
    EXPECT_NE(text.find("# config_hash: " + config_hash(c)), std::string::npos);
    std::istringstream in(text);
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') ++rows;
    EXPECT_EQ(rows, 2);  // column line plus t = 0
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["config_hash"], config_hash(c));
    EXPECT_EQ(manifest["files"].size(), 2u);
}

TEST(Commands, SameSeedGivesIdenticalBytes)
{
    ScenarioConfig c = with_overrides(preset_fig4(), {"duration=5e-6 s", "ensemble=3", "stride=8"});
    const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b"), d = fresh_dir("seed_c");
    run_command("simulate", c, {"simulate", a, 1});
    run_command("simulate", c, {"simulate", b, 3});
    for (const char* f : {"trajectory_stochastic_000.csv", "trajectory_stochastic_002.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_NE(slurp(a / "trajectory_stochastic_000.csv"), slurp(a / "trajectory_stochastic_001.csv"));
    c.seed = 99;
    run_command("simulate", c, {"simulate", d, 1});
    EXPECT_NE(slurp(a / "trajectory_stochastic_000.csv").substr(200), slurp(d / "trajectory_stochastic_000.csv").substr(200));
}

TEST(Commands, EscapeIsReportedWithPartialOutput)
{
    const auto dir = fresh_dir("escape");
    ScenarioConfig c = with_overrides(preset_fig6(), {"mode=effective", "duration=50 us", "integrator.escape_radius=1e-9"});
    EXPECT_EQ(run_command("simulate", c, {"simulate", dir, 1}), exit_unstable);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["status"], "escaped");
    EXPECT_GT(manifest["failure"]["time"].get<double>(), 0.0);
    EXPECT_GT(slurp(dir / "trajectory_effective.csv").size(), 0u);
}

TEST(Commands, Fig5SpectrumPeaksNearTheCircuitFrequency)
{
    const auto dir = fresh_dir("psd");
    const ScenarioConfig c = preset_fig5();
    RunContext ctx{"psd", dir, 1};
    const std::vector<LinearStage> stages = linear_stages(c);
    ASSERT_EQ(stages.size(), 3u);
    EXPECT_DOUBLE_EQ(stages[1].duration, 45.0);
    EXPECT_DOUBLE_EQ(stages[2].duration, 75.0);
    const LinearModel& cm = stages[1].model;
    const double peak = psd_peak(cm, iz, 0.5 * cm.omega_z, 1.5 * cm.omega_z) / two_pi;
    EXPECT_NEAR(peak, 2117.0, 0.005 * 2117.0);
    ScenarioConfig quick = with_overrides(c, {"psd.points=11", "psd.duration=0 s"});
    EXPECT_EQ(run_command("psd", quick, ctx), exit_ok);
    EXPECT_NE(slurp(dir / "psd.csv").find("stage1_peak_z: 2120"), std::string::npos);
}

TEST(Commands, LinearCoolingOutputsAndUnstableModel)
{
    const auto dir = fresh_dir("cool");
    const ScenarioConfig c = with_overrides(preset_fig5(), {"duration=0.05 s"});
    EXPECT_EQ(run_command("cool", c, {"cool", dir, 1}), exit_ok);
    const std::string text = slurp(dir / "cooling.csv");
    EXPECT_NE(text.find("t,z,beta,Q,p,p_beta,Phi,E_z,E_beta,E_z_avg,E_beta_avg"), std::string::npos);
    EXPECT_THROW(run_command("cool", preset_fig2(), {"cool", dir, 1}), ConfigError);

    ScenarioConfig bad = with_overrides(preset_fig5(), {"trap.endcap.U_ec=-50 V"});
    EXPECT_THROW(run_command("cool", bad, {"cool", fresh_dir("cool_bad"), 1}), InstabilityError);
}

TEST(Commands, RatesAndPseudopotentialFiles)
{
    const auto dir = fresh_dir("rates");
    EXPECT_EQ(run_command("rates", preset_fig5(), {"rates", dir, 1}), exit_ok);
    EXPECT_TRUE(std::filesystem::exists(dir / "rates.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "tensors.csv"));
    const auto pdir = fresh_dir("pseudo");
    EXPECT_EQ(run_command("pseudopotential", preset_fig2(), {"pseudopotential", pdir, 1}), exit_ok);
    const std::string minima = slurp(pdir / "minima.csv");
    EXPECT_NE(minima.find("mathieu_max"), std::string::npos);
    EXPECT_NE(minima.find("secular_frequency_z"), std::string::npos);
}

TEST(Commands, PresetsListAndFiles)
{
    const auto dir = fresh_dir("presets");
    std::ostringstream os;
    EXPECT_EQ(cmd_presets({"presets", dir, 1}, os, true), exit_ok);
    for (const auto& p : preset_list()) {
        EXPECT_NE(os.str().find(p.name), std::string::npos);
        EXPECT_EQ(serialize(load_config(slurp(dir / (std::string(p.name) + ".yaml")))), serialize(preset(p.name)));
    }
}
