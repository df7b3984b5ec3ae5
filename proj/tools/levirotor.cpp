#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levirotor/scenario/commands.hpp"

namespace ls = levirotor::scenario;

namespace {

struct Options {
    std::string config;
    std::string preset;
    std::vector<std::string> overrides;
    long long seed = -1;
    unsigned jobs = 0;
    std::string out;
};

ls::ScenarioConfig resolve(const Options& o)
{
    ls::ScenarioConfig base = o.preset.empty() ? ls::ScenarioConfig{} : ls::preset(o.preset);
    YAML::Node root = o.config.empty() ? YAML::Node(YAML::NodeType::Map) : ls::load_yaml_file(o.config);
    if (!root.IsMap()) throw levirotor::ConfigError("config: expected a mapping at the top level");
    for (const auto& a : o.overrides) ls::apply_override(root, a);
    ls::ScenarioConfig cfg = ls::parse_config(root, base);
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    ls::validate(cfg);
    return cfg;
}

std::filesystem::path output_dir(const Options& o)
{
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("LEVIROTOR_OUT"); env && *env) return env;
    return "levirotor_out";
}

void add_scenario_options(CLI::App* sub, Options& o)
{
    sub->add_option("--config", o.config, "YAML scenario file");
    sub->add_option("--preset", o.preset, "start from a named preset (see 'presets')");
    sub->add_option("--override", o.overrides, "key.path=value, applied after the config file")->take_all();
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)");
    sub->add_option("--out", o.out, "output directory (default: $LEVIROTOR_OUT or ./levirotor_out)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Levitated rotor simulations: trajectories, cooling, rates and spectra"};
    app.require_subcommand(1);
    Options opt;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "integrate trajectories (exact, effective, stochastic or both)"},
        {"cool", "linearized feedback-free cooling run with a switching schedule"},
        {"rates", "circuit damping rate and effective resistance versus frequency"},
        {"pseudopotential", "effective-potential cuts, minima and stability report"},
        {"psd", "analytic power spectral densities of the linear model"},
    };
    for (const auto& [name, help] : commands) add_scenario_options(app.add_subcommand(name, help), opt);
    CLI::App* presets = app.add_subcommand("presets", "list presets; with --out, also write their YAML");
    presets->add_option("--out", opt.out, "directory for the preset YAML files");

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        ls::RunContext ctx;
        ctx.command = command;
        ctx.jobs = opt.jobs ? opt.jobs : levirotor::default_jobs();
        if (command == "presets") {
            ctx.out_dir = opt.out;
            return ls::cmd_presets(ctx, std::cout, !opt.out.empty());
        }
        const ls::ScenarioConfig cfg = resolve(opt);
        ctx.out_dir = output_dir(opt);
        const int code = ls::run_command(command, cfg, ctx);
        std::cout << command << ": wrote " << ctx.out_dir.string() << "\n";
        return code;
    } catch (const levirotor::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ls::exit_config;
    } catch (const ls::InstabilityError& e) {
        std::cerr << "unstable: " << e.what() << "\n";
        return ls::exit_unstable;
    } catch (const levirotor::EscapeError& e) {
        std::cerr << "escape at t = " << e.time() << " s: " << e.what() << "\n";
        return ls::exit_unstable;
    } catch (const levirotor::NumericalError& e) {
        std::cerr << "numerical failure at t = " << e.time() << " s: " << e.what() << "\n";
        return ls::exit_numerical;
    } catch (const levirotor::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ls::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ls::exit_numerical;
    }
}
