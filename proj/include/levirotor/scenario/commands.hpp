#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "../analysis.hpp"
#include "../equilibrium.hpp"
#include "../linear_cooling.hpp"
#include "../parallel.hpp"
#include "config.hpp"
#include "presets.hpp"

namespace levirotor::scenario {

inline constexpr int format_version = 1;
inline constexpr const char* library_version = "1.0.0";

enum ExitCode { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_unstable = 4 };

// Linear model with a drift matrix that is not Hurwitz, or a trap that cannot hold the particle.
class InstabilityError : public Error {
public:
    using Error::Error;
};

struct RunContext {
    std::string command;
    std::filesystem::path out_dir;
    unsigned jobs = 1;
};

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV with a commented "# key: value" header block.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& header,
              const std::vector<std::string>& columns)
        : out_(path), columns_(columns.size())
    {
        if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
        for (const auto& [k, v] : header) out_ << "# " << k << ": " << v << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values)
    {
        if (values.size() != columns_) throw Error("CSV row has the wrong number of columns");
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += format_double(values[i]);
        }
        line += '\n';
        out_ << line;
    }

private:
    std::ofstream out_;
    std::size_t columns_;
};

class Manifest {
public:
    Manifest(const RunContext& ctx, const ScenarioConfig& cfg)
    {
        doc_["format_version"] = format_version;
        doc_["library_version"] = library_version;
        doc_["command"] = ctx.command;
        doc_["scenario"] = cfg.name;
        doc_["config_hash"] = config_hash(cfg);
        doc_["seed"] = cfg.seed;
        doc_["jobs"] = ctx.jobs;
        doc_["config"] = serialize(cfg);
        doc_["files"] = nlohmann::json::array();
        doc_["status"] = "ok";
    }

    void add_file(const std::string& name)
    {
        std::lock_guard<std::mutex> lock(mutex_);
        doc_["files"].push_back(name);
    }
    void set(const std::string& key, const nlohmann::json& v) { doc_[key] = v; }
    void failure(const std::string& status, const std::string& message, double time)
    {
        doc_["status"] = status;
        doc_["failure"] = {{"message", message}, {"time", time}};
    }
    void write(const std::filesystem::path& dir) const
    {
        std::ofstream out(dir / "manifest.json");
        out << doc_.dump(2) << "\n";
    }

private:
    nlohmann::json doc_;
    std::mutex mutex_;
};

inline std::vector<std::pair<std::string, std::string>> csv_header(const RunContext& ctx, const ScenarioConfig& cfg)
{
    return {{"format_version", std::to_string(format_version)},
            {"command", ctx.command},
            {"scenario", cfg.name},
            {"config_hash", config_hash(cfg)},
            {"seed", std::to_string(cfg.seed)}};
}

// Macromotion-state initial condition from the config.
inline SystemState initial_state(const ScenarioConfig& cfg)
{
    SystemState s;
    s.R = cfg.initial.R;
    s.P = cfg.initial.P;
    s.set_orientation(Orientation::from_euler(cfg.initial.euler(0), cfg.initial.euler(1), cfg.initial.euler(2)));
    s.J = cfg.initial.J;
    s.Q = cfg.initial.Q;
    s.Phi = cfg.initial.Phi;
    return s;
}

inline const std::vector<std::string>& trajectory_columns()
{
    static const std::vector<std::string> c = {"t",     "R_x",   "R_y",   "R_z",  "P_x", "P_y", "P_z", "alpha", "beta",
                                               "gamma", "J_x",   "J_y",   "J_z",  "Q",   "Phi", "energy"};
    return c;
}

inline std::vector<double> trajectory_row(const SystemState& s, double energy)
{
    const Orientation o = s.orientation();
    return {s.t,       s.R.x(),   s.R.y(),   s.R.z(), s.P.x(), s.P.y(), s.P.z(), o.alpha(),
            o.beta(),  o.gamma(), s.J.x(),   s.J.y(), s.J.z(), s.Q,     s.Phi,   energy};
}

struct TrajectoryOutcome {
    std::string status = "ok";
    std::string message;
    double failure_time = 0.0;
};

// Runs one trajectory, streaming every `stride`-th state to `path`.
inline TrajectoryOutcome run_to_csv(const ScenarioConfig& cfg, const RunContext& ctx, Mode mode, std::uint64_t seed,
                                    const std::filesystem::path& path)
{
    IntegratorConfig ic = cfg.integrator;
    ic.seed = seed;
    Integrator integ(cfg.system, ic, mode);
    SystemState s = initial_state(cfg);
    if (mode != Mode::effective && cfg.initial.micromotion) s = exact_from_macromotion(cfg.system, s);
    auto header = csv_header(ctx, cfg);
    header.emplace_back("mode", to_string(mode));
    header.emplace_back("member_seed", std::to_string(seed));
    header.emplace_back("dt", format_double(integ.dt()));
    CsvWriter csv(path, header, trajectory_columns());
    const long steps = step_count(cfg.duration, integ.dt());
    TrajectoryOutcome outcome;
    try {
        run_with_observer(s, integ, steps, [&](long k, const SystemState& st) {
            if (k % cfg.stride == 0) csv.row(trajectory_row(st, integ.energy(st)));
        });
    } catch (const EscapeError& e) {
        outcome = {"escaped", e.what(), e.time()};
    } catch (const NumericalError& e) {
        outcome = {"numerical_failure", e.what(), e.time()};
    }
    return outcome;
}

// Linear-model stages: base system until the first switch, then each entry.
inline std::vector<LinearStage> linear_stages(const ScenarioConfig& cfg)
{
    const System& sys = cfg.system;
    if (!sys.circuit) throw ConfigError("circuit: the linear model needs a circuit");
    const auto* lp = std::get_if<LinearPickup>(&sys.circuit->pickup);
    if (!lp) throw ConfigError("pickup: the linear model needs a linear pick-up");
    const SymmetricParticleSpec spec = symmetric_spec(sys.particle);
    auto model_for = [&](const CircuitSpec& c, const GasCoupling& g) {
        if (!sys.trap.endcap) throw ConfigError("trap.endcap: the linear model needs endcaps");
        if (c.topology != Topology::parallel) throw ConfigError("circuit.topology: the linear model needs parallel");
        try {
            return build_model(sys.trap, *lp, spec, sys.particle.mass, c, g);
        } catch (const DomainError& e) {
            throw InstabilityError(std::string("linear model: ") + e.what());
        }
    };
    std::vector<LinearStage> stages;
    CircuitSpec circuit = sys.circuit->circuit;
    GasCoupling gas = sys.gas.value_or(GasCoupling{});
    double t = 0.0;
    for (const auto& e : cfg.schedule) {
        const double end = std::min(e.at, cfg.duration);
        stages.push_back({model_for(circuit, gas), std::max(0.0, end - t)});
        t = std::max(t, end);
        if (e.circuit) circuit = *e.circuit;
        if (e.gas) gas = *e.gas;
    }
    stages.push_back({model_for(circuit, gas), std::max(0.0, cfg.duration - t)});
    for (std::size_t i = 0; i < stages.size(); ++i)
        if (!is_hurwitz(stages[i].model.B))
            throw InstabilityError("linear model of stage " + std::to_string(i) + " is not asymptotically stable");
    return stages;
}

inline Vec6 linear_initial_state(const ScenarioConfig& cfg, const std::vector<LinearStage>& stages)
{
    const LinearModel* first = &stages.front().model;
    for (const auto& s : stages)
        if (s.duration > 0.0) {
            first = &s.model;
            break;
        }
    if (cfg.initial.cooling)
        return cooling_initial_state(*first, first->T_gas, cfg.initial.cooling_Q, cfg.initial.cooling_flux_charge);
    Vec6 xi = Vec6::Zero();
    xi(iz) = cfg.initial.R.z();
    xi(ibeta) = cfg.initial.euler(1) - pi / 2;
    xi(iQ) = cfg.initial.Q;
    xi(ip) = cfg.initial.P.z();
    xi(iPhi) = cfg.initial.Phi;
    return xi;
}

// ---- commands ----

inline int cmd_cool(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest);

inline int cmd_simulate(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest)
{
    if (cfg.mode == RunMode::linear) return cmd_cool(cfg, ctx, manifest);
    struct Job {
        Mode mode;
        std::uint64_t seed;
        std::string file;
    };
    std::vector<Job> jobs;
    if (cfg.mode == RunMode::both) {
        jobs.push_back({Mode::exact, cfg.seed, "trajectory_exact.csv"});
        jobs.push_back({Mode::effective, cfg.seed, "trajectory_effective.csv"});
    } else {
        const Mode m = cfg.mode == RunMode::exact       ? Mode::exact
                       : cfg.mode == RunMode::effective ? Mode::effective
                                                        : Mode::stochastic;
        for (int i = 0; i < cfg.ensemble; ++i) {
            char name[64];
            if (cfg.ensemble == 1) std::snprintf(name, sizeof name, "trajectory_%s.csv", to_string(m));
            else std::snprintf(name, sizeof name, "trajectory_%s_%03d.csv", to_string(m), i);
            jobs.push_back({m, cfg.ensemble == 1 ? cfg.seed : member_seed(cfg.seed, i), name});
        }
    }
    std::vector<TrajectoryOutcome> outcomes(jobs.size());
    parallel_for(jobs.size(), ctx.jobs, [&](std::size_t i) {
        outcomes[i] = run_to_csv(cfg, ctx, jobs[i].mode, jobs[i].seed, ctx.out_dir / jobs[i].file);
    });
    int code = exit_ok;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        manifest.add_file(jobs[i].file);
        const auto& o = outcomes[i];
        if (o.status == "ok") continue;
        manifest.failure(o.status, jobs[i].file + ": " + o.message, o.failure_time);
        code = std::max(code, o.status == "escaped" ? int(exit_unstable) : int(exit_numerical));
    }
    return code;
}

inline int cmd_cool(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest)
{
    if (cfg.mode != RunMode::linear)
        throw ConfigError("mode: the cool command runs the linear model; set mode: linear");
    const std::vector<LinearStage> stages = linear_stages(cfg);
    const Vec6 xi0 = linear_initial_state(cfg, stages);
    const LinearSeries series = simulate_schedule(stages, xi0, cfg.linear.dt, cfg.seed, cfg.linear.stride);
    const LinearModel& m0 = stages.front().model;

    std::vector<double> Ez, Eb;
    Ez.reserve(series.states.size());
    Eb.reserve(series.states.size());
    for (const auto& x : series.states) {
        Ez.push_back(x(ip) * x(ip) / (2.0 * m0.m));
        Eb.push_back(x(ipbeta) * x(ipbeta) / (2.0 * m0.I1));
    }
    TimeSeries energies;
    energies.dt = series.dt;
    energies.labels = {"E_z", "E_beta"};
    energies.columns = {Ez, Eb};
    const double window = std::max(1.0, cfg.linear.average / series.dt);
    const auto span = static_cast<std::size_t>(std::ceil(window - 1e-9));
    const bool averaged = energies.size() >= span;
    TimeSeries avg;
    if (averaged) avg = moving_average(energies, window);

    auto header = csv_header(ctx, cfg);
    header.emplace_back("dt", format_double(cfg.linear.dt));
    header.emplace_back("stages", std::to_string(stages.size()));
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& m = stages[i].model;
        header.emplace_back("stage" + std::to_string(i),
                            "duration=" + format_double(stages[i].duration) + " s, omega_LC/2pi="
                                + format_double(m.omega_LC / two_pi) + " Hz, T_z="
                                + format_double(effective_temperature(m, LinearMode::z)) + " K, T_beta="
                                + format_double(effective_temperature(m, LinearMode::beta)) + " K");
    }
    header.emplace_back("average_window", format_double(window * series.dt) + " s (trailing)");
    CsvWriter csv(ctx.out_dir / "cooling.csv", header,
                  {"t", "z", "beta", "Q", "p", "p_beta", "Phi", "E_z", "E_beta", "E_z_avg", "E_beta_avg"});
    for (std::size_t k = 0; k < series.states.size(); ++k) {
        const Vec6& x = series.states[k];
        double az = std::nan(""), ab = std::nan("");
        if (averaged && k + 1 >= span) {
            az = avg.columns[0][k + 1 - span];
            ab = avg.columns[1][k + 1 - span];
        }
        csv.row({series.time(k), x(iz), x(ibeta) + pi / 2, x(iQ), x(ip), x(ipbeta), x(iPhi), Ez[k], Eb[k], az, ab});
    }
    manifest.add_file("cooling.csv");
    return exit_ok;
}

inline int cmd_rates(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest)
{
    const System& sys = cfg.system;
    if (!sys.circuit) throw ConfigError("circuit: the rates command needs a circuit");
    const CircuitSpec& c = sys.circuit->circuit;
    const double wmax = cfg.rates.omega_max > 0.0 ? cfg.rates.omega_max : 3.0 * c.omega_LC();
    const double wmin = cfg.rates.omega_min;
    if (!(wmax > wmin)) throw ConfigError("rates: omega_max must exceed omega_min");
    const SystemState s0 = initial_state(cfg);
    const Mat3 frame = s0.body_frame();
    const double q = sys.particle.charges.q, m = sys.particle.mass;

    auto header = csv_header(ctx, cfg);
    header.emplace_back("omega_LC", format_double(c.omega_LC()) + " rad/s");
    header.emplace_back("contraction_rate", format_double(adiabatic_contraction_rate(sys.circuit->pickup, sys.particle,
                                                                                     s0.R, frame, c.R))
                                                + " 1/s (quasi-adiabatic, series, initial state)");
    const auto* lp = std::get_if<LinearPickup>(&sys.circuit->pickup);
    if (lp) {
        const double g0 = c.R * q * q * lp->k1 * lp->k1 / (m * lp->z0 * lp->z0);
        header.emplace_back("rate_scale_R_q2_k2_over_m_z02", format_double(g0) + " 1/s");
    }
    CsvWriter csv(ctx.out_dir / "rates.csv", header, {"omega", "R_eff", "Gamma"});
    for (int i = 0; i < cfg.rates.points; ++i) {
        const double w = wmin + (wmax - wmin) * i / (cfg.rates.points - 1);
        const double re = effective_resistance(c, w);
        const double gamma = lp ? damping_rate_vs_frequency(c, *lp, q, m, w) : std::nan("");
        csv.row({w, re, gamma});
    }
    manifest.add_file("rates.csv");

    // Friction and diffusion tensors at the initial state, evaluated at the circuit frequency.
    const FrictionDiffusion fd = friction_diffusion_tensors(c, sys.circuit->pickup, sys.particle, s0.R, frame,
                                                            cfg.rates.omega_max > 0.0 ? wmax : c.omega_LC());
    CsvWriter t(ctx.out_dir / "tensors.csv", csv_header(ctx, cfg), {"tensor", "row", "c0", "c1", "c2"});
    const std::pair<const char*, const Mat3*> tensors[] = {
        {"Gamma_cm", &fd.Gamma_cm}, {"Gamma_rot", &fd.Gamma_rot}, {"D_cm", &fd.D_cm}, {"D_rot", &fd.D_rot}};
    int id = 0;
    for (const auto& [name, M] : tensors) {
        (void)name;
        for (int r = 0; r < 3; ++r) t.row({double(id), double(r), (*M)(r, 0), (*M)(r, 1), (*M)(r, 2)});
        ++id;
    }
    manifest.add_file("tensors.csv");
    manifest.set("tensor_ids", {"Gamma_cm", "Gamma_rot", "D_cm", "D_rot"});
    return exit_ok;
}

inline int cmd_pseudopotential(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest)
{
    const System& sys = cfg.system;
    const SystemState s0 = initial_state(cfg);
    const Mat3 frame0 = s0.body_frame();
    const double extent = cfg.pseudopotential.extent > 0.0 ? cfg.pseudopotential.extent : 1e-3 * sys.trap.ell0;

    CsvWriter grid(ctx.out_dir / "potential.csv", csv_header(ctx, cfg), {"axis", "offset", "V_eff"});
    for (int axis = 0; axis < 3; ++axis)
        for (int i = 0; i < cfg.pseudopotential.points; ++i) {
            const double off = -extent + 2.0 * extent * i / (cfg.pseudopotential.points - 1);
            Vec3 r = s0.R;
            r(axis) += off;
            grid.row({double(axis), off, effective_potential(sys.trap, sys.particle, r, frame0)});
        }
    manifest.add_file("potential.csv");

    MinimizerOptions opt;
    opt.length_scale = std::max(extent * 1e-2, 1e-12);
    opt.throw_on_failure = false;
    std::vector<StartPoint> starts{{s0.R, Orientation::from_matrix(frame0)}};
    for (const Vec3& e : {Vec3(0.0, 0.3, 0.0), Vec3(0.4, pi / 2 - 0.3, 0.2), Vec3(1.0, pi - 0.3, 0.5)})
        starts.push_back({Vec3::Zero(), Orientation::from_euler(e(0), e(1), e(2))});
    const auto minima = find_minima(sys.trap, sys.particle, starts, opt);
    auto header = csv_header(ctx, cfg);
    const MathieuParameters mp = mathieu_parameters(sys.trap, sys.particle, extent);
    header.emplace_back("mathieu_max", format_double(mp.max()) + (mp.warning() ? " (warning)" : ""));
    if (sys.trap.endcap && sys.particle.charges.q != 0.0) {
        const auto st = linear_trap_stability(sys.trap, sys.particle.charges.q, sys.particle.mass);
        header.emplace_back("kappa", format_double(st.kappa));
        header.emplace_back("stable", st.stable ? "true" : "false");
    }
    if (sys.particle.charges.q != 0.0)
        for (int a = 0; a < 3; ++a)
            header.emplace_back(std::string("secular_frequency_") + "xyz"[a],
                                format_double(secular_frequency(sys.trap, sys.particle.charges.q, sys.particle.mass,
                                                                Vec3::Unit(a)))
                                    + " rad/s");
    try {
        const SymmetricParticleSpec spec = symmetric_spec(sys.particle);
        if (spec.p3 != 0.0)
            header.emplace_back("critical_field", format_double(critical_field(sys.trap, spec, sys.particle.mass))
                                                      + " V/m");
    } catch (const ConfigError&) {
    }
    header.emplace_back("alignment_codes", "0 parallel_z, 1 perpendicular_z, 2 ring_degenerate, 3 parallel_x, 4 parallel_y, 5 generic");
    CsvWriter mins(ctx.out_dir / "minima.csv", header,
                   {"start", "R_x", "R_y", "R_z", "alpha", "beta", "gamma", "V_eff", "gradient_norm", "converged",
                    "alignment"});
    for (std::size_t i = 0; i < minima.size(); ++i) {
        const auto& mn = minima[i];
        mins.row({double(i), mn.r.x(), mn.r.y(), mn.r.z(), mn.orientation.alpha(), mn.orientation.beta(),
                  mn.orientation.gamma(), mn.energy, mn.gradient_norm, mn.converged ? 1.0 : 0.0,
                  double(static_cast<int>(mn.alignment))});
    }
    manifest.add_file("minima.csv");
    return exit_ok;
}

inline int cmd_psd(const ScenarioConfig& cfg, const RunContext& ctx, Manifest& manifest)
{
    const std::vector<LinearStage> stages = linear_stages(cfg);
    const double wmin = cfg.psd.omega_min > 0.0 ? cfg.psd.omega_min : 0.0;
    double wmax = cfg.psd.omega_max;
    if (!(wmax > 0.0))
        for (const auto& s : stages)
            wmax = std::max({wmax, 2.0 * s.model.omega_z, 2.0 * s.model.omega_beta, 2.0 * s.model.omega_LC});
    if (!(wmax > wmin)) throw ConfigError("psd: omega_max must exceed omega_min");

    auto header = csv_header(ctx, cfg);
    std::vector<std::string> columns{"omega"};
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& m = stages[i].model;
        const std::string tag = std::to_string(i);
        columns.push_back("S_z_" + tag);
        columns.push_back("S_beta_" + tag);
        // A high-Q mode leaks into the other coordinate's spectrum; search each peak near its own mode.
        auto peak = [&](int index, double w0) {
            const double lo = std::max({wmin, 0.5 * w0, 1e-9}), hi = std::min(wmax, 1.5 * w0);
            return lo < hi ? format_double(psd_peak(m, index, lo, hi) / two_pi) + " Hz" : std::string("out of range");
        };
        header.emplace_back("stage" + tag + "_peak_z", peak(iz, m.omega_z));
        header.emplace_back("stage" + tag + "_peak_beta", peak(ibeta, m.omega_beta));
        header.emplace_back("stage" + tag + "_T_z", format_double(effective_temperature(m, LinearMode::z)) + " K");
        header.emplace_back("stage" + tag + "_T_beta",
                            format_double(effective_temperature(m, LinearMode::beta)) + " K");
    }
    header.emplace_back("convention", "two-sided S(omega), integral over the real line = variance");
    CsvWriter csv(ctx.out_dir / "psd.csv", header, columns);
    std::vector<Vec6> scales;
    for (const auto& s : stages) scales.push_back(balance_scales(s.model.B));
    for (int k = 0; k < cfg.psd.points; ++k) {
        const double w = wmin + (wmax - wmin) * k / (cfg.psd.points - 1);
        std::vector<double> row{w};
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const CMat6 S = psd_matrix_unchecked(stages[i].model, w, scales[i]);
            row.push_back(S(iz, iz).real());
            row.push_back(S(ibeta, ibeta).real());
        }
        csv.row(row);
    }
    manifest.add_file("psd.csv");

    if (cfg.psd.segments > 0 && cfg.psd.duration > 0.0) {
        // Periodogram of a stationary run of the base model next to its analytic spectrum.
        const LinearModel& m = stages.front().model;
        const Mat6 cov = stationary_covariance(m);
        Eigen::LLT<Mat6> llt(cov + 1e-30 * Mat6(cov.diagonal().asDiagonal()));
        CounterRng rng(member_seed(cfg.seed, 0x5EED));
        Vec6 w0;
        for (int i = 0; i < 6; ++i) w0(i) = rng.gaussian();
        const Vec6 xi0 = llt.matrixL() * w0;
        const LinearSeries run = simulate_linear(m, xi0, cfg.psd.duration, cfg.psd.dt, cfg.seed);
        std::vector<double> z, b;
        for (const auto& x : run.states) {
            z.push_back(x(iz));
            b.push_back(x(ibeta));
        }
        const Periodogram pz = periodogram(z, run.dt, cfg.psd.segments);
        const Periodogram pb = periodogram(b, run.dt, cfg.psd.segments);
        auto h = csv_header(ctx, cfg);
        h.emplace_back("segments", std::to_string(cfg.psd.segments));
        h.emplace_back("convention", "one-sided periodogram vs 2 S(omega)");
        CsvWriter pc(ctx.out_dir / "periodogram.csv", h, {"omega", "P_z", "P_beta", "twoS_z", "twoS_beta"});
        const Vec6 d = balance_scales(m.B);
        for (std::size_t k = 1; k < pz.omega.size(); ++k) {
            const double w = pz.omega[k];
            if (w < wmin || w > wmax) continue;
            const CMat6 S = psd_matrix_unchecked(m, w, d);
            pc.row({w, pz.psd[k], pb.psd[k], 2.0 * S(iz, iz).real(), 2.0 * S(ibeta, ibeta).real()});
        }
        manifest.add_file("periodogram.csv");
    }
    return exit_ok;
}

inline int cmd_presets(const RunContext& ctx, std::ostream& os, bool write_files)
{
    for (const auto& p : preset_list()) os << p.name << "\t" << p.description << "\n";
    if (write_files) {
        std::filesystem::create_directories(ctx.out_dir);
        for (const auto& p : preset_list()) {
            std::ofstream out(ctx.out_dir / (std::string(p.name) + ".yaml"));
            out << serialize(preset(p.name));
        }
    }
    return exit_ok;
}

// Dispatches a command and records the outcome in the manifest. Errors that
// happen before output starts are rethrown for the caller to report.
inline int run_command(const std::string& command, const ScenarioConfig& cfg, RunContext ctx)
{
    ctx.command = command;
    std::filesystem::create_directories(ctx.out_dir);
    Manifest manifest(ctx, cfg);
    int code = exit_ok;
    try {
        if (command == "simulate") code = cmd_simulate(cfg, ctx, manifest);
        else if (command == "cool") code = cmd_cool(cfg, ctx, manifest);
        else if (command == "rates") code = cmd_rates(cfg, ctx, manifest);
        else if (command == "pseudopotential") code = cmd_pseudopotential(cfg, ctx, manifest);
        else if (command == "psd") code = cmd_psd(cfg, ctx, manifest);
        else throw ConfigError("unknown command '" + command + "'");
    } catch (const InstabilityError& e) {
        manifest.failure("unstable", e.what(), 0.0);
        manifest.write(ctx.out_dir);
        throw;
    } catch (const NumericalError& e) {
        manifest.failure("numerical_failure", e.what(), e.time());
        manifest.write(ctx.out_dir);
        throw;
    } catch (const EscapeError& e) {
        manifest.failure("escaped", e.what(), e.time());
        manifest.write(ctx.out_dir);
        throw;
    }
    manifest.write(ctx.out_dir);
    return code;
}

}  // namespace levirotor::scenario
