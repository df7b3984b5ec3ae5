#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "../dynamics.hpp"
#include "../linear_cooling.hpp"
#include "units.hpp"

namespace levirotor::scenario {

enum class RunMode { exact, effective, stochastic, both, linear };

inline const char* to_string(RunMode m)
{
    switch (m) {
        case RunMode::exact: return "exact";
        case RunMode::effective: return "effective";
        case RunMode::stochastic: return "stochastic";
        case RunMode::both: return "both";
        case RunMode::linear: return "linear";
    }
    return "exact";
}

struct InitialState {
    Vec3 R = Vec3::Zero();
    Vec3 P = Vec3::Zero();
    Vec3 euler = Vec3(0.0, pi / 2, 0.0);
    Vec3 J = Vec3::Zero();
    double Q = 0.0;
    double Phi = 0.0;
    bool micromotion = true;  // exact runs start on the macromotion state plus micromotion
    bool cooling = false;     // linear runs: thermal kick p = -sqrt(2 m kT_gas), ...
    double cooling_Q = -4.8 * elementary_charge;
    double cooling_flux_charge = 0.4 * elementary_charge;
};

// Parameter switch at time `at`: circuit and/or gas replaced from then on.
struct ScheduleEntry {
    double at = 0.0;
    std::optional<CircuitSpec> circuit;
    std::optional<GasCoupling> gas;
};

struct LinearRunSpec {
    double dt = 1e-5;
    int stride = 100;
    double average = 0.01;  // moving-average window for the energy columns, s
};

struct SweepSpec {
    double omega_min = 0.0;
    double omega_max = 0.0;
    int points = 201;
};

struct PsdSpec {
    double omega_min = 0.0;
    double omega_max = 0.0;
    int points = 2001;
    int segments = 0;  // > 0 adds a periodogram of a simulated linear run
    double dt = 1e-5;
    double duration = 0.0;
};

struct GridSpec {
    double extent = 0.0;  // half-width of the sampled cube, m
    int points = 41;
};

struct ScenarioConfig {
    std::string name = "custom";
    std::uint64_t seed = 0;
    double duration = 0.0;
    RunMode mode = RunMode::exact;
    int ensemble = 1;
    int stride = 1;
    System system;
    IntegratorConfig integrator;
    InitialState initial;
    std::vector<ScheduleEntry> schedule;
    LinearRunSpec linear;
    SweepSpec rates;
    PsdSpec psd;
    GridSpec pseudopotential;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

inline void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed)
{
    if (!node.IsMap()) throw ConfigError(path + ": expected a mapping");
    for (const auto& kv : node) {
        const std::string k = kv.first.as<std::string>();
        if (!allowed.count(k)) throw ConfigError(join(path, k) + ": unknown key");
    }
}

inline std::string scalar(const YAML::Node& n, const std::string& path)
{
    if (!n.IsScalar()) throw ConfigError(path + ": expected a scalar");
    return n.as<std::string>();
}

inline double quantity(const YAML::Node& n, const std::string& path, Quantity q)
{
    try {
        return parse_quantity(scalar(n, path), q);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

template <class T>
void read(const YAML::Node& parent, const std::string& path, const char* key, Quantity q, T& out)
{
    if (const YAML::Node n = parent[key]) out = quantity(n, join(path, key), q);
}

inline void read_vec(const YAML::Node& parent, const std::string& path, const char* key, Quantity q, Vec3& out)
{
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string p = join(path, key);
    if (!n.IsSequence() || n.size() != 3) throw ConfigError(p + ": expected a list of three values");
    for (int i = 0; i < 3; ++i) out(i) = quantity(n[i], p + "[" + std::to_string(i) + "]", q);
}

inline void read_mat(const YAML::Node& parent, const std::string& path, const char* key, Quantity q, Mat3& out)
{
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string p = join(path, key);
    if (!n.IsSequence() || n.size() != 3) throw ConfigError(p + ": expected a 3x3 nested list");
    for (int i = 0; i < 3; ++i) {
        if (!n[i].IsSequence() || n[i].size() != 3) throw ConfigError(p + ": expected a 3x3 nested list");
        for (int j = 0; j < 3; ++j)
            out(i, j) = quantity(n[i][j], p + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", q);
    }
}

template <class Int>
void read_int(const YAML::Node& parent, const std::string& path, const char* key, Int& out)
{
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string s = scalar(n, join(path, key));
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        out = static_cast<Int>(v);
    } catch (const std::exception&) {
        throw ConfigError(join(path, key) + ": expected an integer, got '" + s + "'");
    }
}

inline void read_bool(const YAML::Node& parent, const std::string& path, const char* key, bool& out)
{
    const YAML::Node n = parent[key];
    if (!n) return;
    const std::string s = scalar(n, join(path, key));
    if (s == "true" || s == "yes") out = true;
    else if (s == "false" || s == "no") out = false;
    else throw ConfigError(join(path, key) + ": expected true or false");
}

inline void parse_particle(const YAML::Node& n, const std::string& path, Particle& pt)
{
    check_keys(n, path, {"mass", "charge", "dipole", "quadrupole", "inertia", "point_charges"});
    read(n, path, "mass", Quantity::mass, pt.mass);
    if (const YAML::Node pc = n["point_charges"]) {
        if (n["charge"] || n["dipole"] || n["quadrupole"])
            throw ConfigError(path + ": give either point_charges or charge/dipole/quadrupole");
        if (!pc.IsSequence()) throw ConfigError(join(path, "point_charges") + ": expected a list");
        PointChargeSet set;
        for (std::size_t i = 0; i < pc.size(); ++i) {
            const std::string p = join(path, "point_charges") + "[" + std::to_string(i) + "]";
            check_keys(pc[i], p, {"charge", "position"});
            PointCharge c;
            read(pc[i], p, "charge", Quantity::charge, c.charge);
            read_vec(pc[i], p, "position", Quantity::length, c.position);
            set.push_back(c);
        }
        pt.charges = multipoles_from_point_charges(set);
    } else {
        read(n, path, "charge", Quantity::charge, pt.charges.q);
        read_vec(n, path, "dipole", Quantity::dipole, pt.charges.p_body);
        read_mat(n, path, "quadrupole", Quantity::quadrupole, pt.charges.Q_body);
    }
    Vec3 I = pt.inertia.moments();
    read_vec(n, path, "inertia", Quantity::inertia, I);
    pt.inertia = {I(0), I(1), I(2)};
}

inline void parse_trap(const YAML::Node& n, const std::string& path, TrapGeometry& g)
{
    check_keys(n, path, {"type", "ell0", "U_dc", "U_ac", "omega_ac", "endcap", "E_hom"});
    if (const YAML::Node t = n["type"]) {
        const std::string s = scalar(t, join(path, "type"));
        if (s == "ring") g.A = Vec3(1.0, 1.0, -2.0).asDiagonal();
        else if (s == "linear") g.A = Vec3(-1.0, 1.0, 0.0).asDiagonal();
        else throw ConfigError(join(path, "type") + ": expected ring or linear");
    }
    read(n, path, "ell0", Quantity::length, g.ell0);
    read(n, path, "U_dc", Quantity::voltage, g.U_dc);
    read(n, path, "U_ac", Quantity::voltage, g.U_ac);
    read(n, path, "omega_ac", Quantity::angular_frequency, g.omega_ac);
    read_vec(n, path, "E_hom", Quantity::field, g.E_hom);
    if (const YAML::Node e = n["endcap"]) {
        const std::string p = join(path, "endcap");
        if (e.IsScalar() && (e.as<std::string>() == "none" || e.as<std::string>() == "null")) {
            g.endcap.reset();
            return;
        }
        check_keys(e, p, {"ell_ec", "U_ec", "k_ec"});
        Endcap ec = g.endcap.value_or(Endcap{});
        read(e, p, "ell_ec", Quantity::length, ec.ell_ec);
        read(e, p, "U_ec", Quantity::voltage, ec.U_ec);
        read(e, p, "k_ec", Quantity::dimensionless, ec.k_ec);
        g.endcap = ec;
    }
}

inline void parse_pickup(const YAML::Node& n, const std::string& path, PickupConfig& cfg)
{
    check_keys(n, path, {"type", "k", "z0", "G"});
    std::string type = std::holds_alternative<LinearPickup>(cfg) ? "linear" : "quadrupole";
    if (const YAML::Node t = n["type"]) type = scalar(t, join(path, "type"));
    if (type == "linear") {
        LinearPickup lp = std::holds_alternative<LinearPickup>(cfg) ? std::get<LinearPickup>(cfg) : LinearPickup{};
        if (n["G"]) throw ConfigError(join(path, "G") + ": only used by quadrupole pick-ups");
        read(n, path, "k", Quantity::dimensionless, lp.k1);
        read(n, path, "z0", Quantity::length, lp.z0);
        cfg = lp;
    } else if (type == "quadrupole") {
        QuadrupolePickup qp = std::holds_alternative<QuadrupolePickup>(cfg) ? std::get<QuadrupolePickup>(cfg)
                                                                            : QuadrupolePickup{};
        read(n, path, "k", Quantity::dimensionless, qp.k2);
        read(n, path, "z0", Quantity::length, qp.z0);
        read_mat(n, path, "G", Quantity::dimensionless, qp.G);
        cfg = qp;
    } else {
        throw ConfigError(join(path, "type") + ": expected linear or quadrupole");
    }
}

inline void parse_circuit(const YAML::Node& n, const std::string& path, CircuitSpec& c, bool* dissipation)
{
    std::set<std::string> keys{"topology", "R", "L", "C", "T"};
    if (dissipation) keys.insert("dissipation");
    check_keys(n, path, keys);
    if (const YAML::Node t = n["topology"]) {
        const std::string s = scalar(t, join(path, "topology"));
        if (s == "series") c.topology = Topology::series;
        else if (s == "parallel") c.topology = Topology::parallel;
        else throw ConfigError(join(path, "topology") + ": expected series or parallel");
    }
    read(n, path, "R", Quantity::resistance, c.R);
    read(n, path, "L", Quantity::inductance, c.L);
    read(n, path, "C", Quantity::capacitance, c.C);
    read(n, path, "T", Quantity::temperature, c.T);
    if (dissipation) read_bool(n, path, "dissipation", *dissipation);
}

inline void parse_gas(const YAML::Node& n, const std::string& path, GasCoupling& g)
{
    check_keys(n, path, {"Gamma_cm", "Gamma_rot", "T"});
    read_vec(n, path, "Gamma_cm", Quantity::rate, g.Gamma_cm);
    read_vec(n, path, "Gamma_rot", Quantity::rate, g.Gamma_rot);
    read(n, path, "T", Quantity::temperature, g.T_gas);
}

inline bool is_null(const YAML::Node& n)
{
    return n.IsNull() || (n.IsScalar() && (n.as<std::string>() == "none" || n.as<std::string>() == "null"));
}

}  // namespace detail

// Applies a YAML document on top of `base` (fields not mentioned keep their
// value) and validates the result.
inline ScenarioConfig parse_config(const YAML::Node& root, ScenarioConfig cfg = {})
{
    using namespace detail;
    check_keys(root, "", {"name", "seed", "duration", "mode", "ensemble", "stride", "particle", "trap", "pickup",
                          "circuit", "plates", "gas", "integrator", "initial", "schedule", "linear", "rates", "psd",
                          "pseudopotential"});
    if (const YAML::Node n = root["name"]) cfg.name = scalar(n, "name");
    read_int(root, "", "seed", cfg.seed);
    read(root, "", "duration", Quantity::time, cfg.duration);
    if (const YAML::Node n = root["mode"]) {
        const std::string s = scalar(n, "mode");
        if (s == "exact") cfg.mode = RunMode::exact;
        else if (s == "effective") cfg.mode = RunMode::effective;
        else if (s == "stochastic") cfg.mode = RunMode::stochastic;
        else if (s == "both") cfg.mode = RunMode::both;
        else if (s == "linear") cfg.mode = RunMode::linear;
        else throw ConfigError("mode: expected exact, effective, stochastic, both or linear");
    }
    read_int(root, "", "ensemble", cfg.ensemble);
    read_int(root, "", "stride", cfg.stride);

    System& sys = cfg.system;
    if (const YAML::Node n = root["particle"]) parse_particle(n, "particle", sys.particle);
    if (const YAML::Node n = root["trap"]) parse_trap(n, "trap", sys.trap);

    if (const YAML::Node n = root["pickup"]; n && is_null(n)) {
        sys.circuit.reset();
    } else if (n || root["circuit"]) {
        if (is_null(root["circuit"])) {
            sys.circuit.reset();
        } else {
            CircuitCoupling cc = sys.circuit.value_or(CircuitCoupling{LinearPickup{}, CircuitSpec{}});
            if (n) parse_pickup(n, "pickup", cc.pickup);
            if (const YAML::Node c = root["circuit"]) parse_circuit(c, "circuit", cc.circuit, &sys.circuit_dissipation);
            sys.circuit = cc;
        }
    }
    if (const YAML::Node n = root["plates"]) {
        if (is_null(n)) {
            sys.plates.reset();
        } else {
            check_keys(n, "plates", {"z0"});
            PlateCapacitor pc = sys.plates.value_or(PlateCapacitor{});
            read(n, "plates", "z0", Quantity::length, pc.z0);
            sys.plates = pc;
        }
    }
    if (const YAML::Node n = root["gas"]) {
        if (is_null(n)) {
            sys.gas.reset();
        } else {
            GasCoupling g = sys.gas.value_or(GasCoupling{});
            parse_gas(n, "gas", g);
            sys.gas = g;
        }
    }
    if (const YAML::Node n = root["integrator"]) {
        check_keys(n, "integrator", {"steps_per_cycle", "escape_radius"});
        read_int(n, "integrator", "steps_per_cycle", cfg.integrator.steps_per_cycle);
        read(n, "integrator", "escape_radius", Quantity::dimensionless, cfg.integrator.escape_radius);
    }
    if (const YAML::Node n = root["initial"]) {
        InitialState& in = cfg.initial;
        check_keys(n, "initial",
                   {"R", "P", "euler", "J", "Q", "Phi", "micromotion", "cooling", "cooling_Q", "cooling_flux_charge"});
        read_vec(n, "initial", "R", Quantity::length, in.R);
        read_vec(n, "initial", "P", Quantity::momentum, in.P);
        read_vec(n, "initial", "euler", Quantity::angle, in.euler);
        read_vec(n, "initial", "J", Quantity::angular_momentum, in.J);
        read(n, "initial", "Q", Quantity::charge, in.Q);
        read(n, "initial", "Phi", Quantity::magnetic_flux, in.Phi);
        read_bool(n, "initial", "micromotion", in.micromotion);
        read_bool(n, "initial", "cooling", in.cooling);
        read(n, "initial", "cooling_Q", Quantity::charge, in.cooling_Q);
        read(n, "initial", "cooling_flux_charge", Quantity::charge, in.cooling_flux_charge);
    }
    if (const YAML::Node n = root["schedule"]) {
        if (!n.IsSequence()) throw ConfigError("schedule: expected a list");
        cfg.schedule.clear();
        CircuitSpec circuit = sys.circuit ? sys.circuit->circuit : CircuitSpec{};
        GasCoupling gas = sys.gas.value_or(GasCoupling{});
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string p = "schedule[" + std::to_string(i) + "]";
            check_keys(n[i], p, {"at", "circuit", "gas"});
            ScheduleEntry e;
            if (!n[i]["at"]) throw ConfigError(p + ".at: required");
            read(n[i], p, "at", Quantity::time, e.at);
            if (const YAML::Node c = n[i]["circuit"]) {
                parse_circuit(c, p + ".circuit", circuit, nullptr);
                e.circuit = circuit;
            }
            if (const YAML::Node g = n[i]["gas"]) {
                parse_gas(g, p + ".gas", gas);
                e.gas = gas;
            }
            cfg.schedule.push_back(e);
        }
    }
    if (const YAML::Node n = root["linear"]) {
        check_keys(n, "linear", {"dt", "stride", "average"});
        read(n, "linear", "dt", Quantity::time, cfg.linear.dt);
        read_int(n, "linear", "stride", cfg.linear.stride);
        read(n, "linear", "average", Quantity::time, cfg.linear.average);
    }
    if (const YAML::Node n = root["rates"]) {
        check_keys(n, "rates", {"omega_min", "omega_max", "points"});
        read(n, "rates", "omega_min", Quantity::angular_frequency, cfg.rates.omega_min);
        read(n, "rates", "omega_max", Quantity::angular_frequency, cfg.rates.omega_max);
        read_int(n, "rates", "points", cfg.rates.points);
    }
    if (const YAML::Node n = root["psd"]) {
        check_keys(n, "psd", {"omega_min", "omega_max", "points", "segments", "dt", "duration"});
        read(n, "psd", "omega_min", Quantity::angular_frequency, cfg.psd.omega_min);
        read(n, "psd", "omega_max", Quantity::angular_frequency, cfg.psd.omega_max);
        read_int(n, "psd", "points", cfg.psd.points);
        read_int(n, "psd", "segments", cfg.psd.segments);
        read(n, "psd", "dt", Quantity::time, cfg.psd.dt);
        read(n, "psd", "duration", Quantity::time, cfg.psd.duration);
    }
    if (const YAML::Node n = root["pseudopotential"]) {
        check_keys(n, "pseudopotential", {"extent", "points"});
        read(n, "pseudopotential", "extent", Quantity::length, cfg.pseudopotential.extent);
        read_int(n, "pseudopotential", "points", cfg.pseudopotential.points);
    }
    return cfg;
}

// Field-level checks beyond the schema; messages name the offending field.
inline void validate(const ScenarioConfig& cfg)
{
    auto wrap = [](const std::string& field, auto&& fn) {
        try {
            fn();
        } catch (const DomainError& e) {
            throw ConfigError(field + ": " + e.what());
        }
    };
    wrap("particle", [&] { cfg.system.particle.validate(); });
    wrap("trap", [&] { cfg.system.trap.validate(); });
    if (cfg.system.circuit) {
        wrap("pickup", [&] { levirotor::validate(cfg.system.circuit->pickup); });
        wrap("circuit", [&] { cfg.system.circuit->circuit.validate(); });
    }
    if (cfg.system.plates) wrap("plates", [&] { cfg.system.plates->validate(); });
    if (cfg.system.gas) wrap("gas", [&] { cfg.system.gas->validate(); });
    wrap("integrator", [&] { cfg.integrator.validate(); });
    if (!(cfg.duration >= 0.0)) throw ConfigError("duration: must be non-negative");
    if (cfg.ensemble < 1) throw ConfigError("ensemble: must be at least 1");
    if (cfg.stride < 1) throw ConfigError("stride: must be at least 1");
    double last = 0.0;
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const auto& e = cfg.schedule[i];
        const std::string p = "schedule[" + std::to_string(i) + "]";
        if (e.at < last) throw ConfigError(p + ".at: switch times must be non-decreasing and non-negative");
        last = e.at;
        if (e.circuit) {
            if (!cfg.system.circuit) throw ConfigError(p + ".circuit: no circuit configured");
            wrap(p + ".circuit", [&] { e.circuit->validate(); });
        }
        if (e.gas) wrap(p + ".gas", [&] { e.gas->validate(); });
    }
    if (!(cfg.linear.dt > 0.0)) throw ConfigError("linear.dt: must be positive");
    if (cfg.linear.stride < 1) throw ConfigError("linear.stride: must be at least 1");
    if (cfg.rates.points < 2) throw ConfigError("rates.points: need at least 2");
    if (cfg.psd.points < 2) throw ConfigError("psd.points: need at least 2");
    if (cfg.psd.segments < 0) throw ConfigError("psd.segments: must be non-negative");
    if (cfg.pseudopotential.points < 2) throw ConfigError("pseudopotential.points: need at least 2");
}

namespace detail {

inline void emit(YAML::Emitter& out, const char* key, double v, Quantity q)
{
    out << YAML::Key << key << YAML::Value << format_quantity(v, q);
}

inline void emit_vec(YAML::Emitter& out, const char* key, const Vec3& v, Quantity q)
{
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int i = 0; i < 3; ++i) out << format_quantity(v(i), q);
    out << YAML::EndSeq;
}

inline void emit_mat(YAML::Emitter& out, const char* key, const Mat3& m, Quantity q)
{
    out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (int i = 0; i < 3; ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (int j = 0; j < 3; ++j) out << format_quantity(m(i, j), q);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
}

inline void emit_circuit(YAML::Emitter& out, const CircuitSpec& c, const bool* dissipation)
{
    out << YAML::BeginMap;
    out << YAML::Key << "topology" << YAML::Value << (c.topology == Topology::series ? "series" : "parallel");
    emit(out, "R", c.R, Quantity::resistance);
    emit(out, "L", c.L, Quantity::inductance);
    emit(out, "C", c.C, Quantity::capacitance);
    emit(out, "T", c.T, Quantity::temperature);
    if (dissipation) out << YAML::Key << "dissipation" << YAML::Value << (*dissipation ? "true" : "false");
    out << YAML::EndMap;
}

inline void emit_gas(YAML::Emitter& out, const GasCoupling& g)
{
    out << YAML::BeginMap;
    emit_vec(out, "Gamma_cm", g.Gamma_cm, Quantity::rate);
    emit_vec(out, "Gamma_rot", g.Gamma_rot, Quantity::rate);
    emit(out, "T", g.T_gas, Quantity::temperature);
    out << YAML::EndMap;
}

}  // namespace detail

// Complete, SI-normalized YAML of the config; parse_config of this text
// reproduces the config exactly.
inline std::string serialize(const ScenarioConfig& cfg)
{
    using namespace detail;
    const System& sys = cfg.system;
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.name;
    out << YAML::Key << "seed" << YAML::Value << std::to_string(cfg.seed);
    emit(out, "duration", cfg.duration, Quantity::time);
    out << YAML::Key << "mode" << YAML::Value << to_string(cfg.mode);
    out << YAML::Key << "ensemble" << YAML::Value << std::to_string(cfg.ensemble);
    out << YAML::Key << "stride" << YAML::Value << std::to_string(cfg.stride);

    out << YAML::Key << "particle" << YAML::Value << YAML::BeginMap;
    emit(out, "mass", sys.particle.mass, Quantity::mass);
    emit(out, "charge", sys.particle.charges.q, Quantity::charge);
    emit_vec(out, "dipole", sys.particle.charges.p_body, Quantity::dipole);
    emit_mat(out, "quadrupole", sys.particle.charges.Q_body, Quantity::quadrupole);
    emit_vec(out, "inertia", sys.particle.inertia.moments(), Quantity::inertia);
    out << YAML::EndMap;

    out << YAML::Key << "trap" << YAML::Value << YAML::BeginMap;
    const bool ring = sys.trap.A(2, 2) != 0.0;
    out << YAML::Key << "type" << YAML::Value << (ring ? "ring" : "linear");
    emit(out, "ell0", sys.trap.ell0, Quantity::length);
    emit(out, "U_dc", sys.trap.U_dc, Quantity::voltage);
    emit(out, "U_ac", sys.trap.U_ac, Quantity::voltage);
    emit(out, "omega_ac", sys.trap.omega_ac, Quantity::angular_frequency);
    emit_vec(out, "E_hom", sys.trap.E_hom, Quantity::field);
    if (sys.trap.endcap) {
        out << YAML::Key << "endcap" << YAML::Value << YAML::BeginMap;
        emit(out, "ell_ec", sys.trap.endcap->ell_ec, Quantity::length);
        emit(out, "U_ec", sys.trap.endcap->U_ec, Quantity::voltage);
        emit(out, "k_ec", sys.trap.endcap->k_ec, Quantity::dimensionless);
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    if (sys.circuit) {
        out << YAML::Key << "pickup" << YAML::Value << YAML::BeginMap;
        if (const auto* lp = std::get_if<LinearPickup>(&sys.circuit->pickup)) {
            out << YAML::Key << "type" << YAML::Value << "linear";
            emit(out, "k", lp->k1, Quantity::dimensionless);
            emit(out, "z0", lp->z0, Quantity::length);
        } else {
            const auto& qp = std::get<QuadrupolePickup>(sys.circuit->pickup);
            out << YAML::Key << "type" << YAML::Value << "quadrupole";
            emit(out, "k", qp.k2, Quantity::dimensionless);
            emit(out, "z0", qp.z0, Quantity::length);
            emit_mat(out, "G", qp.G, Quantity::dimensionless);
        }
        out << YAML::EndMap;
        out << YAML::Key << "circuit" << YAML::Value;
        emit_circuit(out, sys.circuit->circuit, &sys.circuit_dissipation);
    }
    if (sys.plates) {
        out << YAML::Key << "plates" << YAML::Value << YAML::BeginMap;
        emit(out, "z0", sys.plates->z0, Quantity::length);
        out << YAML::EndMap;
    }
    if (sys.gas) {
        out << YAML::Key << "gas" << YAML::Value;
        emit_gas(out, *sys.gas);
    }

    out << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "steps_per_cycle" << YAML::Value << std::to_string(cfg.integrator.steps_per_cycle);
    emit(out, "escape_radius", cfg.integrator.escape_radius, Quantity::dimensionless);
    out << YAML::EndMap;

    const InitialState& in = cfg.initial;
    out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
    emit_vec(out, "R", in.R, Quantity::length);
    emit_vec(out, "P", in.P, Quantity::momentum);
    emit_vec(out, "euler", in.euler, Quantity::angle);
    emit_vec(out, "J", in.J, Quantity::angular_momentum);
    emit(out, "Q", in.Q, Quantity::charge);
    emit(out, "Phi", in.Phi, Quantity::magnetic_flux);
    out << YAML::Key << "micromotion" << YAML::Value << (in.micromotion ? "true" : "false");
    out << YAML::Key << "cooling" << YAML::Value << (in.cooling ? "true" : "false");
    emit(out, "cooling_Q", in.cooling_Q, Quantity::charge);
    emit(out, "cooling_flux_charge", in.cooling_flux_charge, Quantity::charge);
    out << YAML::EndMap;

    if (!cfg.schedule.empty()) {
        out << YAML::Key << "schedule" << YAML::Value << YAML::BeginSeq;
        for (const auto& e : cfg.schedule) {
            out << YAML::BeginMap;
            emit(out, "at", e.at, Quantity::time);
            if (e.circuit) {
                out << YAML::Key << "circuit" << YAML::Value;
                emit_circuit(out, *e.circuit, nullptr);
            }
            if (e.gas) {
                out << YAML::Key << "gas" << YAML::Value;
                emit_gas(out, *e.gas);
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }

    out << YAML::Key << "linear" << YAML::Value << YAML::BeginMap;
    emit(out, "dt", cfg.linear.dt, Quantity::time);
    out << YAML::Key << "stride" << YAML::Value << std::to_string(cfg.linear.stride);
    emit(out, "average", cfg.linear.average, Quantity::time);
    out << YAML::EndMap;

    out << YAML::Key << "rates" << YAML::Value << YAML::BeginMap;
    emit(out, "omega_min", cfg.rates.omega_min, Quantity::angular_frequency);
    emit(out, "omega_max", cfg.rates.omega_max, Quantity::angular_frequency);
    out << YAML::Key << "points" << YAML::Value << std::to_string(cfg.rates.points);
    out << YAML::EndMap;

    out << YAML::Key << "psd" << YAML::Value << YAML::BeginMap;
    emit(out, "omega_min", cfg.psd.omega_min, Quantity::angular_frequency);
    emit(out, "omega_max", cfg.psd.omega_max, Quantity::angular_frequency);
    out << YAML::Key << "points" << YAML::Value << std::to_string(cfg.psd.points);
    out << YAML::Key << "segments" << YAML::Value << std::to_string(cfg.psd.segments);
    emit(out, "dt", cfg.psd.dt, Quantity::time);
    emit(out, "duration", cfg.psd.duration, Quantity::time);
    out << YAML::EndMap;

    out << YAML::Key << "pseudopotential" << YAML::Value << YAML::BeginMap;
    emit(out, "extent", cfg.pseudopotential.extent, Quantity::length);
    out << YAML::Key << "points" << YAML::Value << std::to_string(cfg.pseudopotential.points);
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ScenarioConfig& cfg)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize(cfg))));
    return buf;
}

// "a.b.c=value": the value is read as YAML, so lists like "[1, 2, 3]" work.
inline void apply_override(YAML::Node& root, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
    const std::string path = assignment.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(assignment.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');) {
        if (k.empty()) throw ConfigError("override '" + assignment + "': empty key");
        keys.push_back(k);
    }
    // yaml-cpp nodes are handles; walk with fresh copies to avoid rebinding.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        YAML::Node next = chain.back()[keys[i]];
        if (!next.IsDefined() || next.IsNull()) {
            chain.back()[keys[i]] = YAML::Node(YAML::NodeType::Map);
            next = chain.back()[keys[i]];
        }
        if (!next.IsMap()) throw ConfigError("override '" + assignment + "': '" + keys[i] + "' is not a section");
        chain.push_back(next);
    }
    chain.back()[keys.back()] = value;
}

inline YAML::Node load_yaml_file(const std::string& path)
{
    try {
        return YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot read config file '" + path + "'");
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ScenarioConfig load_config(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.what());
    }
    ScenarioConfig cfg = parse_config(root);
    validate(cfg);
    return cfg;
}

// Cylindrically symmetric view of a particle for the linear cooling model.
inline SymmetricParticleSpec symmetric_spec(const Particle& pt)
{
    const auto& c = pt.charges;
    const double Q3 = 0.5 * c.Q_body(2, 2);
    const Mat3 Qsym = Q3 * Vec3(-1.0, -1.0, 2.0).asDiagonal();
    const double tol = 1e-12 * (std::abs(c.p_body.z()) + 1e-300);
    const double qtol = 1e-12 * (max_abs(c.Q_body) + 1e-300);
    if (std::abs(c.p_body.x()) > tol || std::abs(c.p_body.y()) > tol || max_abs(c.Q_body - Qsym) > qtol
        || pt.inertia.I1 != pt.inertia.I2)
        throw ConfigError("particle: the linear model needs a cylindrically symmetric particle about body axis 3");
    return {c.q, c.p_body.z(), Q3, pt.inertia.I1, pt.inertia.I3};
}

}  // namespace levirotor::scenario
