#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace levirotor::scenario {

struct PresetInfo {
    const char* name;
    const char* description;
};

inline const std::vector<PresetInfo>& preset_list()
{
    static const std::vector<PresetInfo> list = {
        {"fig2", "asymmetric 1e6 amu rotor in a ring Paul trap: exact vs effective rotation"},
        {"fig4", "point-like charge with gas damping: driven thermal momentum distribution"},
        {"fig5", "linear-trap rod, parallel RLC circuit: consecutive z and beta cooling"},
        {"fig6", "fig2 particle displaced from its minimum: center-of-mass macromotion"},
    };
    return list;
}

namespace detail {

inline Particle fig2_particle()
{
    const double q = 200.0 * elementary_charge;
    const double ell = 12e-9;
    Particle pt;
    pt.mass = 1e6 * atomic_mass_unit;
    pt.charges.q = q;
    pt.charges.p_body = q * ell * Vec3(0.0025, 0.0022, 0.007);
    Mat3 Q;
    Q << -0.13, 0.08, 0.24, 0.08, -0.04, 0.03, 0.24, 0.03, 0.17;
    pt.charges.Q_body = q * ell * ell * Q;
    const double I0 = 2.8e-38;
    pt.inertia = {I0, 0.92 * I0, 0.55 * I0};
    return pt;
}

inline ScenarioConfig fig2_base(const char* name)
{
    ScenarioConfig c;
    c.name = name;
    c.seed = 1;
    c.mode = RunMode::both;
    c.duration = 150e-6;
    c.stride = 16;
    c.system.particle = fig2_particle();
    c.system.trap = ring_trap(0.25e-3 * std::sqrt(2.0), 0.0, 750.0, two_pi * 75e6);
    c.integrator.steps_per_cycle = 256;
    // Effective-potential minimum near (alpha, beta, gamma) = (0.21, 1.11, 0.27), beta tilted by 0.2 rad.
    c.initial.R = Vec3(-7.60649e-11, -5.04436e-11, -1.79595e-11);
    c.initial.euler = Vec3(0.211414, 1.30628, 0.266049);
    c.pseudopotential.extent = 1e-8;
    return c;
}

}  // namespace detail

inline ScenarioConfig preset_fig2() { return detail::fig2_base("fig2"); }

inline ScenarioConfig preset_fig6()
{
    ScenarioConfig c = detail::fig2_base("fig6");
    c.initial.R += Vec3(20e-9, 0.0, 10e-9);
    c.initial.euler = Vec3(0.211414, 1.10628, 0.266049);
    return c;
}

// Dimensionless parameters: qU/(m w^2 l0^2) = 0.0034, kT/(m w^2 l0^2) = 0.034,
// Gamma/w = 0.02, no dipole. Units fixed by m = 1e6 amu, q = 200 e, l0 = 0.25 sqrt2 mm, T = 300 K.
inline ScenarioConfig preset_fig4()
{
    ScenarioConfig c;
    c.name = "fig4";
    c.seed = 4;
    c.mode = RunMode::stochastic;
    c.ensemble = 32;
    c.integrator.steps_per_cycle = 64;
    // The thermal cloud is ~40 l0 wide in the ideal quadrupole field.
    c.integrator.escape_radius = 1e4;
    const double m = 1e6 * atomic_mass_unit, q = 200.0 * elementary_charge, ell0 = 0.25e-3 * std::sqrt(2.0);
    const double T = 300.0;
    const double scale = boltzmann * T / 0.034;  // m w^2 l0^2
    const double w = std::sqrt(scale / (m * ell0 * ell0));
    c.system.particle.mass = m;
    c.system.particle.charges.q = q;
    c.system.particle.inertia = InertiaSpec::isotropic(2.8e-38);
    c.system.trap = ring_trap(ell0, 0.0, 0.0034 * scale / q, w);
    c.system.gas = GasCoupling{Vec3::Constant(0.02 * w), Vec3::Zero(), T};
    c.duration = 2000.0 * two_pi / w;
    c.stride = 64 * 25;
    c.pseudopotential.extent = 0.1 * ell0;
    return c;
}

// z cooling (R_cm, C_cm) from t = 0, beta cooling (R_rot, C_rot) from
// 45 s, both at 1e-8 mbar. The base system is the initial 0.1 mbar state.
inline ScenarioConfig preset_fig5()
{
    ScenarioConfig c;
    c.name = "fig5";
    c.seed = 5;
    c.mode = RunMode::linear;
    c.duration = 120.0;
    const double q = 1e5 * elementary_charge, ell = 2500e-9;
    const double I1 = 3.52e-27;
    const SymmetricParticleSpec spec{q, 0.1 * q * ell, 0.15 * q * ell * ell, I1, 0.1 * I1};
    c.system.particle = Particle::symmetric(spec, 3.5e12 * atomic_mass_unit);
    const double ell0 = std::sqrt(2.0) * 250e-6;
    c.system.trap = linear_trap(ell0, 5000.0, two_pi * 750e3, Endcap{Vec3(1.0, 1.0, -2.0).asDiagonal(), 2.0 * ell0, 8.24, 1.0});
    c.system.circuit = CircuitCoupling{LinearPickup{0.4, ell0}, CircuitSpec{Topology::parallel, 2e6, 0.565, 5.8e-9, 4.0}};
    c.system.gas = GasCoupling{Vec3(0.0, 0.0, 44.5), Vec3(77.8, 77.8, 0.0), 300.0};
    const GasCoupling vacuum{Vec3(0.0, 0.0, 4.5e-6), Vec3(7.8e-6, 7.8e-6, 0.0), 300.0};
    c.schedule = {{0.0, CircuitSpec{Topology::parallel, 2e6, 0.565, 10e-9, 4.0}, vacuum},
                  {45.0, CircuitSpec{Topology::parallel, 11.15e6, 0.565, 1.794e-9, 4.0}, vacuum}};
    c.initial.euler = Vec3(0.0, pi / 2, 0.0);
    c.initial.cooling = true;
    c.linear = {1e-5, 100, 0.01};
    c.psd = {two_pi * 1500.0, two_pi * 5500.0, 4001, 64, 1e-5, 64.0};
    c.pseudopotential.extent = 1e-6;
    return c;
}

inline ScenarioConfig preset(const std::string& name)
{
    if (name == "fig2") return preset_fig2();
    if (name == "fig4") return preset_fig4();
    if (name == "fig5") return preset_fig5();
    if (name == "fig6") return preset_fig6();
    throw ConfigError("unknown preset '" + name + "' (available: fig2, fig4, fig5, fig6)");
}

}  // namespace levirotor::scenario
