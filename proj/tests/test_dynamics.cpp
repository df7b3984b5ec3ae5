#include <gtest/gtest.h>

#include <cstring>

#include "levirotor/analysis.hpp"
#include "levirotor/dynamics.hpp"
#include "levirotor/equilibrium.hpp"
#include "test_support.hpp"

using namespace levirotor;
using namespace testing_support;

constexpr double e = elementary_charge;

namespace {

const double fig2_ell0 = 0.25e-3 * std::sqrt(2.0);

TrapGeometry fig2_trap() { return ring_trap(fig2_ell0, 0.0, 750.0, two_pi * 75e6); }

// No charges, no fields: a free rigid body.
System free_rotor(const InertiaSpec& inertia, double omega_ac)
{
    System sys;
    sys.particle.mass = 1e-20;
    sys.particle.inertia = inertia;
    sys.trap = ring_trap(1e-3, 0.0, 0.0, omega_ac);
    return sys;
}

// Point charge in a ring trap with charge Mathieu parameter `a` at drive w.
System point_charge(double a, double w)
{
    System sys;
    sys.particle.mass = 1e6 * atomic_mass_unit;
    sys.particle.charges.q = 200 * e;
    sys.particle.inertia = InertiaSpec::isotropic(1e-38);
    const double U = a * sys.particle.mass * w * w * fig2_ell0 * fig2_ell0 / sys.particle.charges.q;
    sys.trap = ring_trap(fig2_ell0, 0.0, U, w);
    return sys;
}

System lossless_coupled()
{
    System sys;
    sys.particle = fig2_particle();
    sys.trap = fig2_trap();
    sys.circuit = CircuitCoupling{LinearPickup{0.5, 1e-3}, CircuitSpec{Topology::parallel, 1e9, 1e3, 1e-15, 0.0}};
    sys.circuit_dissipation = false;
    sys.plates = PlateCapacitor{1e-3};
    return sys;
}

bool bitwise_equal(const SystemState& a, const SystemState& b)
{
    const auto same = [](const auto& x, const auto& y) { return std::memcmp(&x, &y, sizeof(x)) == 0; };
    return same(a.t, b.t) && same(a.R, b.R) && same(a.P, b.P) && same(a.rotation.coeffs(), b.rotation.coeffs())
           && same(a.J, b.J) && same(a.Q, b.Q) && same(a.Phi, b.Phi);
}

}  // namespace

TEST(Integrator, ConfigValidation)
{
    IntegratorConfig cfg;
    cfg.steps_per_cycle = 32;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg.steps_per_cycle = 64;
    EXPECT_NO_THROW(cfg.validate());
    GasCoupling gas;
    gas.Gamma_cm = Vec3(-1, 0, 0);
    EXPECT_THROW(gas.validate(), DomainError);
}

TEST(FreeRotor, SymmetricTopInvariants)
{
    const InertiaSpec inertia{2e-38, 2e-38, 0.7e-38};
    const System sys = free_rotor(inertia, two_pi * 1e6);
    SystemState s;
    s.set_orientation(Orientation::from_euler(0.4, 1.0, 2.0));
    s.J = Vec3(0.3, -0.5, 0.8) * 2e-38 * two_pi * 1e6 * 1e-3 * 64;
    const auto traj = run_trajectory(s, sys, IntegratorConfig{64, 0, 10.0}, Mode::exact,
                                     100000 * sys.trap.period() / 64, 100000);
    ASSERT_EQ(traj.size(), 2u);
    const SystemState& f = traj.back();
    EXPECT_LT(rel_err(f.J.norm(), s.J.norm()), 1e-10);
    EXPECT_LT(rel_err(f.J.z(), s.J.z()), 1e-10);
    const double j3_0 = s.J.dot(s.body_frame().col(2));
    const double j3_1 = f.J.dot(f.body_frame().col(2));
    EXPECT_LT(std::abs(j3_1 - j3_0), 1e-10 * s.J.norm());
    const Integrator integ(sys, IntegratorConfig{}, Mode::exact);
    EXPECT_LT(rel_err(integ.energy(f), integ.energy(s)), 1e-10);
}

TEST(FreeRotor, AsymmetricEnergyAndMomentum)
{
    const InertiaSpec inertia{2e-38, 1.5e-38, 0.7e-38};
    const System sys = free_rotor(inertia, two_pi * 1e6);
    SystemState s;
    s.set_orientation(Orientation::from_euler(1.4, 0.6, 0.2));
    s.J = Vec3(0.2, 0.9, -0.3) * 2e-38 * two_pi * 1e6 * 1e-3 * 64;
    Integrator integ(sys, IntegratorConfig{64, 0, 10.0}, Mode::exact);
    const double E0 = integ.energy(s);
    SystemState f = run_with_observer(s, integ, 100000, nullptr);
    EXPECT_LT(rel_err(integ.energy(f), E0), 1e-10);
    EXPECT_LT(rel_err(f.J, s.J), 1e-10);
    EXPECT_LT((f.body_frame().transpose() * f.body_frame() - Mat3::Identity()).norm(), 1e-9);
}

TEST(ExactDynamics, SecularFrequencyOfPointCharge)
{
    const double w = two_pi * 1e6;
    const System sys = point_charge(0.01, w);
    const double wz = secular_frequency(sys.trap, sys.particle.charges.q, sys.particle.mass, ez());
    SystemState s;
    s.R = Vec3(0, 0, 1e-5);
    s.R += micromotion_amplitudes(sys.trap, sys.particle, s.R, Mat3::Identity()).eps0;
    Integrator integ(sys, IntegratorConfig{64, 0, 10.0}, Mode::exact);
    const long steps = static_cast<long>(12 * two_pi / wz / integ.dt());
    std::vector<double> z;
    run_with_observer(s, integ, steps, [&](long, const SystemState& st) { z.push_back(st.R.z()); });
    const TimeSeries avg = cycle_average(TimeSeries::single(z, integ.dt()), w);
    const auto& c = avg.columns[0];
    std::vector<double> crossings;
    for (std::size_t i = 1; i < c.size(); ++i)
        if ((c[i - 1] < 0) != (c[i] < 0)) crossings.push_back(avg.time(i - 1) + avg.dt * c[i - 1] / (c[i - 1] - c[i]));
    ASSERT_GE(crossings.size(), 10u);
    const double measured = pi * (crossings.size() - 1) / (crossings.back() - crossings.front());
    EXPECT_LT(rel_err(measured, wz), 0.01);
}

TEST(ExactDynamics, MacromotionDeviationShrinksWithDriveFrequency)
{
    // U_ac grows with w_ac so the effective potential is unchanged while all
    // Mathieu parameters shrink as 1/w_ac.
    std::vector<double> dev;
    for (double scale : {1.0, 2.0}) {
        const double w = two_pi * 1e6 * scale;
        const System sys = point_charge(0.02 / scale, w);
        SystemState macro;
        macro.R = Vec3(1e-5, 0, 2e-5);
        SystemState exact = macro;
        exact.R += micromotion_amplitudes(sys.trap, sys.particle, macro.R, Mat3::Identity()).eps0;
        Integrator ie(sys, IntegratorConfig{64, 0, 10.0}, Mode::exact);
        Integrator im(sys, IntegratorConfig{64, 0, 10.0}, Mode::effective);
        std::vector<double> ze{exact.R.z()}, zm{macro.R.z()};
        const long steps = 64L * static_cast<long>(150 * scale);
        for (long k = 0; k < steps; ++k) {
            ie.step(exact);
            im.step(macro);
            ze.push_back(exact.R.z());
            zm.push_back(macro.R.z());
        }
        const auto ae = cycle_average(TimeSeries::single(ze, ie.dt()), w).columns[0];
        const auto am = cycle_average(TimeSeries::single(zm, ie.dt()), w).columns[0];
        double num = 0, den = 0;
        for (std::size_t i = 0; i < ae.size(); ++i) {
            num += (ae[i] - am[i]) * (ae[i] - am[i]);
            den += am[i] * am[i];
        }
        dev.push_back(std::sqrt(num / den));
    }
    EXPECT_LT(dev[0], 0.05);
    EXPECT_GT(dev[0] / dev[1], 3.0);
}

TEST(ExactDynamics, LosslessEnergyConservation)
{
    const System sys = lossless_coupled();
    SystemState s;
    s.R = Vec3(2e-7, -1e-7, 3e-7);
    s.P = Vec3(1e-19, 2e-19, -1e-19);
    s.set_orientation(Orientation::from_euler(0.3, 1.2, 0.7));
    s.J = Vec3(1e-30, -2e-30, 3e-30);
    s.Q = 1e-20;
    Integrator integ(sys, IntegratorConfig{256, 0, 10.0}, Mode::exact);
    const double H0 = integ.energy(s);
    double worst = 0.0, scale = std::abs(H0);
    run_with_observer(s, integ, 1000L * 256, [&](long, const SystemState& st) {
        const double H = integ.energy(st);
        scale = std::max(scale, std::abs(H));
        worst = std::max(worst, std::abs(H - st.drive_work - H0));
    });
    EXPECT_LT(worst / scale, 1e-8);
}

TEST(ExactDynamics, FourthOrderConvergence)
{
    const System sys = lossless_coupled();
    SystemState s;
    s.R = Vec3(2e-7, -1e-7, 3e-7);
    s.set_orientation(Orientation::from_euler(0.3, 1.2, 0.7));
    s.J = Vec3(1e-30, -2e-30, 3e-30);
    const double duration = 20 * sys.trap.period();
    auto final_state = [&](int spc) {
        Integrator integ(sys, IntegratorConfig{spc, 0, 10.0}, Mode::exact);
        return run_with_observer(s, integ, step_count(duration, integ.dt()), nullptr);
    };
    const SystemState ref = final_state(512);
    const SystemState a = final_state(64), b = final_state(128);
    const double ea = (a.R - ref.R).norm(), eb = (b.R - ref.R).norm();
    EXPECT_GT(ea / eb, 12.0);
    EXPECT_LT(ea / eb, 20.0);
}

TEST(EffectiveDynamics, StationaryAtMinimum)
{
    Particle pt = fig2_particle();
    const TrapGeometry g = fig2_trap();
    MinimizerOptions opt;
    opt.length_scale = 1e-8;
    const Minimum mn = minimize_effective_potential(g, pt, StartPoint{Vec3::Zero(), Orientation::from_euler(0.1, 0.5, 0.2)}, opt);
    System sys;
    sys.particle = pt;
    sys.trap = g;
    SystemState s;
    s.R = mn.r;
    s.set_orientation(mn.orientation);
    Integrator integ(sys, IntegratorConfig{}, Mode::effective);
    const SystemState f = run_with_observer(s, integ, 100 * 256, nullptr);
    EXPECT_LT((f.R - s.R).norm(), 1e-6 * 12e-9);
    EXPECT_LT((f.body_frame() - s.body_frame()).norm(), 1e-6);
}

TEST(EffectiveDynamics, EnergyConservation)
{
    System sys;
    sys.particle = fig2_particle();
    sys.trap = fig2_trap();
    SystemState s;
    s.R = Vec3(1e-8, -2e-8, 3e-8);
    s.set_orientation(Orientation::from_euler(0.3, 1.2, 0.7));
    s.J = Vec3(1e-31, -2e-31, 3e-31);
    Integrator integ(sys, IntegratorConfig{64, 0, 10.0}, Mode::effective);
    const double E0 = integ.energy(s);
    double worst = 0.0;
    run_with_observer(s, integ, 1000000, [&](long k, const SystemState& st) {
        if (k % 1000 == 0) worst = std::max(worst, std::abs(integ.energy(st) - E0));
    });
    EXPECT_LT(worst / std::abs(E0), 1e-9);
}

TEST(StochasticDynamics, ReducesToDeterministicWithoutNoise)
{
    const System sys = lossless_coupled();
    SystemState s;
    s.R = Vec3(2e-7, -1e-7, 3e-7);
    s.P = Vec3(1e-19, 2e-19, -1e-19);
    s.set_orientation(Orientation::from_euler(0.3, 1.2, 0.7));
    s.J = Vec3(1e-30, -2e-30, 3e-30);
    std::vector<double> diffs;
    for (double dt : {1e-10, 0.5e-10}) {
        SystemState a = s, b = s;
        CounterRng rng(1);
        step_exact(sys, a, dt);
        step_stochastic(sys, b, dt, rng);
        EXPECT_EQ(rng.counter(), 0u);
        diffs.push_back((a.P - b.P).norm());
    }
    EXPECT_NEAR(diffs[0] / diffs[1], 4.0, 0.4);
}

TEST(StochasticDynamics, OrnsteinUhlenbeckEquipartition)
{
    System sys = free_rotor(InertiaSpec::isotropic(1e-38), 1.0);
    sys.particle.mass = 1e-18;
    const double T = 300.0;
    GasCoupling gas;
    const double dt = sys.trap.period() / 64;
    gas.Gamma_cm = Vec3::Constant(0.01 / dt);
    gas.T_gas = T;
    sys.gas = gas;
    Integrator integ(sys, IntegratorConfig{64, 42, 1e30}, Mode::stochastic);
    SystemState s;
    const long decorrelate = 300;  // three relaxation times
    std::vector<double> ek;
    s = run_with_observer(s, integ, 2000, nullptr);
    for (int k = 0; k < 10000; ++k) {
        s = run_with_observer(s, integ, decorrelate, nullptr);
        ek.push_back(s.P.z() * s.P.z() / (2 * sys.particle.mass));
    }
    double mean = 0, var = 0;
    for (double x : ek) mean += x;
    mean /= ek.size();
    for (double x : ek) var += (x - mean) * (x - mean);
    const double sigma = std::sqrt(var / (ek.size() - 1) / ek.size());
    EXPECT_LT(std::abs(mean - 0.5 * boltzmann * T), 3 * sigma + 0.01 * 0.5 * boltzmann * T);
}

TEST(RunTrajectory, StrideAndZeroDuration)
{
    const System sys = point_charge(0.01, two_pi * 1e6);
    SystemState s;
    s.R = Vec3(1e-6, 0, 0);
    const IntegratorConfig cfg{64, 0, 10.0};
    EXPECT_EQ(run_trajectory(s, sys, cfg, Mode::exact, 0.0).size(), 1u);
    const double dt = cfg.dt(sys.trap);
    for (int stride : {1, 3, 7, 10}) EXPECT_EQ(run_trajectory(s, sys, cfg, Mode::exact, 100 * dt, stride).size(),
                                               static_cast<std::size_t>(100 / stride + 1));
    EXPECT_THROW(run_trajectory(s, sys, cfg, Mode::exact, 10 * dt, 0), DomainError);
}

TEST(RunTrajectory, SeededDeterminism)
{
    System sys = lossless_coupled();
    sys.circuit_dissipation = true;
    sys.circuit->circuit.T = 4.0;
    sys.gas = GasCoupling{Vec3::Constant(1e3), Vec3::Constant(1e3), 300.0};
    SystemState s;
    s.R = Vec3(2e-7, -1e-7, 3e-7);
    const IntegratorConfig cfg{64, 1234, 10.0};
    const auto a = run_trajectory(s, sys, cfg, Mode::stochastic, 200 * sys.trap.period(), 64);
    const auto b = run_trajectory(s, sys, cfg, Mode::stochastic, 200 * sys.trap.period(), 64);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_TRUE(bitwise_equal(a[i], b[i])) << "sample " << i;
    const auto c = run_trajectory(s, sys, IntegratorConfig{64, 1235, 10.0}, Mode::stochastic,
                                  200 * sys.trap.period(), 64);
    EXPECT_FALSE(bitwise_equal(a.back(), c.back()));
}

TEST(RunTrajectory, EscapeIsReported)
{
    const System sys = point_charge(0.01, two_pi * 1e6);
    SystemState s;
    s.P = Vec3(1.0, 0, 0) * sys.particle.mass * 1e4;
    try {
        run_trajectory(s, sys, IntegratorConfig{64, 0, 10.0}, Mode::exact, 1e-3);
        FAIL() << "expected an escape";
    } catch (const EscapeError& err) {
        EXPECT_GT(err.time(), 0.0);
    }
}
