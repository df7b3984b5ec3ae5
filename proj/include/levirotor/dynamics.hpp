#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "charge_model.hpp"
#include "circuit_coupling.hpp"
#include "constants.hpp"
#include "errors.hpp"
#include "image_charges.hpp"
#include "linalg.hpp"
#include "random.hpp"
#include "rotor_kinematics.hpp"
#include "trap_fields.hpp"

namespace levirotor {

// Linear gas friction with matched thermal noise. Center-of-mass rates act on
// the space-frame momentum components, rotational rates on the body-frame
// angular momentum components.
struct GasCoupling {
    Vec3 Gamma_cm = Vec3::Zero();
    Vec3 Gamma_rot = Vec3::Zero();
    double T_gas = 0.0;

    void validate() const
    {
        if ((Gamma_cm.array() < 0.0).any() || (Gamma_rot.array() < 0.0).any())
            throw DomainError("gas damping rates must be non-negative");
        if (!(T_gas >= 0.0)) throw DomainError("gas temperature must be non-negative");
    }
};

struct CircuitCoupling {
    PickupConfig pickup;
    CircuitSpec circuit;
};

struct System {
    Particle particle;
    TrapGeometry trap;
    std::optional<CircuitCoupling> circuit;
    std::optional<PlateCapacitor> plates;
    std::optional<GasCoupling> gas;
    bool circuit_dissipation = true;

    void validate() const
    {
        particle.validate();
        trap.validate();
        if (circuit) {
            levirotor::validate(circuit->pickup);
            circuit->circuit.validate();
        }
        if (plates) plates->validate();
        if (gas) gas->validate();
    }
};

struct SystemState {
    double t = 0.0;
    Vec3 R = Vec3::Zero();
    Vec3 P = Vec3::Zero();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Vec3 J = Vec3::Zero();
    double Q = 0.0;
    double Phi = 0.0;
    // Accumulated explicit-time work of the drive, integral of dV_tr/dt.
    double drive_work = 0.0;

    Mat3 body_frame() const { return rotation.toRotationMatrix(); }
    Orientation orientation() const { return Orientation::from_matrix(body_frame()); }

    void set_orientation(const Orientation& o) { rotation = Eigen::Quaterniond(o.body_frame()).normalized(); }
    void set_orientation(const Mat3& frame) { rotation = Eigen::Quaterniond(frame).normalized(); }
};

enum class Mode { exact, effective, stochastic };

inline const char* to_string(Mode m)
{
    switch (m) {
        case Mode::exact: return "exact";
        case Mode::effective: return "effective";
        case Mode::stochastic: return "stochastic";
    }
    return "exact";
}

struct IntegratorConfig {
    int steps_per_cycle = 256;
    std::uint64_t seed = 0;
    double escape_radius = 10.0;  // in units of ell0

    void validate() const
    {
        if (steps_per_cycle < 64) throw DomainError("steps_per_cycle must be at least 64");
        if (!(escape_radius > 0.0)) throw DomainError("escape radius must be positive");
    }

    double dt(const TrapGeometry& g) const { return g.period() / steps_per_cycle; }
};

namespace detail {

using Packed = Eigen::Matrix<double, 18, 1>;

inline Packed pack(const SystemState& s)
{
    Packed x;
    x.segment<3>(0) = s.R;
    x.segment<3>(3) = s.P;
    x.segment<4>(6) = s.rotation.coeffs();
    x.segment<3>(10) = s.J;
    x(13) = s.Q;
    x(14) = s.Phi;
    x(15) = s.drive_work;
    x(16) = 0.0;
    x(17) = 0.0;
    return x;
}

inline void unpack(const Packed& x, SystemState& s)
{
    s.R = x.segment<3>(0);
    s.P = x.segment<3>(3);
    s.rotation.coeffs() = x.segment<4>(6);
    s.rotation.normalize();
    s.J = x.segment<3>(10);
    s.Q = x(13);
    s.Phi = x(14);
    s.drive_work = x(15);
}

inline Eigen::Quaterniond quaternion_of(const Packed& x)
{
    Eigen::Quaterniond q;
    q.coeffs() = x.segment<4>(6);
    return q;
}

}  // namespace detail

// Forces, torques and circuit rates of the full system at one instant.
struct Evaluation {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    Vec3 omega = Vec3::Zero();
    double dQ = 0.0;
    double dPhi = 0.0;
    double drive_power = 0.0;
};

inline Evaluation evaluate_exact(const System& sys, double t, const Vec3& R, const Mat3& frame, const Vec3& J,
                                 double Q, double Phi)
{
    const SpaceMultipoles m = space_frame_multipoles(sys.particle.charges, frame);
    const Vec3 inv = sys.particle.inertia.moments().cwiseInverse();
    Evaluation ev;
    ev.omega = frame * inv.cwiseProduct(frame.transpose() * J);
    const ForceTorque ft = trap_force_torque(sys.trap, m, R, t);
    ev.force = ft.force;
    ev.torque = ft.torque;
    ev.drive_power = trap_energy_rate(sys.trap, m, R, t);
    if (sys.plates) {
        const ForceTorque im = image_force_torque(*sys.plates, m, R);
        ev.force += im.force;
        ev.torque += im.torque;
    }
    if (sys.circuit) {
        const CircuitSpec& c = sys.circuit->circuit;
        const double Qind = induced_charge(sys.circuit->pickup, m, R);
        const double Uz = (Q + Qind) / c.C;
        ev.force -= Uz * induced_charge_gradient(sys.circuit->pickup, m, R);
        ev.torque -= Uz * torque_per_voltage(sys.circuit->pickup, m, R);
        const CircuitRate cr = circuit_rhs(c, CircuitState{Q, Phi}, Qind, 0.0, sys.circuit_dissipation);
        ev.dQ = cr.dQ;
        ev.dPhi = cr.dPhi;
    }
    return ev;
}

inline Evaluation evaluate_effective(const System& sys, const Vec3& R, const Mat3& frame, const Vec3& J)
{
    const Vec3 inv = sys.particle.inertia.moments().cwiseInverse();
    Evaluation ev;
    ev.omega = frame * inv.cwiseProduct(frame.transpose() * J);
    const ForceTorque ft = effective_force_torque(sys.trap, sys.particle, R, frame);
    ev.force = ft.force;
    ev.torque = ft.torque;
    if (sys.plates) {
        const ForceTorque im = image_force_torque(*sys.plates, space_frame_multipoles(sys.particle.charges, frame), R);
        ev.force += im.force;
        ev.torque += im.torque;
    }
    return ev;
}

namespace detail {

inline Packed derivative(const System& sys, double t, const Packed& x, bool effective)
{
    const Eigen::Quaterniond q = quaternion_of(x);
    const double qn2 = q.squaredNorm();
    // Rotation matrix of the normalized quaternion without an explicit sqrt.
    const Mat3 frame = q.toRotationMatrix() / qn2 + (1.0 - 1.0 / qn2) * Mat3::Identity();
    const Vec3 R = x.segment<3>(0);
    const Vec3 J = x.segment<3>(10);
    const Evaluation ev = effective ? evaluate_effective(sys, R, frame, J)
                                    : evaluate_exact(sys, t, R, frame, J, x(13), x(14));
    Packed d;
    d.segment<3>(0) = x.segment<3>(3) / sys.particle.mass;
    d.segment<3>(3) = ev.force;
    // qdot = 1/2 (0, omega) * q
    const Eigen::Quaterniond w(0.0, ev.omega.x(), ev.omega.y(), ev.omega.z());
    d.segment<4>(6) = 0.5 * (w * q).coeffs();
    d.segment<3>(10) = ev.torque;
    d(13) = ev.dQ;
    d(14) = ev.dPhi;
    d(15) = ev.drive_power;
    d(16) = 0.0;
    d(17) = 0.0;
    return d;
}

inline void rk4(const System& sys, SystemState& s, double dt, bool effective)
{
    const Packed x = pack(s);
    const double t = s.t;
    const Packed k1 = derivative(sys, t, x, effective);
    const Packed k2 = derivative(sys, t + 0.5 * dt, x + 0.5 * dt * k1, effective);
    const Packed k3 = derivative(sys, t + 0.5 * dt, x + 0.5 * dt * k2, effective);
    const Packed k4 = derivative(sys, t + dt, x + dt * k3, effective);
    unpack(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), s);
    s.t = t + dt;
}

}  // namespace detail

inline void check_state(const System& sys, const SystemState& s, double escape_radius)
{
    if (!s.R.allFinite() || !s.P.allFinite() || !s.J.allFinite() || !std::isfinite(s.Q) || !std::isfinite(s.Phi)
        || !s.rotation.coeffs().allFinite())
        throw NumericalError("non-finite state during integration", s.t);
    if (s.R.norm() > escape_radius * sys.trap.ell0)
        throw EscapeError("particle left the escape sphere", s.t);
}

inline void step_exact(const System& sys, SystemState& s, double dt) { detail::rk4(sys, s, dt, false); }

inline void step_effective(const System& sys, SystemState& s, double dt) { detail::rk4(sys, s, dt, true); }

// Euler-Maruyama step: exact forces evaluated at the start of the step, gas
// friction and noise, Johnson-Nyquist noise on the circuit.
inline void step_stochastic(const System& sys, SystemState& s, double dt, CounterRng& rng)
{
    const Mat3 frame = s.body_frame();
    const Evaluation ev = evaluate_exact(sys, s.t, s.R, frame, s.J, s.Q, s.Phi);
    const double m = sys.particle.mass;

    Vec3 dP = ev.force * dt;
    Vec3 dJ = ev.torque * dt;
    if (sys.gas) {
        const GasCoupling& g = *sys.gas;
        const double kT = boltzmann * g.T_gas;
        for (int i = 0; i < 3; ++i) {
            if (g.Gamma_cm(i) > 0.0)
                dP(i) += -g.Gamma_cm(i) * s.P(i) * dt + std::sqrt(2.0 * m * g.Gamma_cm(i) * kT * dt) * rng.gaussian();
        }
        if ((g.Gamma_rot.array() > 0.0).any()) {
            const Vec3 Jb = frame.transpose() * s.J;
            const Vec3 I = sys.particle.inertia.moments();
            Vec3 dJb = Vec3::Zero();
            for (int i = 0; i < 3; ++i) {
                if (g.Gamma_rot(i) > 0.0)
                    dJb(i) = -g.Gamma_rot(i) * Jb(i) * dt
                             + std::sqrt(2.0 * I(i) * g.Gamma_rot(i) * kT * dt) * rng.gaussian();
            }
            dJ += frame * dJb;
        }
    }
    double dQ = ev.dQ * dt;
    double dPhi = ev.dPhi * dt;
    if (sys.circuit && sys.circuit_dissipation) {
        const CircuitSpec& c = sys.circuit->circuit;
        const double sigma = std::sqrt(noise_intensity(c) * dt);
        if (sigma > 0.0) {
            if (c.topology == Topology::series)
                dPhi += sigma * rng.gaussian();
            else
                dQ += sigma * rng.gaussian();
        }
    }

    s.R += s.P / m * dt;
    s.P += dP;
    const Vec3 phi = ev.omega * dt;
    const double angle = phi.norm();
    if (angle > 0.0) s.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, phi / angle)) * s.rotation;
    s.rotation.normalize();
    s.J += dJ;
    s.Q += dQ;
    s.Phi += dPhi;
    s.drive_work += ev.drive_power * dt;
    s.t += dt;
}

// Hamiltonian of the full system, H = P^2/2m + J.I^-1 J/2 + V_tr + V_im + Phi^2/2L + (Q+Q_ind)^2/2C.
inline double total_energy(const System& sys, const SystemState& s)
{
    const Mat3 frame = s.body_frame();
    const SpaceMultipoles m = space_frame_multipoles(sys.particle.charges, frame);
    const Vec3 Jb = frame.transpose() * s.J;
    double H = s.P.squaredNorm() / (2.0 * sys.particle.mass)
               + 0.5 * Jb.cwiseProduct(sys.particle.inertia.moments().cwiseInverse()).dot(Jb)
               + trap_energy(sys.trap, m, s.R, s.t);
    if (sys.plates) H += image_potential(*sys.plates, m, s.R);
    if (sys.circuit) {
        const CircuitSpec& c = sys.circuit->circuit;
        const double Qind = induced_charge(sys.circuit->pickup, m, s.R);
        H += s.Phi * s.Phi / (2.0 * c.L) + (s.Q + Qind) * (s.Q + Qind) / (2.0 * c.C);
    }
    return H;
}

// Macromotion energy: kinetic terms plus V_eff (and images).
inline double effective_energy(const System& sys, const SystemState& s)
{
    const Mat3 frame = s.body_frame();
    const Vec3 Jb = frame.transpose() * s.J;
    double H = s.P.squaredNorm() / (2.0 * sys.particle.mass)
               + 0.5 * Jb.cwiseProduct(sys.particle.inertia.moments().cwiseInverse()).dot(Jb)
               + effective_potential(sys.trap, sys.particle, s.R, frame);
    if (sys.plates) H += image_potential(*sys.plates, space_frame_multipoles(sys.particle.charges, frame), s.R);
    return H;
}

// Coordinates with the capacitor charge Q' = Q + Q_ind as circuit variable:
// P' = P - Phi grad Q_ind, J' = J - Phi T.
struct TransformedState {
    double Qp = 0.0;
    Vec3 Pp = Vec3::Zero();
    Vec3 Jp = Vec3::Zero();
};

inline TransformedState to_capacitor_coordinates(const System& sys, const SystemState& s)
{
    if (!sys.circuit) throw DomainError("capacitor coordinates need a circuit");
    const SpaceMultipoles m = space_frame_multipoles(sys.particle.charges, s.body_frame());
    const PickupConfig& pk = sys.circuit->pickup;
    return {s.Q + induced_charge(pk, m, s.R), s.P - s.Phi * induced_charge_gradient(pk, m, s.R),
            s.J - s.Phi * torque_per_voltage(pk, m, s.R)};
}

// H' in capacitor coordinates, evaluated at the same R, orientation, Phi and t.
inline double transformed_energy(const System& sys, const SystemState& s, const TransformedState& ts)
{
    if (!sys.circuit) throw DomainError("capacitor coordinates need a circuit");
    const Mat3 frame = s.body_frame();
    const SpaceMultipoles m = space_frame_multipoles(sys.particle.charges, frame);
    const PickupConfig& pk = sys.circuit->pickup;
    const CircuitSpec& c = sys.circuit->circuit;
    const Vec3 P = ts.Pp + s.Phi * induced_charge_gradient(pk, m, s.R);
    const Vec3 Jb = frame.transpose() * (ts.Jp + s.Phi * torque_per_voltage(pk, m, s.R));
    double H = P.squaredNorm() / (2.0 * sys.particle.mass)
               + 0.5 * Jb.cwiseProduct(sys.particle.inertia.moments().cwiseInverse()).dot(Jb)
               + trap_energy(sys.trap, m, s.R, s.t) + s.Phi * s.Phi / (2.0 * c.L) + ts.Qp * ts.Qp / (2.0 * c.C);
    if (sys.plates) H += image_potential(*sys.plates, m, s.R);
    return H;
}

// Owns the noise stream and steps one trajectory.
class Integrator {
public:
    Integrator(const System& sys, const IntegratorConfig& cfg, Mode mode)
        : sys_(sys), cfg_(cfg), mode_(mode), rng_(cfg.seed), dt_(cfg.dt(sys.trap))
    {
        sys_.validate();
        cfg_.validate();
    }

    double dt() const { return dt_; }
    Mode mode() const { return mode_; }
    const System& system() const { return sys_; }
    System& system() { return sys_; }

    void step(SystemState& s)
    {
        switch (mode_) {
            case Mode::exact: step_exact(sys_, s, dt_); break;
            case Mode::effective: step_effective(sys_, s, dt_); break;
            case Mode::stochastic: step_stochastic(sys_, s, dt_, rng_); break;
        }
        check_state(sys_, s, cfg_.escape_radius);
    }

    double energy(const SystemState& s) const
    {
        return mode_ == Mode::effective ? effective_energy(sys_, s) : total_energy(sys_, s);
    }

private:
    System sys_;
    IntegratorConfig cfg_;
    Mode mode_;
    CounterRng rng_;
    double dt_;
};

inline long step_count(double duration, double dt)
{
    if (duration < 0.0) throw DomainError("duration must be non-negative");
    return static_cast<long>(std::floor(duration / dt + 1e-9));
}

// Steps for `duration`, recording the initial state and every `stride`-th state.
inline std::vector<SystemState> run_trajectory(const SystemState& initial, const System& sys,
                                               const IntegratorConfig& cfg, Mode mode, double duration,
                                               int stride = 1)
{
    if (stride < 1) throw DomainError("output stride must be at least 1");
    Integrator integ(sys, cfg, mode);
    const long n = step_count(duration, integ.dt());
    std::vector<SystemState> out;
    out.reserve(static_cast<std::size_t>(n / stride + 1));
    SystemState s = initial;
    out.push_back(s);
    for (long k = 1; k <= n; ++k) {
        integ.step(s);
        if (k % stride == 0) out.push_back(s);
    }
    return out;
}

// Same stepping, handing every state (including the initial one) to a callback.
inline SystemState run_with_observer(const SystemState& initial, Integrator& integ, long steps,
                                     const std::function<void(long, const SystemState&)>& observe)
{
    SystemState s = initial;
    if (observe) observe(0, s);
    for (long k = 1; k <= steps; ++k) {
        integ.step(s);
        if (observe) observe(k, s);
    }
    return s;
}

}  // namespace levirotor
