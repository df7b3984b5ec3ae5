#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "charge_model.hpp"
#include "constants.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rotor_kinematics.hpp"

namespace levirotor {

struct Endcap {
    Mat3 A = Vec3(1.0, 1.0, -2.0).asDiagonal();
    double ell_ec = 0.0;
    double U_ec = 0.0;
    double k_ec = 1.0;
};

struct TrapGeometry {
    Mat3 A = Mat3::Zero();
    double ell0 = 0.0;
    double U_dc = 0.0;
    double U_ac = 0.0;
    double omega_ac = 0.0;
    std::optional<Endcap> endcap;
    Vec3 E_hom = Vec3::Zero();

    double voltage(double t) const { return U_dc + U_ac * std::cos(omega_ac * t); }
    double voltage_rate(double t) const { return -U_ac * omega_ac * std::sin(omega_ac * t); }
    double period() const { return two_pi / omega_ac; }

    void validate() const
    {
        if (!(ell0 > 0.0)) throw DomainError("trap length scale ell0 must be positive");
        if (!(omega_ac > 0.0)) throw DomainError("drive frequency must be positive");
        if (!is_symmetric(A)) throw DomainError("trap geometry tensor must be symmetric");
        if (!is_traceless(A)) throw DomainError("trap geometry tensor must be traceless");
        if (endcap) {
            if (!(endcap->ell_ec > 0.0)) throw DomainError("endcap distance must be positive");
            if (endcap->k_ec > 1.0) throw DomainError("endcap shape factor k_ec must not exceed 1");
        }
    }
};

inline TrapGeometry ring_trap(double ell0, double U_dc, double U_ac, double omega_ac)
{
    TrapGeometry g;
    g.A = Vec3(1.0, 1.0, -2.0).asDiagonal();
    g.ell0 = ell0;
    g.U_dc = U_dc;
    g.U_ac = U_ac;
    g.omega_ac = omega_ac;
    return g;
}

inline TrapGeometry linear_trap(double ell0, double U_ac, double omega_ac, std::optional<Endcap> endcap)
{
    TrapGeometry g;
    g.A = Vec3(-1.0, 1.0, 0.0).asDiagonal();
    g.ell0 = ell0;
    g.U_ac = U_ac;
    g.omega_ac = omega_ac;
    g.endcap = endcap;
    return g;
}

inline Mat3 induced_quadrupole(double U, double a, const TrapGeometry& trap)
{
    return induced_quadrupole(U, a, trap.A, trap.ell0);
}

// Static electrode potential phi(r) = (U / 2 ell^2) r.A r and the energy,
// force and torque it exerts on a multipole expansion.
struct QuadrupoleComponent {
    Mat3 A;
    double ell;
    double U;

    double energy(const SpaceMultipoles& m, const Vec3& R) const
    {
        const Vec3 AR = A * R;
        return U / (ell * ell) * (0.5 * m.q * R.dot(AR) + m.p.dot(AR) + (A * m.Q).trace() / 6.0);
    }
    Vec3 force(const SpaceMultipoles& m, const Vec3& R) const
    {
        return -U / (ell * ell) * (m.q * (A * R) + A * m.p);
    }
    Vec3 torque(const SpaceMultipoles& m, const Vec3& R) const
    {
        return -U / (ell * ell) * (m.p.cross(A * R) - axial(A * m.Q) / 3.0);
    }
};

// Endcap block as a static quadrupole: reproduces the endcap potential
// -kU/(q l^2) (qr+p).A_ec(qr+p) + kU/(q l^2)(p3^2 - qQ3) m.A_ec m.
inline QuadrupoleComponent endcap_component(const Endcap& e)
{
    return {e.A, e.ell_ec, -2.0 * e.k_ec * e.U_ec};
}

inline Vec3 trap_field(const TrapGeometry& g, const Vec3& R, double t)
{
    Vec3 E = -g.voltage(t) * (g.A * R) / (g.ell0 * g.ell0) + g.E_hom;
    if (g.endcap) {
        const Endcap& e = *g.endcap;
        E += 2.0 * e.k_ec * e.U_ec / (e.ell_ec * e.ell_ec) * (e.A * R);
    }
    return E;
}

inline double trap_field_potential(const TrapGeometry& g, const Vec3& R, double t)
{
    double phi = 0.5 * g.voltage(t) * R.dot(g.A * R) / (g.ell0 * g.ell0) - g.E_hom.dot(R);
    if (g.endcap) {
        const Endcap& e = *g.endcap;
        phi -= e.k_ec * e.U_ec * R.dot(e.A * R) / (e.ell_ec * e.ell_ec);
    }
    return phi;
}

struct ForceTorque {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
};

// Instantaneous trap potential energy of the multipoles (drive + endcap + uniform field).
inline double trap_energy(const TrapGeometry& g, const SpaceMultipoles& m, const Vec3& R, double t)
{
    double v = QuadrupoleComponent{g.A, g.ell0, g.voltage(t)}.energy(m, R);
    if (g.endcap) v += endcap_component(*g.endcap).energy(m, R);
    return v - g.E_hom.dot(m.q * R + m.p);
}

// Explicit time derivative of trap_energy (only the drive voltage depends on t).
inline double trap_energy_rate(const TrapGeometry& g, const SpaceMultipoles& m, const Vec3& R, double t)
{
    return QuadrupoleComponent{g.A, g.ell0, g.voltage_rate(t)}.energy(m, R);
}

inline ForceTorque trap_force_torque(const TrapGeometry& g, const SpaceMultipoles& m, const Vec3& R, double t)
{
    const QuadrupoleComponent drive{g.A, g.ell0, g.voltage(t)};
    ForceTorque ft{drive.force(m, R) + m.q * g.E_hom, drive.torque(m, R) + m.p.cross(g.E_hom)};
    if (g.endcap) {
        const QuadrupoleComponent ec = endcap_component(*g.endcap);
        ft.force += ec.force(m, R);
        ft.torque += ec.torque(m, R);
    }
    return ft;
}

inline ForceTorque trap_force_torque(const TrapGeometry& g, const MultipoleDistribution& dist,
                                     const Vec3& R, const Orientation& o, double t)
{
    return trap_force_torque(g, space_frame_multipoles(dist, o), R, t);
}

// K = p x A r - (1/3) sum_i a_i a_i x Q a_i, the AC torque amplitude per unit voltage.
inline Vec3 ac_torque_vector(const Mat3& A, const SpaceMultipoles& m, const Vec3& r)
{
    return m.p.cross(A * r) - axial(A * m.Q) / 3.0;
}

struct MicromotionAmplitudes {
    Vec3 eps0 = Vec3::Zero();
    Vec3 delta0 = Vec3::Zero();
};

inline MicromotionAmplitudes micromotion_amplitudes(const TrapGeometry& g, const Particle& particle,
                                                    const Vec3& r, const Mat3& frame)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const Mat3 Iinv = frame * particle.inertia.moments().cwiseInverse().asDiagonal() * frame.transpose();
    const double w2l2 = g.omega_ac * g.omega_ac * g.ell0 * g.ell0;
    return {g.U_ac / (particle.mass * w2l2) * (g.A * (m.q * r + m.p)),
            g.U_ac / w2l2 * (Iinv * ac_torque_vector(g.A, m, r))};
}

inline MicromotionAmplitudes micromotion_amplitudes(const TrapGeometry& g, const Particle& particle,
                                                    const Vec3& r, const Orientation& o)
{
    return micromotion_amplitudes(g, particle, r, o.body_frame());
}

struct MathieuParameters {
    double charge = 0.0;           // U q / (m w^2 l0^2)
    double dipole = 0.0;           // U |p| / (m w^2 l0^2 l_cm)
    double rot_quadrupole = 0.0;   // max U |Q_lm| / (I_j w^2 l0^2)
    double rot_dipole = 0.0;       // max U |p| l_cm / (I_j w^2 l0^2)

    static constexpr double warning_threshold = 0.3;

    double max() const { return std::max({std::abs(charge), dipole, rot_quadrupole, rot_dipole}); }
    bool warning() const { return max() > warning_threshold; }
    std::string warning_message() const
    {
        return warning() ? "micromotion expansion questionable: a Mathieu parameter exceeds 0.3" : "";
    }
};

inline MathieuParameters mathieu_parameters(const TrapGeometry& g, const Particle& particle, double ell_cm)
{
    if (!(ell_cm > 0.0)) throw DomainError("center-of-mass length scale must be positive");
    const double w2l2 = g.omega_ac * g.omega_ac * g.ell0 * g.ell0;
    const double Imin = particle.inertia.moments().minCoeff();
    const double pnorm = particle.charges.p_body.norm();
    MathieuParameters mp;
    mp.charge = g.U_ac * particle.charges.q / (particle.mass * w2l2);
    mp.dipole = g.U_ac * pnorm / (particle.mass * w2l2 * ell_cm);
    mp.rot_quadrupole = g.U_ac * max_abs(particle.charges.Q_body) / (Imin * w2l2);
    mp.rot_dipole = g.U_ac * pnorm * ell_cm / (Imin * w2l2);
    return mp;
}

namespace detail {

inline Mat3 space_inverse_inertia(const Particle& particle, const Mat3& frame)
{
    return frame * particle.inertia.moments().cwiseInverse().asDiagonal() * frame.transpose();
}

}  // namespace detail

// Static part of the effective potential: DC drive, endcaps and uniform field.
inline double static_potential(const TrapGeometry& g, const SpaceMultipoles& m, const Vec3& r)
{
    double v = QuadrupoleComponent{g.A, g.ell0, g.U_dc}.energy(m, r);
    if (g.endcap) v += endcap_component(*g.endcap).energy(m, r);
    return v - g.E_hom.dot(m.q * r + m.p);
}

inline double effective_potential(const TrapGeometry& g, const Particle& particle, const Vec3& r,
                                  const Mat3& frame)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const Mat3 Iinv = detail::space_inverse_inertia(particle, frame);
    const double c = g.U_ac * g.U_ac / (4.0 * g.omega_ac * g.omega_ac * std::pow(g.ell0, 4));
    const Vec3 a = g.A * (m.q * r + m.p);
    const Vec3 K = ac_torque_vector(g.A, m, r);
    return static_potential(g, m, r) + c * a.squaredNorm() / particle.mass + c * K.dot(Iinv * K);
}

inline double effective_potential(const TrapGeometry& g, const Particle& particle, const Vec3& r,
                                  const Orientation& o)
{
    return effective_potential(g, particle, r, o.body_frame());
}

inline ForceTorque effective_force_torque(const TrapGeometry& g, const Particle& particle, const Vec3& r,
                                          const Mat3& frame)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const MicromotionAmplitudes mm = micromotion_amplitudes(g, particle, r, frame);
    const Vec3& e0 = mm.eps0;
    const Vec3& d0 = mm.delta0;
    const double h = g.U_ac / (2.0 * g.ell0 * g.ell0);
    const Mat3& A = g.A;
    const Mat3 D = skew(d0);

    const QuadrupoleComponent dc{A, g.ell0, g.U_dc};
    ForceTorque ft;
    ft.force = dc.force(m, r) - h * (A * (m.q * e0 + d0.cross(m.p))) + m.q * g.E_hom;
    ft.torque = dc.torque(m, r) + m.p.cross(g.E_hom)
        - h * (d0.cross(m.p).cross(A * r) + m.p.cross(A * e0)
               - axial(A * D * m.Q) / 3.0 + axial(A * m.Q * D) / 3.0);
    if (g.endcap) {
        const QuadrupoleComponent ec = endcap_component(*g.endcap);
        ft.force += ec.force(m, r);
        ft.torque += ec.torque(m, r);
    }
    return ft;
}

inline ForceTorque effective_force_torque(const TrapGeometry& g, const Particle& particle, const Vec3& r,
                                          const Orientation& o)
{
    return effective_force_torque(g, particle, r, o.body_frame());
}

// Terms with exact ~ macro - correction: P = m rdot - dP, J = I omega - dJ.
struct MomentumCorrection {
    Vec3 dP = Vec3::Zero();
    Vec3 dJ = Vec3::Zero();
};

inline MomentumCorrection momentum_micromotion_correction(const TrapGeometry& g, const Particle& particle,
                                                          const Vec3& r, const Mat3& frame, double t)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const double s = std::sin(g.omega_ac * t) * g.U_ac / (g.omega_ac * g.ell0 * g.ell0);
    return {s * (g.A * (m.q * r + m.p)), s * ac_torque_vector(g.A, m, r)};
}

inline MomentumCorrection momentum_micromotion_correction(const TrapGeometry& g, const Particle& particle,
                                                          const Vec3& r, const Orientation& o, double t)
{
    return momentum_micromotion_correction(g, particle, r, o.body_frame(), t);
}

struct LinearTrapStability {
    Mat3 B;
    bool stable;
    double kappa;
};

inline double endcap_parameter(const TrapGeometry& g, double q, double m)
{
    if (!g.endcap) throw DomainError("endcap parameter requires a trap with endcaps");
    const Endcap& e = *g.endcap;
    const double f = g.omega_ac * g.ell0 * g.ell0 / (e.ell_ec * g.U_ac);
    return 4.0 * m * e.k_ec * e.U_ec / q * f * f;
}

inline LinearTrapStability linear_trap_stability(const TrapGeometry& g, double q, double m)
{
    const double kappa = endcap_parameter(g, q, m);
    return {g.A * g.A - kappa * g.endcap->A, kappa > 0.0 && kappa < 1.0, kappa};
}

inline double critical_field(const TrapGeometry& g, const SymmetricParticleSpec& s, double m)
{
    if (s.p3 == 0.0) throw DomainError("critical field is undefined for p3 = 0");
    return std::abs(3.0 * g.U_ac * g.U_ac * (s.p3 * s.p3 - s.q * s.Q3)
                    / (m * s.p3 * g.omega_ac * g.omega_ac * std::pow(g.ell0, 4)));
}

// Secular (pseudopotential) angular frequency of a point charge along unit axis u
// for U_dc = 0: m w^2 = q^2 U^2 |A u|^2 / (2 m w_ac^2 l0^4) plus endcap curvature.
inline double secular_frequency(const TrapGeometry& g, double q, double m, const Vec3& u)
{
    double k = q * q * g.U_ac * g.U_ac * (g.A * u).squaredNorm()
               / (2.0 * m * g.omega_ac * g.omega_ac * std::pow(g.ell0, 4));
    k += q * g.U_dc / (g.ell0 * g.ell0) * u.dot(g.A * u);
    if (g.endcap) {
        const Endcap& e = *g.endcap;
        k += -2.0 * e.k_ec * e.U_ec * q / (e.ell_ec * e.ell_ec) * u.dot(e.A * u);
    }
    if (k <= 0.0) throw DomainError("no restoring pseudopotential along the requested axis");
    return std::sqrt(k / m);
}

}  // namespace levirotor
