#pragma once

#include <cmath>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rotor_kinematics.hpp"

namespace levirotor {

// Body-frame multipole moments about the center of mass.
// Quadrupole convention: Q_ij = sum q (3 r_i r_j - r^2 delta_ij).
struct MultipoleDistribution {
    double q = 0.0;
    Vec3 p_body = Vec3::Zero();
    Mat3 Q_body = Mat3::Zero();

    void validate() const
    {
        if (!std::isfinite(q) || !p_body.allFinite() || !Q_body.allFinite())
            throw DomainError("multipole moments must be finite");
        if (!is_symmetric(Q_body)) throw DomainError("quadrupole tensor must be symmetric");
        if (!is_traceless(Q_body)) throw DomainError("quadrupole tensor must be traceless");
    }
};

struct PointCharge {
    double charge = 0.0;
    Vec3 position = Vec3::Zero();
};

using PointChargeSet = std::vector<PointCharge>;

// Cylindrically symmetric particle: p = p3 m, Q = Q3 (3 m m - 1), m = N3.
struct SymmetricParticleSpec {
    double q = 0.0;
    double p3 = 0.0;
    double Q3 = 0.0;
    double I = 0.0;
    double I3 = 0.0;

    MultipoleDistribution multipoles() const
    {
        MultipoleDistribution d;
        d.q = q;
        d.p_body = Vec3(0.0, 0.0, p3);
        d.Q_body = Q3 * Vec3(-1.0, -1.0, 2.0).asDiagonal();
        return d;
    }

    InertiaSpec inertia() const
    {
        if (!(I > 0.0 && I3 > 0.0)) throw DomainError("symmetric particle needs I, I3 > 0");
        return {I, I, I3};
    }
};

// Rigid charged particle: mass, body-frame multipoles and principal moments.
struct Particle {
    double mass = 0.0;
    MultipoleDistribution charges;
    InertiaSpec inertia;

    void validate() const
    {
        if (!(mass > 0.0)) throw DomainError("particle mass must be positive");
        charges.validate();
        inertia.validate();
    }

    static Particle symmetric(const SymmetricParticleSpec& s, double mass)
    {
        return {mass, s.multipoles(), s.inertia()};
    }
};

// Space-frame moments.
struct SpaceMultipoles {
    double q = 0.0;
    Vec3 p = Vec3::Zero();
    Mat3 Q = Mat3::Zero();
};

inline MultipoleDistribution multipoles_from_point_charges(const PointChargeSet& set)
{
    if (set.empty()) throw DomainError("point-charge set is empty");
    MultipoleDistribution d;
    for (const auto& c : set) {
        if (!std::isfinite(c.charge) || !c.position.allFinite())
            throw DomainError("point charge entries must be finite");
        const Vec3& r = c.position;
        d.q += c.charge;
        d.p_body += c.charge * r;
        d.Q_body += c.charge * (3.0 * r * r.transpose() - r.squaredNorm() * Mat3::Identity());
    }
    return d;
}

inline SpaceMultipoles space_frame_multipoles(const MultipoleDistribution& dist, const Mat3& frame)
{
    return {dist.q, frame * dist.p_body, frame * dist.Q_body * frame.transpose()};
}

inline SpaceMultipoles space_frame_multipoles(const MultipoleDistribution& dist, const Orientation& o)
{
    return space_frame_multipoles(dist, o.body_frame());
}

// Equipotential charged spheroid with semi-axis a along the symmetry axis and
// radius r; d^2 = a^2 - r^2 (negative for oblate shapes).
inline MultipoleDistribution spheroid_quadrupole(double q, double a, double r)
{
    if (!(a > 0.0 && r > 0.0)) throw DomainError("spheroid semi-axes must be positive");
    const double Q3 = q * (a * a - r * r) / 3.0;
    MultipoleDistribution d;
    d.q = q;
    d.Q_body = Q3 * Vec3(-1.0, -1.0, 2.0).asDiagonal();
    return d;
}

// Surface charge density of the spheroid x^2/r^2 + y^2/r^2 + z^2/a^2 = 1.
inline double spheroid_surface_density(double q, double a, double r, const Vec3& x)
{
    const double rho2 = x.x() * x.x() + x.y() * x.y();
    return q / (4.0 * pi * a * r * r) / std::sqrt(rho2 / std::pow(r, 4) + x.z() * x.z() / std::pow(a, 4));
}

// Quadrupole induced on a nearly spherical conductor of radius a by the trap field.
inline Mat3 induced_quadrupole(double U, double a, const Mat3& A, double ell0)
{
    return -4.0 * pi * vacuum_permittivity * U * std::pow(a, 5) / (ell0 * ell0) * A;
}

// Polarizability along the symmetry axis of a prolate conducting spheroid.
// ln((a+d)/r) = atanh(d/a), and atanh(x) - x is summed as a series for small x.
inline double max_polarizability(double a, double r)
{
    if (!(a > 0.0 && r > 0.0)) throw DomainError("spheroid semi-axes must be positive");
    if (a <= r) throw DomainError("polarizability formula requires a prolate spheroid (a > r)");
    const double d = std::sqrt((a - r) * (a + r));
    const double x = d / a;
    double denom;
    if (x < 0.1) {
        const double x2 = x * x;
        double term = x * x2;
        denom = 0.0;
        for (int k = 1; k < 40; ++k) {
            denom += term / (2 * k + 1);
            term *= x2;
            if (term < 1e-18 * denom) break;
        }
    } else {
        denom = std::atanh(x) - x;
    }
    return 4.0 * pi * vacuum_permittivity * d * d * d / 3.0 / denom;
}

// Dipole estimate for two joined half-spheroids whose semi-axes differ by
// delta_a: p = q delta_a / 8 along the symmetry axis. Not exact.
inline double half_spheroid_dipole_estimate(double q, double delta_a) { return q * delta_a / 8.0; }

}  // namespace levirotor
