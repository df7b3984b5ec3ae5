#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <variant>
#include <vector>

#include "charge_model.hpp"
#include "constants.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rotor_kinematics.hpp"

namespace levirotor {

// Phi0(r) = (k1/z0) e_z.r : plate-capacitor-like pick-up.
struct LinearPickup {
    double k1 = 0.0;
    double z0 = 0.0;
};

// Phi0(r) = (k2 / 2 z0^2) r.G r with traceless symmetric G.
struct QuadrupolePickup {
    double k2 = 0.0;
    double z0 = 0.0;
    Mat3 G = Mat3::Zero();
};

using PickupConfig = std::variant<LinearPickup, QuadrupolePickup>;

inline void validate(const PickupConfig& cfg)
{
    if (const auto* lp = std::get_if<LinearPickup>(&cfg)) {
        if (!(lp->z0 > 0.0)) throw DomainError("pick-up distance z0 must be positive");
    } else {
        const auto& qp = std::get<QuadrupolePickup>(cfg);
        if (!(qp.z0 > 0.0)) throw DomainError("pick-up distance z0 must be positive");
        if (!is_symmetric(qp.G) || !is_traceless(qp.G))
            throw DomainError("quadrupole pick-up tensor must be symmetric and traceless");
    }
}

enum class Topology { series, parallel };

struct CircuitSpec {
    Topology topology = Topology::parallel;
    double R = 0.0;
    double L = 0.0;
    double C = 0.0;
    double T = 0.0;

    double omega_LC() const { return 1.0 / std::sqrt(L * C); }
    double gamma_s() const { return R / L; }
    double gamma_p() const { return 1.0 / (R * C); }

    void validate() const
    {
        if (!(R > 0.0 && L > 0.0 && C > 0.0)) throw DomainError("circuit R, L, C must be positive");
        if (!(T >= 0.0)) throw DomainError("circuit temperature must be non-negative");
    }
};

struct CircuitState {
    double Q = 0.0;
    double Phi = 0.0;
};

inline double reference_potential(const PickupConfig& cfg, const Vec3& r)
{
    if (const auto* lp = std::get_if<LinearPickup>(&cfg)) return lp->k1 / lp->z0 * r.z();
    const auto& qp = std::get<QuadrupolePickup>(cfg);
    return qp.k2 / (2.0 * qp.z0 * qp.z0) * r.dot(qp.G * r);
}

inline double induced_charge(const PickupConfig& cfg, const SpaceMultipoles& m, const Vec3& R)
{
    if (const auto* lp = std::get_if<LinearPickup>(&cfg)) return lp->k1 / lp->z0 * (m.q * R.z() + m.p.z());
    const auto& qp = std::get<QuadrupolePickup>(cfg);
    const Vec3 GR = qp.G * R;
    return qp.k2 / (2.0 * qp.z0 * qp.z0) * (m.q * R.dot(GR) + 2.0 * m.p.dot(GR) + (qp.G * m.Q).trace() / 3.0);
}

inline double induced_charge(const PickupConfig& cfg, const MultipoleDistribution& dist, const Vec3& R,
                             const Orientation& o)
{
    return induced_charge(cfg, space_frame_multipoles(dist, o), R);
}

inline Vec3 induced_charge_gradient(const PickupConfig& cfg, const SpaceMultipoles& m, const Vec3& R)
{
    if (const auto* lp = std::get_if<LinearPickup>(&cfg)) return lp->k1 * m.q / lp->z0 * ez();
    const auto& qp = std::get<QuadrupolePickup>(cfg);
    return qp.k2 / (qp.z0 * qp.z0) * (qp.G * (m.q * R + m.p));
}

inline Vec3 induced_charge_gradient(const PickupConfig& cfg, const MultipoleDistribution& dist,
                                    const Vec3& R, const Orientation& o)
{
    return induced_charge_gradient(cfg, space_frame_multipoles(dist, o), R);
}

// Torque per unit electrode voltage T; the circuit exerts -U_z T on the particle.
inline Vec3 torque_per_voltage(const PickupConfig& cfg, const SpaceMultipoles& m, const Vec3& R)
{
    if (const auto* lp = std::get_if<LinearPickup>(&cfg)) return lp->k1 / lp->z0 * m.p.cross(ez());
    const auto& qp = std::get<QuadrupolePickup>(cfg);
    return qp.k2 / (qp.z0 * qp.z0) * (m.p.cross(qp.G * R) - axial(qp.G * m.Q) / 3.0);
}

inline Vec3 torque_per_voltage(const PickupConfig& cfg, const MultipoleDistribution& dist, const Vec3& R,
                               const Orientation& o)
{
    return torque_per_voltage(cfg, space_frame_multipoles(dist, o), R);
}

// Electrode voltage U_z = (Q + Q_ind)/C.
inline double electrode_voltage(const CircuitSpec& spec, const CircuitState& s, double Q_ind)
{
    return (s.Q + Q_ind) / spec.C;
}

struct CircuitRate {
    double dQ = 0.0;
    double dPhi = 0.0;
};

// noise: fluctuating voltage U_fl (series) or current I_fl (parallel) sample.
inline CircuitRate circuit_rhs(const CircuitSpec& spec, const CircuitState& s, double Q_ind, double noise = 0.0,
                               bool dissipation = true)
{
    const double U = (s.Q + Q_ind) / spec.C;
    const double diss = dissipation ? 1.0 : 0.0;
    if (spec.topology == Topology::series)
        return {s.Phi / spec.L, -U - diss * spec.R * s.Phi / spec.L + noise};
    return {s.Phi / spec.L - diss * U / spec.R + noise, -U};
}

// Intensity of the white noise term: <x(t) x(t+tau)> = intensity delta(tau).
inline double noise_intensity(const CircuitSpec& spec)
{
    return spec.topology == Topology::series ? 2.0 * boltzmann * spec.T * spec.R
                                             : 2.0 * boltzmann * spec.T / spec.R;
}

// Gamma_ps = R [ (dQ_ind/dR)^2 / m + T.I^-1 T ].
inline double adiabatic_contraction_rate(const PickupConfig& cfg, const Particle& particle, const Vec3& R,
                                         const Mat3& frame, double resistance)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const Vec3 grad = induced_charge_gradient(cfg, m, R);
    const Vec3 T = torque_per_voltage(cfg, m, R);
    const Mat3 Iinv = frame * particle.inertia.moments().cwiseInverse().asDiagonal() * frame.transpose();
    return resistance * (grad.squaredNorm() / particle.mass + T.dot(Iinv * T));
}

inline double adiabatic_contraction_rate(const PickupConfig& cfg, const Particle& particle, const Vec3& R,
                                         const Orientation& o, double resistance)
{
    return adiabatic_contraction_rate(cfg, particle, R, o.body_frame(), resistance);
}

// Closed form for the linear pick-up: R k1^2/z0^2 [q^2/m + (p x e_z).I^-1 (p x e_z)].
inline double linear_pickup_contraction_rate(const LinearPickup& lp, const Particle& particle,
                                             const Mat3& frame, double resistance)
{
    const Vec3 p = frame * particle.charges.p_body;
    const Vec3 pe = p.cross(ez());
    const Vec3 n = frame.transpose() * pe;
    const Vec3 I = particle.inertia.moments();
    const double rot = n.x() * n.x() / I.x() + n.y() * n.y() / I.y() + n.z() * n.z() / I.z();
    const double q = particle.charges.q;
    return resistance * lp.k1 * lp.k1 / (lp.z0 * lp.z0) * (q * q / particle.mass + rot);
}

// Closed form for the quadrupole pick-up, written in the eigenbasis of G.
inline double quadrupole_pickup_contraction_rate(const QuadrupolePickup& qp, const Particle& particle,
                                                 const Vec3& R, const Mat3& frame, double resistance)
{
    Eigen::SelfAdjointEigenSolver<Mat3> es(qp.G);
    const Vec3 gval = es.eigenvalues();
    const Mat3 gvec = es.eigenvectors();
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const Vec3 qr_p = m.q * R + m.p;
    double trans = 0.0;
    Vec3 T = m.p.cross(qp.G * R);
    for (int i = 0; i < 3; ++i) {
        const Vec3 gi = gvec.col(i);
        trans += gval(i) * gval(i) * std::pow(gi.dot(qr_p), 2);
        T -= gval(i) * gi.cross(m.Q * gi) / 3.0;
    }
    const Mat3 Iinv = frame * particle.inertia.moments().cwiseInverse().asDiagonal() * frame.transpose();
    const double c = qp.k2 / (qp.z0 * qp.z0);
    return resistance * c * c * (trans / particle.mass + T.dot(Iinv * T));
}

// Impedance of the bare RLC branch seen by the electrodes (capacitor excluded).
inline std::complex<double> circuit_impedance(const CircuitSpec& spec, double omega)
{
    using cd = std::complex<double>;
    if (spec.topology == Topology::series) return cd(spec.R, omega * spec.L);
    if (omega == 0.0) return cd(0.0, 0.0);
    return 1.0 / cd(1.0 / spec.R, -1.0 / (omega * spec.L));
}

// Re[Z / (1 + i w C Z)] for an arbitrary impedance Z.
inline double effective_resistance(std::complex<double> Z, double C, double omega)
{
    return (Z / (1.0 + std::complex<double>(0.0, omega * C) * Z)).real();
}

inline double effective_resistance(const CircuitSpec& spec, double omega)
{
    return effective_resistance(circuit_impedance(spec, omega), spec.C, omega);
}

// Tabulated impedance Z(w), linearly interpolated in w.
class ImpedanceTable {
public:
    ImpedanceTable(std::vector<double> omega, std::vector<std::complex<double>> Z)
        : omega_(std::move(omega)), Z_(std::move(Z))
    {
        if (omega_.size() != Z_.size() || omega_.size() < 2)
            throw DomainError("impedance table needs at least two matching entries");
        if (!std::is_sorted(omega_.begin(), omega_.end()))
            throw DomainError("impedance table frequencies must be increasing");
    }

    std::complex<double> operator()(double w) const
    {
        if (w <= omega_.front()) return Z_.front();
        if (w >= omega_.back()) return Z_.back();
        const auto it = std::upper_bound(omega_.begin(), omega_.end(), w);
        const std::size_t i = static_cast<std::size_t>(it - omega_.begin());
        const double f = (w - omega_[i - 1]) / (omega_[i] - omega_[i - 1]);
        return (1.0 - f) * Z_[i - 1] + f * Z_[i];
    }

private:
    std::vector<double> omega_;
    std::vector<std::complex<double>> Z_;
};

// Energy damping rate of a harmonic charge coupled through a linear pick-up:
// Gamma(w0) = (q^2 k1^2 / m z0^2) Re[Z / (1 + i w0 C Z)], closed forms per topology.
inline double damping_rate_vs_frequency(const CircuitSpec& spec, const LinearPickup& lp, double q, double m,
                                        double omega0)
{
    const double pref = q * q * lp.k1 * lp.k1 / (m * lp.z0 * lp.z0);
    const double w2 = omega0 * omega0;
    const double wlc2 = spec.omega_LC() * spec.omega_LC();
    if (spec.topology == Topology::series) {
        const double gs = spec.gamma_s();
        return pref / spec.C * gs * wlc2 / (w2 * gs * gs + (w2 - wlc2) * (w2 - wlc2));
    }
    const double gp = spec.gamma_p();
    return pref / spec.C * gp * w2 / (w2 * gp * gp + (w2 - wlc2) * (w2 - wlc2));
}

inline double damping_rate_vs_frequency(std::complex<double> Z, double C, const LinearPickup& lp, double q,
                                        double m, double omega0)
{
    return q * q * lp.k1 * lp.k1 / (m * lp.z0 * lp.z0) * effective_resistance(Z, C, omega0);
}

struct FrictionDiffusion {
    Mat3 Gamma_cm;
    Mat3 Gamma_rot;
    Mat3 D_cm;
    Mat3 D_rot;
};

inline FrictionDiffusion friction_diffusion_tensors(const CircuitSpec& spec, const PickupConfig& cfg,
                                                    const Particle& particle, const Vec3& R,
                                                    const Mat3& frame, double omega)
{
    const SpaceMultipoles m = space_frame_multipoles(particle.charges, frame);
    const Vec3 grad = induced_charge_gradient(cfg, m, R);
    const Vec3 T = torque_per_voltage(cfg, m, R);
    const InertiaTensor it = inertia_tensor(Orientation::from_matrix(frame), particle.inertia);
    const double re = effective_resistance(spec, omega);
    FrictionDiffusion fd;
    fd.Gamma_cm = re * grad * grad.transpose() / particle.mass;
    fd.Gamma_rot = re * T * T.transpose() * it.inverse;
    fd.D_cm = boltzmann * spec.T * particle.mass * fd.Gamma_cm;
    fd.D_rot = boltzmann * spec.T * fd.Gamma_rot * it.tensor;
    return fd;
}

}  // namespace levirotor
