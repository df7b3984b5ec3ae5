#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "rotor_kinematics.hpp"
#include "trap_fields.hpp"

namespace levirotor {

enum class Alignment { axial, transverse, ring, x_axis, y_axis, generic };

inline const char* to_string(Alignment a)
{
    switch (a) {
        case Alignment::axial: return "parallel_z";
        case Alignment::transverse: return "perpendicular_z";
        case Alignment::ring: return "ring_degenerate";
        case Alignment::x_axis: return "parallel_x";
        case Alignment::y_axis: return "parallel_y";
        case Alignment::generic: return "generic";
    }
    return "generic";
}

struct MinimizerOptions {
    double length_scale = 1e-9;   // typical center-of-mass displacement, m
    int max_iterations = 500;
    double step_tolerance = 1e-10; // scaled Newton step or decrement
    double alignment_tolerance = 1e-6;
    bool throw_on_failure = true;
};

struct StartPoint {
    Vec3 r = Vec3::Zero();
    Orientation orientation;
};

struct Minimum {
    Vec3 r = Vec3::Zero();
    Orientation orientation;
    double energy = 0.0;
    double gradient_norm = 0.0;  // |(F l, N)| in energy units
    int iterations = 0;
    bool converged = false;
    Alignment alignment = Alignment::generic;
};

// Axis used to classify the orientation: the dipole direction when there is one,
// otherwise the body 3-axis.
inline Vec3 alignment_axis(const Particle& particle, const Mat3& frame)
{
    const Vec3 p = particle.charges.p_body;
    if (p.norm() > 0.0) return frame * p.normalized();
    return frame.col(2);
}

inline Alignment classify_alignment(const TrapGeometry& g, const Particle& particle, const Mat3& frame,
                                    double tol = 1e-6)
{
    const Vec3 m = alignment_axis(particle, frame);
    if (std::abs(std::abs(m.z()) - 1.0) < tol) return Alignment::axial;
    if (std::abs(m.z()) < tol) {
        if (std::abs(std::abs(m.x()) - 1.0) < tol) return Alignment::x_axis;
        if (std::abs(std::abs(m.y()) - 1.0) < tol) return Alignment::y_axis;
        const bool axisymmetric = std::abs(g.A(0, 0) - g.A(1, 1)) < 1e-12 * max_abs(g.A)
                                  && std::abs(g.A(0, 1)) < 1e-12 * max_abs(g.A);
        return axisymmetric ? Alignment::ring : Alignment::transverse;
    }
    return Alignment::generic;
}

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Local coordinates (s, phi): s = (q r + p) / (q l) is the offset from the
// dipole-compensating position and phi a left rotation vector. Rotating at
// fixed s carries r along with the dipole, which straightens the curved
// valleys of V_eff. Neutral particles use s = r / l.
inline Vec6 scaled_gradient(const TrapGeometry& g, const Particle& particle, const Vec3& r,
                            const Mat3& frame, double ell)
{
    const ForceTorque ft = effective_force_torque(g, particle, r, frame);
    Vec6 grad;
    grad.head<3>() = -ft.force * ell;
    grad.tail<3>() = -ft.torque;
    const double q = particle.charges.q;
    if (q != 0.0) grad.tail<3>() += (frame * particle.charges.p_body).cross(ft.force) / q;
    return grad;
}

inline void displace(const Particle& particle, Vec3& r, Mat3& frame, const Vec6& step, double ell)
{
    const double q = particle.charges.q;
    if (q == 0.0) {
        r += step.head<3>() * ell;
        frame = Orientation::orthonormalize(rotation_from_vector(step.tail<3>()) * frame);
        return;
    }
    const Vec3 s = (q * r + frame * particle.charges.p_body) / q + step.head<3>() * ell;
    frame = Orientation::orthonormalize(rotation_from_vector(step.tail<3>()) * frame);
    r = s - frame * particle.charges.p_body / q;
}

}  // namespace detail

// Damped-Newton descent with backtracking on (r, orientation). The Hessian is
// built from central differences of the analytic gradient.
inline Minimum minimize_effective_potential(const TrapGeometry& g, const Particle& particle,
                                            const StartPoint& start, const MinimizerOptions& opt = {})
{
    using detail::Mat6;
    using detail::Vec6;
    const double ell = opt.length_scale;
    Vec3 r = start.r;
    Mat3 frame = start.orientation.body_frame();
    double V = effective_potential(g, particle, r, frame);
    Minimum result;
    const double h = 1e-5;
    int stalled = 0;

    for (int it = 0; it < opt.max_iterations; ++it) {
        const Vec6 grad = detail::scaled_gradient(g, particle, r, frame, ell);
        Mat6 H;
        for (int k = 0; k < 6; ++k) {
            Vec6 e = Vec6::Zero();
            e(k) = h;
            Vec3 rp = r, rm = r;
            Mat3 fp = frame, fm = frame;
            detail::displace(particle, rp, fp, e, ell);
            detail::displace(particle, rm, fm, -e, ell);
            H.col(k) = (detail::scaled_gradient(g, particle, rp, fp, ell)
                        - detail::scaled_gradient(g, particle, rm, fm, ell)) / (2.0 * h);
        }
        H = (0.5 * (H + H.transpose())).eval();

        const double diag_scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        Vec6 step = Vec6::Zero();
        double lambda = 1e-10;
        bool found = false;
        for (int tries = 0; tries < 30; ++tries) {
            Mat6 Hd = H + lambda * diag_scale * Mat6::Identity();
            Eigen::LLT<Mat6> llt(Hd);
            if (llt.info() == Eigen::Success) {
                step = -llt.solve(grad);
                if (step.dot(grad) < 0.0) {
                    found = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!found) step = -grad / diag_scale;

        result.iterations = it + 1;
        // Newton decrement in units of the stiffest curvature; unlike the raw
        // step length it ignores components along flat (symmetry) directions.
        const double decrement = std::sqrt(std::max(0.0, -grad.dot(step)) / diag_scale);
        if (step.norm() < opt.step_tolerance || decrement < opt.step_tolerance || stalled >= 5) {
            result.converged = true;
            break;
        }

        double alpha = std::min(1.0, 1.0 / step.norm());
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec3 rt = r;
            Mat3 ft = frame;
            detail::displace(particle, rt, ft, alpha * step, ell);
            const double Vt = effective_potential(g, particle, rt, ft);
            if (Vt <= V + 1e-4 * alpha * grad.dot(step)) {
                // Progress below roundoff of the curvature scale: only flat
                // (symmetry) directions are left.
                stalled = (V - Vt <= 1e-22 * diag_scale) ? stalled + 1 : 0;
                r = rt;
                frame = ft;
                V = Vt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // No representable decrease left: the Newton step is at roundoff level.
            result.converged = decrement < 1e3 * opt.step_tolerance;
            break;
        }
    }

    result.r = r;
    result.orientation = Orientation::from_matrix(frame);
    result.energy = V;
    result.gradient_norm = detail::scaled_gradient(g, particle, r, frame, ell).norm();
    result.alignment = classify_alignment(g, particle, frame, opt.alignment_tolerance);
    if (!result.converged && opt.throw_on_failure)
        throw NumericalError("effective-potential minimization did not converge");
    return result;
}

inline std::vector<Minimum> find_minima(const TrapGeometry& g, const Particle& particle,
                                        const std::vector<StartPoint>& guesses,
                                        const MinimizerOptions& opt = {})
{
    std::vector<Minimum> out;
    out.reserve(guesses.size());
    for (const auto& s : guesses) out.push_back(minimize_effective_potential(g, particle, s, opt));
    return out;
}

// Samples of a ring-degenerate minimum: the state rotated about e_z.
inline std::vector<Minimum> sample_ring(const Minimum& m, int n)
{
    std::vector<Minimum> out;
    for (int k = 0; k < n; ++k) {
        const Mat3 rz = rotation_from_vector(ez() * (two_pi * k / n));
        Minimum s = m;
        s.r = rz * m.r;
        s.orientation = Orientation::from_matrix(rz * m.orientation.body_frame());
        out.push_back(s);
    }
    return out;
}

}  // namespace levirotor
