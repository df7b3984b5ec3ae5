#pragma once

#include <array>
#include <cmath>

#include "constants.hpp"
#include "errors.hpp"
#include "linalg.hpp"

namespace levirotor {

inline constexpr double gimbal_tolerance = 1e-9;

inline double wrap_angle(double a)
{
    double w = std::fmod(a, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

// z-y'-z'' Euler angles plus the body frame R = Rz(alpha) Ry(beta) Rz(gamma),
// whose columns are the body axes N1, N2, N3.
class Orientation {
public:
    Orientation() : alpha_(0.0), beta_(0.0), gamma_(0.0), frame_(Mat3::Identity()) {}

    static Orientation from_euler(double alpha, double beta, double gamma)
    {
        Orientation o;
        o.alpha_ = alpha;
        o.beta_ = beta;
        o.gamma_ = gamma;
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        const double cb = std::cos(beta), sb = std::sin(beta);
        const double cg = std::cos(gamma), sg = std::sin(gamma);
        o.frame_.col(0) = Vec3(ca * cb * cg - sa * sg, sa * cb * cg + ca * sg, -sb * cg);
        o.frame_.col(1) = Vec3(-ca * cb * sg - sa * cg, -sa * cb * sg + ca * cg, sb * sg);
        o.frame_.col(2) = Vec3(ca * sb, sa * sb, cb);
        return o;
    }

    // Accepts a nearly orthogonal matrix; it is re-orthonormalized and the
    // angles are extracted with beta in [0, pi], alpha and gamma in [0, 2pi).
    static Orientation from_matrix(const Mat3& m)
    {
        Orientation o;
        o.frame_ = orthonormalize(m);
        const Mat3& r = o.frame_;
        const double sb = std::hypot(r(0, 2), r(1, 2));
        o.beta_ = std::atan2(sb, r(2, 2));
        if (sb > gimbal_tolerance) {
            o.alpha_ = wrap_angle(std::atan2(r(1, 2), r(0, 2)));
            o.gamma_ = wrap_angle(std::atan2(r(2, 1), -r(2, 0)));
        } else if (r(2, 2) > 0.0) {
            o.alpha_ = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
            o.gamma_ = 0.0;
        } else {
            o.alpha_ = wrap_angle(std::atan2(-r(1, 0), -r(0, 0)));
            o.gamma_ = 0.0;
        }
        return o;
    }

    static Mat3 orthonormalize(const Mat3& m)
    {
        Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0.0) {
            Mat3 u = svd.matrixU();
            u.col(2) *= -1.0;
            r = u * svd.matrixV().transpose();
        }
        return r;
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    const Mat3& body_frame() const { return frame_; }
    Vec3 axis(int i) const { return frame_.col(i); }

    // Canonicalized copy: angles re-extracted from the frame.
    Orientation canonical() const { return from_matrix(frame_); }

private:
    double alpha_, beta_, gamma_;
    Mat3 frame_;
};

struct InertiaSpec {
    double I1 = 0.0, I2 = 0.0, I3 = 0.0;

    Vec3 moments() const { return Vec3(I1, I2, I3); }

    void validate() const
    {
        if (!(I1 > 0.0 && I2 > 0.0 && I3 > 0.0))
            throw DomainError("principal moments of inertia must be strictly positive");
        const double slack = 1e-12 * (I1 + I2 + I3);
        if (I1 + I2 < I3 - slack || I2 + I3 < I1 - slack || I1 + I3 < I2 - slack)
            throw DomainError("principal moments of inertia violate the triangle inequality");
    }

    static InertiaSpec isotropic(double I0) { return {I0, I0, I0}; }
};

struct ConjugateMomenta {
    double p_alpha = 0.0, p_beta = 0.0, p_gamma = 0.0;
};

struct InertiaTensor {
    Mat3 tensor;
    Mat3 inverse;
};

inline std::array<Vec3, 3> body_axes(const Orientation& o)
{
    return {o.axis(0), o.axis(1), o.axis(2)};
}

inline InertiaTensor inertia_tensor(const Orientation& o, const InertiaSpec& s)
{
    s.validate();
    const Mat3& r = o.body_frame();
    const Vec3 m = s.moments();
    return {r * m.asDiagonal() * r.transpose(),
            r * m.cwiseInverse().asDiagonal() * r.transpose()};
}

// Line of nodes e_xi = -sin(alpha) e_x + cos(alpha) e_y.
inline Vec3 nodal_axis(const Orientation& o)
{
    return Vec3(-std::sin(o.alpha()), std::cos(o.alpha()), 0.0);
}

inline Vec3 angular_momentum_from_conjugate(const Orientation& o, const ConjugateMomenta& pm)
{
    const double sb = std::sin(o.beta());
    if (std::abs(sb) < gimbal_tolerance)
        throw GimbalSingularity("conjugate momenta are singular at sin(beta) = 0");
    const double cg = std::cos(o.gamma()), sg = std::sin(o.gamma());
    const double cot = std::cos(o.beta()) / sb;
    const double j1 = -cg / sb * pm.p_alpha + sg * pm.p_beta + cot * cg * pm.p_gamma;
    const double j2 = sg / sb * pm.p_alpha + cg * pm.p_beta - cot * sg * pm.p_gamma;
    return o.body_frame() * Vec3(j1, j2, pm.p_gamma);
}

inline ConjugateMomenta conjugate_from_angular_momentum(const Orientation& o, const Vec3& J)
{
    return {J.z(), J.dot(nodal_axis(o)), J.dot(o.axis(2))};
}

inline double rotational_kinetic_energy(const Orientation& o, const ConjugateMomenta& pm,
                                        const InertiaSpec& s)
{
    const Vec3 J = angular_momentum_from_conjugate(o, pm);
    return 0.5 * J.dot(inertia_tensor(o, s).inverse * J);
}

// dN_i/dt = omega x N_i for each column of the body frame.
inline Mat3 orientation_rate(const Orientation& o, const Vec3& omega)
{
    return skew(omega) * o.body_frame();
}

// Rotation matrix exp([phi]x) for a rotation vector phi.
inline Mat3 rotation_from_vector(const Vec3& phi)
{
    const double angle = phi.norm();
    if (angle == 0.0) return Mat3::Identity();
    return Eigen::AngleAxisd(angle, phi / angle).toRotationMatrix();
}

}  // namespace levirotor
