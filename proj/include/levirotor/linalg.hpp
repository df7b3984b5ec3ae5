#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace levirotor {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Vec3 ex() { return Vec3::UnitX(); }
inline Vec3 ey() { return Vec3::UnitY(); }
inline Vec3 ez() { return Vec3::UnitZ(); }

// axial(M)_j = eps_jkl M_kl; for symmetric A, Q: sum_i a_i a_i x (Q a_i) = axial(A Q).
inline Vec3 axial(const Mat3& m)
{
    return Vec3(m(1, 2) - m(2, 1), m(2, 0) - m(0, 2), m(0, 1) - m(1, 0));
}

inline Mat3 skew(const Vec3& v)
{
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

inline double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_symmetric(const Mat3& m, double rel_tol = 1e-12)
{
    const double scale = max_abs(m);
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

inline bool is_traceless(const Mat3& m, double rel_tol = 1e-12)
{
    const double scale = max_abs(m);
    return std::abs(m.trace()) <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

}  // namespace levirotor
