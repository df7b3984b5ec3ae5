#pragma once

#include <cmath>

#include "charge_model.hpp"
#include "constants.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "trap_fields.hpp"

namespace levirotor {

// Grounded plates at z = +-z0.
struct PlateCapacitor {
    double z0 = 0.0;

    void validate() const
    {
        if (!(z0 > 0.0)) throw DomainError("plate half-gap z0 must be positive");
    }
};

inline double image_prefactor(const PlateCapacitor& cap)
{
    return apery_zeta3 / (64.0 * pi * vacuum_permittivity * std::pow(cap.z0, 3));
}

inline double image_potential(const PlateCapacitor& cap, const SpaceMultipoles& m, const Vec3& R)
{
    const double Z = R.z();
    const double pz = m.p.z();
    return -image_prefactor(cap)
           * (7.0 * m.q * m.q * Z * Z + 2.5 * pz * pz + 14.0 * m.q * Z * pz + 1.5 * m.q * m.Q(2, 2));
}

inline double image_potential(const PlateCapacitor& cap, const MultipoleDistribution& dist, const Vec3& R,
                              const Orientation& o)
{
    return image_potential(cap, space_frame_multipoles(dist, o), R);
}

inline ForceTorque image_force_torque(const PlateCapacitor& cap, const SpaceMultipoles& m, const Vec3& R)
{
    const double c = image_prefactor(cap);
    const double q = m.q;
    const double Z = R.z();
    const double pz = m.p.z();
    ForceTorque ft;
    ft.force = 14.0 * c * q * (q * Z + pz) * ez();
    ft.torque = c * (((5.0 * pz + 14.0 * q * Z) * m.p + 3.0 * q * (m.Q * ez())).cross(ez()));
    return ft;
}

inline ForceTorque image_force_torque(const PlateCapacitor& cap, const MultipoleDistribution& dist,
                                      const Vec3& R, const Orientation& o)
{
    return image_force_torque(cap, space_frame_multipoles(dist, o), R);
}

struct ImageSeriesResult {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();  // about R
    double potential = 0.0;      // interaction energy relative to the particle at the center
};

// Direct summation of the image-charge series for point charges at R + frame r_k.
// Positive images sit at s +- 4n z0 e_z, negative ones at M s +- (4n-2) z0 e_z with
// M the mirror z -> -z. The potential is reported with the R- and
// orientation-independent self term of a charge at the center removed.
inline ImageSeriesResult brute_force_image(const PlateCapacitor& cap, const PointChargeSet& body_charges,
                                           const Vec3& R, const Mat3& frame, int n_max)
{
    if (n_max < 1) throw DomainError("image series needs n_max >= 1");
    const double z0 = cap.z0;
    const double ke = 1.0 / (4.0 * pi * vacuum_permittivity);
    std::vector<Vec3> pos;
    std::vector<double> chg;
    for (const auto& c : body_charges) {
        pos.push_back(R + frame * c.position);
        chg.push_back(c.charge);
    }
    ImageSeriesResult out;
    for (std::size_t j = 0; j < pos.size(); ++j) {
        const Vec3& x = pos[j];
        Vec3 E = Vec3::Zero();
        double phi = 0.0;
        for (std::size_t k = 0; k < pos.size(); ++k) {
            const Vec3 u = x - pos[k];
            const Vec3 w(x.x() - pos[k].x(), x.y() - pos[k].y(), x.z() + pos[k].z());
            const double qk = chg[k];
            const double u2 = u.squaredNorm(), w2 = w.squaredNorm();
            // Sum from the far tail inwards to limit rounding.
            for (int n = n_max; n >= 1; --n) {
                const double a = 4.0 * n * z0;
                const double b = (4.0 * n - 2.0) * z0;
                for (int sgn = -1; sgn <= 1; sgn += 2) {
                    const Vec3 dp = u - sgn * a * ez();
                    const Vec3 dm = w - sgn * b * ez();
                    const double np = dp.norm(), nm = dm.norm();
                    E += qk * (dp / (np * np * np) - dm / (nm * nm * nm));
                    // 1/|d| - 1/ref = (ref^2 - |d|^2) / (|d| ref (ref + |d|)), numerator exact.
                    phi += qk * (2.0 * sgn * a * u.z() - u2) / (np * a * (a + np));
                    phi -= qk * (2.0 * sgn * b * w.z() - w2) / (nm * b * (b + nm));
                }
            }
        }
        E *= ke;
        out.force += chg[j] * E;
        out.torque += (x - R).cross(chg[j] * E);
        out.potential += 0.5 * chg[j] * ke * phi;
    }
    return out;
}

}  // namespace levirotor
