#include <gtest/gtest.h>

#include "levirotor/charge_model.hpp"
#include "levirotor/trap_fields.hpp"
#include "test_support.hpp"

using namespace levirotor;
using namespace testing_support;

constexpr double e = elementary_charge;

TEST(PointCharges, SingleChargeAtOrigin)
{
    const auto d = multipoles_from_point_charges({{e, Vec3::Zero()}});
    EXPECT_EQ(d.q, e);
    EXPECT_EQ(d.p_body.norm(), 0.0);
    EXPECT_EQ(d.Q_body.norm(), 0.0);
}

TEST(PointCharges, AntisymmetricPair)
{
    const double dd = 1e-9;
    const auto d = multipoles_from_point_charges({{e, 0.5 * dd * ez()}, {-e, -0.5 * dd * ez()}});
    EXPECT_EQ(d.q, 0.0);
    EXPECT_LT(rel_err(d.p_body, e * dd * ez()), 1e-15);
    EXPECT_LT(d.Q_body.norm(), 1e-15 * e * dd * dd);
}

TEST(PointCharges, SymmetricPair)
{
    const double dd = 2e-9;
    const auto d = multipoles_from_point_charges({{e, dd * ez()}, {e, -dd * ez()}});
    EXPECT_EQ(d.q, 2 * e);
    EXPECT_EQ(d.p_body.norm(), 0.0);
    EXPECT_LT(rel_err(d.Q_body(2, 2), 4 * e * dd * dd), 1e-15);
    EXPECT_LT(rel_err(d.Q_body(0, 0), -2 * e * dd * dd), 1e-15);
    EXPECT_LT(rel_err(d.Q_body(1, 1), -2 * e * dd * dd), 1e-15);
    EXPECT_NO_THROW(d.validate());
}

TEST(PointCharges, RejectsEmptyOrNonFinite)
{
    EXPECT_THROW(multipoles_from_point_charges({}), DomainError);
    EXPECT_THROW(multipoles_from_point_charges({{NAN, Vec3::Zero()}}), DomainError);
}

TEST(Multipoles, ValidationRejectsTraceOrAsymmetry)
{
    MultipoleDistribution d;
    d.Q_body = Mat3::Identity();
    EXPECT_THROW(d.validate(), DomainError);
    d.Q_body = Mat3::Zero();
    d.Q_body(0, 1) = 1.0;
    EXPECT_THROW(d.validate(), DomainError);
}

TEST(SpaceFrame, IdentityLeavesBodyValues)
{
    CounterRng rng(1);
    const auto d = random_distribution(rng, e, 1e-8);
    const auto m = space_frame_multipoles(d, Orientation());
    EXPECT_EQ(m.q, d.q);
    EXPECT_EQ(m.p, d.p_body);
    EXPECT_EQ(m.Q, d.Q_body);
}

TEST(SpaceFrame, SymmetricClosedForm)
{
    CounterRng rng(2);
    const SymmetricParticleSpec s{3 * e, 1e-27, 4e-36, 1.0, 1.0};
    for (int k = 0; k < 50; ++k) {
        const auto o = random_orientation(rng);
        const auto m = space_frame_multipoles(s.multipoles(), o);
        const Vec3 n = o.axis(2);
        EXPECT_LT(rel_err(m.Q, s.Q3 * (3 * n * n.transpose() - Mat3::Identity())), 1e-14);
        EXPECT_LT(m.p.cross(n).norm(), 1e-15 * std::abs(s.p3));
        EXPECT_LT(std::abs(m.Q.trace()), 1e-14 * max_abs(m.Q));
    }
}

TEST(SpaceFrame, MatchesRotatedPointCharges)
{
    CounterRng rng(3);
    PointChargeSet set;
    for (int k = 0; k < 7; ++k) set.push_back({e * rng.gaussian(), random_vector(rng, 1e-9)});
    const auto d = multipoles_from_point_charges(set);
    for (int k = 0; k < 50; ++k) {
        const auto o = random_orientation(rng);
        PointChargeSet rot = set;
        for (auto& c : rot) c.position = o.body_frame() * c.position;
        const auto direct = multipoles_from_point_charges(rot);
        const auto m = space_frame_multipoles(d, o);
        EXPECT_LT(rel_err(m.p, direct.p_body), 1e-12);
        EXPECT_LT(rel_err(m.Q, direct.Q_body), 1e-12);
        // eigenvalues are orientation independent
        Eigen::SelfAdjointEigenSolver<Mat3> a(m.Q), b(d.Q_body);
        EXPECT_LT(rel_err(Vec3(a.eigenvalues()), Vec3(b.eigenvalues())), 1e-12);
    }
}

TEST(Spheroid, SphereHasNoQuadrupole)
{
    EXPECT_EQ(spheroid_quadrupole(e, 1e-6, 1e-6).Q_body.norm(), 0.0);
}

TEST(Spheroid, ProlateValue)
{
    const double r0 = 1e-6;
    const auto d = spheroid_quadrupole(e, 2 * r0, r0);
    EXPECT_LT(rel_err(d.Q_body(2, 2) / 2, e * r0 * r0), 1e-14);
    EXPECT_EQ(d.p_body.norm(), 0.0);
}

// Surface quadrature of the equipotential charge density.
static std::pair<double, double> spheroid_quadrature(double q, double a, double r, int n)
{
    double total = 0.0, q33 = 0.0;
    const int nth = n;
    const double hth = pi / nth;
    for (int i = 0; i < nth; ++i) {
        // Gauss-Legendre-free midpoint rule is enough: the integrand is smooth in theta.
        const double th = (i + 0.5) * hth;
        const double st = std::sin(th), ct = std::cos(th);
        const Vec3 x(r * st, 0.0, a * ct);
        const double dA = r * st * std::sqrt(a * a * st * st + r * r * ct * ct) * hth * two_pi;
        const double s = spheroid_surface_density(q, a, r, x);
        total += s * dA;
        q33 += s * (3 * x.z() * x.z() - x.squaredNorm()) * dA;
    }
    return {total, q33};
}

TEST(Spheroid, SurfaceQuadratureOracle)
{
    for (double ratio : {1.5, 3.0, 0.5}) {
        const double r = 1e-7, a = ratio * r;
        const auto [qt, q33] = spheroid_quadrature(e, a, r, 4000);
        EXPECT_LT(rel_err(qt, e), 1e-3);
        EXPECT_LT(rel_err(q33, spheroid_quadrupole(e, a, r).Q_body(2, 2)), 1e-3);
    }
}

TEST(InducedQuadrupole, Cases)
{
    const Mat3 A = Vec3(1, 1, -2).asDiagonal();
    EXPECT_EQ(induced_quadrupole(0.0, 1e-6, A, 1e-3).norm(), 0.0);
    EXPECT_LT(rel_err(induced_quadrupole(1.0, 2e-6, A, 1e-3), 32.0 * induced_quadrupole(1.0, 1e-6, A, 1e-3)), 1e-14);
    const Mat3 Qi = induced_quadrupole(1.0, 1e-6, A, 1e-3);
    const double c = 4 * pi * vacuum_permittivity * 1e-24;
    EXPECT_LT(rel_err(Qi(0, 0), -c), 1e-14);
    EXPECT_LT(rel_err(Qi(1, 1), -c), 1e-14);
    EXPECT_LT(rel_err(Qi(2, 2), 2 * c), 1e-14);
    EXPECT_TRUE(is_traceless(Qi));
    const TrapGeometry g = ring_trap(1e-3, 0.0, 1.0, 1.0);
    EXPECT_LT(rel_err(induced_quadrupole(1.0, 1e-6, g), Qi), 1e-14);
}

TEST(Polarizability, NearSphereLimit)
{
    const double r = 1e-6, a = 1.001 * r;
    EXPECT_LT(rel_err(max_polarizability(a, r), 4 * pi * vacuum_permittivity * a * a * a), 0.01);
}

TEST(Polarizability, DirectFormulaAtTwoToOne)
{
    const double r = 1e-6, a = 2 * r;
    const double d = std::sqrt(a * a - r * r);
    const double direct = (4 * pi * vacuum_permittivity * d * d * d / 3) / (std::log((a + d) / r) - d / a);
    EXPECT_LT(rel_err(max_polarizability(a, r), direct), 1e-12);
}

TEST(Polarizability, SeriesBranchContinuity)
{
    // x = d/a crosses the series/closed-form switch at 0.1
    const double r = 1.0;
    const double a1 = 1.0 / std::sqrt(1 - 0.0999999 * 0.0999999), a2 = 1.0 / std::sqrt(1 - 0.1000001 * 0.1000001);
    EXPECT_LT(rel_err(max_polarizability(a1, r) / std::pow(a1, 3), max_polarizability(a2, r) / std::pow(a2, 3)),
              1e-5);
}

TEST(Polarizability, CubicScalingAndDomain)
{
    EXPECT_LT(rel_err(max_polarizability(6e-6, 2e-6), 27.0 * max_polarizability(2e-6, 2e-6 / 3)), 1e-12);
    EXPECT_THROW(max_polarizability(1e-6, 1e-6), DomainError);
    EXPECT_THROW(max_polarizability(1e-6, 2e-6), DomainError);
}

TEST(SymmetricParticle, InertiaRequiresPositive)
{
    EXPECT_THROW((SymmetricParticleSpec{e, 0, 0, 0.0, 1.0}.inertia()), DomainError);
    const auto p = Particle::symmetric({e, 0, 0, 2.0, 1.0}, 1.0);
    EXPECT_EQ(p.inertia.I1, 2.0);
    EXPECT_EQ(p.inertia.I3, 1.0);
}
