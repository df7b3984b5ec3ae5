#include <gtest/gtest.h>

#include "levirotor/rotor_kinematics.hpp"
#include "test_support.hpp"

using namespace levirotor;
using namespace testing_support;

TEST(BodyAxes, IdentityOrientation)
{
    const auto n = body_axes(Orientation::from_euler(0, 0, 0));
    EXPECT_LT((n[0] - ex()).norm(), 1e-15);
    EXPECT_LT((n[1] - ey()).norm(), 1e-15);
    EXPECT_LT((n[2] - ez()).norm(), 1e-15);
}

TEST(BodyAxes, QuarterTurnAboutY)
{
    const auto n = body_axes(Orientation::from_euler(0, pi / 2, 0));
    EXPECT_LT((n[2] - ex()).norm(), 1e-15);
    EXPECT_LT((n[0] + ez()).norm(), 1e-15);
}

TEST(BodyAxes, OrthonormalRightHanded)
{
    CounterRng rng(11);
    for (int k = 0; k < 1000; ++k) {
        const auto n = body_axes(random_orientation(rng));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_NEAR(n[i].dot(n[j]), i == j ? 1.0 : 0.0, 1e-12);
        EXPECT_NEAR(n[0].cross(n[1]).dot(n[2]), 1.0, 1e-12);
    }
}

TEST(Orientation, AngleRoundTrip)
{
    CounterRng rng(12);
    for (int k = 0; k < 1000; ++k) {
        const double a = two_pi * rng.uniform(), b = 0.01 + (pi - 0.02) * rng.uniform(), g = two_pi * rng.uniform();
        const auto o = Orientation::from_matrix(Orientation::from_euler(a, b, g).body_frame());
        EXPECT_NEAR(o.beta(), b, 1e-10);
        EXPECT_NEAR(std::remainder(o.alpha() - a, two_pi), 0.0, 1e-10);
        EXPECT_NEAR(std::remainder(o.gamma() - g, two_pi), 0.0, 1e-10);
    }
}

TEST(Orientation, CanonicalRanges)
{
    const auto o = Orientation::from_euler(-1.0, 2.0, 7.5).canonical();
    EXPECT_GE(o.alpha(), 0.0);
    EXPECT_LT(o.alpha(), two_pi);
    EXPECT_GE(o.gamma(), 0.0);
    EXPECT_LT(o.gamma(), two_pi);
    EXPECT_GE(o.beta(), 0.0);
    EXPECT_LE(o.beta(), pi);
}

TEST(Orientation, RenormalizesPerturbedMatrix)
{
    Mat3 m = Orientation::from_euler(0.3, 1.1, 2.0).body_frame();
    m(0, 1) += 1e-7;
    const Mat3 r = Orientation::from_matrix(m).body_frame();
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(Orientation, GimbalBranches)
{
    for (double b : {0.0, pi}) {
        const auto o = Orientation::from_euler(0.7, b, 0.4);
        const auto c = Orientation::from_matrix(o.body_frame());
        EXPECT_LT((c.body_frame() - o.body_frame()).norm(), 1e-12);
    }
}

TEST(InertiaTensor, Isotropic)
{
    CounterRng rng(13);
    const auto s = InertiaSpec::isotropic(2.5);
    EXPECT_LT((inertia_tensor(Orientation(), s).tensor - 2.5 * Mat3::Identity()).norm(), 1e-15);
    for (int k = 0; k < 20; ++k)
        EXPECT_LT((inertia_tensor(random_orientation(rng), s).tensor - 2.5 * Mat3::Identity()).norm(), 1e-13);
}

TEST(InertiaTensor, EigenvaluesMatchAsymmetricRotor)
{
    CounterRng rng(14);
    const double I0 = 2.8e-38;
    const InertiaSpec s{I0, 0.92 * I0, 0.55 * I0};
    for (int k = 0; k < 50; ++k) {
        const auto it = inertia_tensor(random_orientation(rng), s);
        Eigen::SelfAdjointEigenSolver<Mat3> es(it.tensor);
        const Vec3 ev = es.eigenvalues();
        EXPECT_LT(rel_err(ev(0), 0.55 * I0), 1e-12);
        EXPECT_LT(rel_err(ev(1), 0.92 * I0), 1e-12);
        EXPECT_LT(rel_err(ev(2), I0), 1e-12);
        EXPECT_LT((it.tensor * it.inverse - Mat3::Identity()).norm(), 1e-10);
    }
}

TEST(InertiaSpec, RejectsInvalid)
{
    EXPECT_THROW((InertiaSpec{0.0, 1.0, 1.0}.validate()), DomainError);
    EXPECT_THROW((InertiaSpec{1.0, 1.0, -1.0}.validate()), DomainError);
    EXPECT_THROW((InertiaSpec{1.0, 1.0, 2.5}.validate()), DomainError);
    EXPECT_NO_THROW((InertiaSpec{1.0, 1.0, 2.0}.validate()));
}

TEST(ConjugateMomenta, DefiningRelations)
{
    const auto o = Orientation::from_euler(0, pi / 2, 0);
    const double J0 = 3.0;
    const Vec3 J = angular_momentum_from_conjugate(o, {J0, 0.0, J0});
    EXPECT_NEAR(J.dot(ez()), J0, 1e-14);
    EXPECT_NEAR(J.dot(o.axis(2)), J0, 1e-14);
    EXPECT_NEAR(J.dot(nodal_axis(o)), 0.0, 1e-14);
}

TEST(ConjugateMomenta, RoundTrip)
{
    CounterRng rng(15);
    for (int k = 0; k < 1000; ++k) {
        const auto o = random_orientation(rng);
        if (std::abs(std::sin(o.beta())) < 1e-6) continue;
        const Vec3 J = random_vector(rng, 1e-30);
        const auto pm = conjugate_from_angular_momentum(o, J);
        EXPECT_LT(rel_err(angular_momentum_from_conjugate(o, pm), J), 1e-12 / std::abs(std::sin(o.beta())) + 1e-13);
        const ConjugateMomenta pm2{rng.gaussian(), rng.gaussian(), rng.gaussian()};
        const auto back = conjugate_from_angular_momentum(o, angular_momentum_from_conjugate(o, pm2));
        const double scale = std::abs(pm2.p_alpha) + std::abs(pm2.p_beta) + std::abs(pm2.p_gamma);
        EXPECT_NEAR(back.p_alpha, pm2.p_alpha, 1e-12 * scale / std::abs(std::sin(o.beta())));
        EXPECT_NEAR(back.p_beta, pm2.p_beta, 1e-12 * scale / std::abs(std::sin(o.beta())));
        EXPECT_NEAR(back.p_gamma, pm2.p_gamma, 1e-12 * scale / std::abs(std::sin(o.beta())));
    }
}

TEST(ConjugateMomenta, Projections)
{
    CounterRng rng(16);
    const auto o = random_orientation(rng);
    const auto a = conjugate_from_angular_momentum(o, 2.0 * ez());
    EXPECT_DOUBLE_EQ(a.p_alpha, 2.0);
    EXPECT_NEAR(a.p_beta, 0.0, 1e-15);
    EXPECT_NEAR(conjugate_from_angular_momentum(o, 2.0 * o.axis(2)).p_gamma, 2.0, 1e-15);
}

TEST(ConjugateMomenta, GimbalSingularityThrows)
{
    const auto o = Orientation::from_euler(0.2, 0.0, 0.1);
    EXPECT_THROW(angular_momentum_from_conjugate(o, {1.0, 0.0, 2.0}), GimbalSingularity);
}

TEST(KineticEnergy, Cases)
{
    CounterRng rng(17);
    const InertiaSpec s{2.0, 2.0, 0.5};
    const auto o = Orientation::from_euler(0.3, 1.0, 0.2);
    EXPECT_EQ(rotational_kinetic_energy(o, {0, 0, 0}, s), 0.0);
    const double J0 = 1.5;
    const auto pm = conjugate_from_angular_momentum(o, J0 * o.axis(2));
    EXPECT_NEAR(rotational_kinetic_energy(o, pm, s), J0 * J0 / (2 * 0.5), 1e-13);
    const InertiaSpec a{1.0, 0.8, 0.5};
    for (int k = 0; k < 100; ++k) {
        const auto oo = random_orientation(rng);
        if (std::abs(std::sin(oo.beta())) < 1e-3) continue;
        const Vec3 J = random_vector(rng);
        const Vec3 w = inertia_tensor(oo, a).inverse * J;
        const double T = rotational_kinetic_energy(oo, conjugate_from_angular_momentum(oo, J), a);
        EXPECT_LT(rel_err(T, 0.5 * w.dot(inertia_tensor(oo, a).tensor * w)), 1e-12);
        EXPECT_GE(T, 0.0);
    }
}

TEST(KineticEnergy, IsotropicInvariantUnderRelabeling)
{
    CounterRng rng(18);
    const auto s = InertiaSpec::isotropic(0.7);
    const Vec3 J = random_vector(rng);
    const double T0 = 0.5 * J.squaredNorm() / 0.7;
    for (int k = 0; k < 20; ++k) {
        const auto o = random_orientation(rng);
        EXPECT_LT(rel_err(rotational_kinetic_energy(o, conjugate_from_angular_momentum(o, J), s), T0), 1e-12);
    }
}

TEST(OrientationRate, Cases)
{
    EXPECT_EQ(orientation_rate(Orientation(), Vec3::Zero()).norm(), 0.0);
    const Mat3 d = orientation_rate(Orientation(), 2.0 * ez());
    EXPECT_LT((d.col(0) - 2.0 * ey()).norm(), 1e-15);
}

TEST(OrientationRate, FiniteDifferenceOfRotation)
{
    const auto o = Orientation::from_euler(0.4, 1.2, -0.3);
    const Vec3 w(0.3, -1.1, 0.7);
    const Mat3 rate = orientation_rate(o, w);
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
        const Mat3 fd = (rotation_from_vector(w * h) * o.body_frame() - rotation_from_vector(-w * h) * o.body_frame())
                        / (2 * h);
        const double err = (fd - rate).norm();
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.05);
        prev = err;
    }
}
