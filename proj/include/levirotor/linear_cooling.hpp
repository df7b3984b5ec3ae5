#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "charge_model.hpp"
#include "circuit_coupling.hpp"
#include "constants.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "trap_fields.hpp"

namespace levirotor {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using CMat6 = Eigen::Matrix<std::complex<double>, 6, 6>;

// State tuple xi = (z, beta - pi/2, Q, p, p_beta, Phi).
enum LinearIndex { iz = 0, ibeta = 1, iQ = 2, ip = 3, ipbeta = 4, iPhi = 5 };

inline const std::array<std::string, 6>& linear_labels()
{
    static const std::array<std::string, 6> labels{"z", "beta", "Q", "p", "p_beta", "Phi"};
    return labels;
}

enum class LinearMode { z, beta, circuit };

struct LinearModel {
    Mat6 B = Mat6::Zero();
    Mat6 N = Mat6::Zero();
    double m = 0.0, I1 = 0.0;
    double omega_z = 0.0, omega_beta = 0.0;
    double g_zQ = 0.0, g_betaQ = 0.0, g_zbeta = 0.0;
    double Gamma_z = 0.0, Gamma_beta = 0.0;
    double gamma_p = 0.0, omega_LC = 0.0;
    double R = 0.0, L = 0.0, C = 0.0;
    double D_cir = 0.0, D_z = 0.0, D_beta = 0.0;
    double T_cir = 0.0, T_gas = 0.0;

    // Mass-like factor of each mode's momentum: m, I1, L.
    double inertia(LinearMode mode) const
    {
        switch (mode) {
            case LinearMode::z: return m;
            case LinearMode::beta: return I1;
            case LinearMode::circuit: return L;
        }
        return m;
    }
    static int momentum_index(LinearMode mode)
    {
        switch (mode) {
            case LinearMode::z: return ip;
            case LinearMode::beta: return ipbeta;
            case LinearMode::circuit: return iPhi;
        }
        return ip;
    }
};

// Expansion about x = z = 0, y = -p3/q, alpha = beta = pi/2 of a symmetric
// particle in a linear trap with endcaps, coupled through a linear pick-up
// to a parallel RLC circuit.
inline LinearModel build_model(const TrapGeometry& trap, const LinearPickup& pickup, const SymmetricParticleSpec& s,
                               double mass, const CircuitSpec& circuit, const GasCoupling& gas)
{
    if (!trap.endcap) throw DomainError("linear cooling model needs a trap with endcaps");
    if (circuit.topology != Topology::parallel) throw DomainError("linear cooling model needs a parallel circuit");
    circuit.validate();
    gas.validate();
    if (!(mass > 0.0 && s.I > 0.0)) throw DomainError("mass and moment of inertia must be positive");
    const Endcap& e = *trap.endcap;
    const double k = pickup.k1, z0 = pickup.z0;
    const double q = s.q, p3 = s.p3, Q3 = s.Q3;
    const double C = circuit.C;
    const double kU = e.k_ec * e.U_ec;
    const double lec2 = e.ell_ec * e.ell_ec;

    LinearModel mdl;
    mdl.m = mass;
    mdl.I1 = s.I;
    mdl.R = circuit.R;
    mdl.L = circuit.L;
    mdl.C = C;
    mdl.gamma_p = circuit.gamma_p();
    mdl.omega_LC = circuit.omega_LC();
    mdl.T_cir = circuit.T;
    mdl.T_gas = gas.T_gas;
    mdl.Gamma_z = gas.Gamma_cm.z();
    mdl.Gamma_beta = gas.Gamma_rot.x();
    mdl.g_zQ = k * q / (C * z0);
    mdl.g_betaQ = -k * p3 / (C * z0);
    mdl.g_zbeta = -4.0 * kU * p3 / lec2 - k * k * q * p3 / (C * z0 * z0);
    const double wz2 = 4.0 * kU * q / (mass * lec2) + k * k * q * q / (mass * C * z0 * z0);
    const double d = Q3 - p3 * p3 / q;
    const double wb2 = 2.0 * kU / (s.I * lec2) * (3.0 * Q3 - p3 * p3 / q) + k * k * p3 * p3 / (s.I * C * z0 * z0)
                       + trap.U_ac * trap.U_ac / (2.0 * s.I * s.I * std::pow(trap.ell0, 4) * trap.omega_ac * trap.omega_ac)
                             * d * d;
    if (!(wz2 > 0.0)) throw DomainError("expansion point is not a minimum: omega_z^2 <= 0");
    if (!(wb2 > 0.0)) throw DomainError("expansion point is not a minimum: omega_beta^2 <= 0");
    mdl.omega_z = std::sqrt(wz2);
    mdl.omega_beta = std::sqrt(wb2);
    mdl.D_cir = C * mdl.gamma_p * boltzmann * circuit.T;
    mdl.D_z = mass * mdl.Gamma_z * boltzmann * gas.T_gas;
    mdl.D_beta = s.I * mdl.Gamma_beta * boltzmann * gas.T_gas;

    Mat6& B = mdl.B;
    const double R = circuit.R;
    B << 0, 0, 0, 1.0 / mass, 0, 0,
         0, 0, 0, 0, 1.0 / s.I, 0,
         -mdl.g_zQ / R, -mdl.g_betaQ / R, -1.0 / (R * C), 0, 0, 1.0 / circuit.L,
         -mass * wz2, -mdl.g_zbeta, -mdl.g_zQ, -mdl.Gamma_z, 0, 0,
         -mdl.g_zbeta, -s.I * wb2, -mdl.g_betaQ, 0, -mdl.Gamma_beta, 0,
         -mdl.g_zQ, -mdl.g_betaQ, -circuit.L * mdl.omega_LC * mdl.omega_LC, 0, 0, 0;
    mdl.N.diagonal() << 0, 0, std::sqrt(2.0 * mdl.D_cir), std::sqrt(2.0 * mdl.D_z), std::sqrt(2.0 * mdl.D_beta), 0;
    return mdl;
}

// Diagonal similarity D (powers of two) making row and column norms of
// D^-1 B D comparable (Osborne balancing). The state variables span ~30 decades.
inline Vec6 balance_scales(const Mat6& B)
{
    Vec6 d = Vec6::Ones();
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool changed = false;
        for (int i = 0; i < 6; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < 6; ++j) {
                if (j == i) continue;
                c += std::abs(B(j, i) * d(i) / d(j));
                r += std::abs(B(i, j) * d(j) / d(i));
            }
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0;
            const double s = c + r;
            double cc = c, rr = r;
            while (cc < rr / 2.0) { cc *= 2.0; rr /= 2.0; f *= 2.0; }
            while (cc > rr * 2.0) { cc /= 2.0; rr *= 2.0; f /= 2.0; }
            if ((cc + rr) < 0.95 * s) {
                d(i) *= f;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return d;
}

inline Eigen::Matrix<std::complex<double>, 6, 1> drift_eigenvalues(const Mat6& B)
{
    const Vec6 d = balance_scales(B);
    const Mat6 Bt = d.cwiseInverse().asDiagonal() * B * d.asDiagonal();
    return Eigen::EigenSolver<Mat6>(Bt).eigenvalues();
}

inline bool is_hurwitz(const Mat6& B) { return (drift_eigenvalues(B).real().array() < 0.0).all(); }

// S(w) = (iw - B)^-1 N N^T [(-iw - B)^-1]^T / 2pi, no stability check.
inline CMat6 psd_matrix_unchecked(const LinearModel& model, double omega, const Vec6& d)
{
    using cd = std::complex<double>;
    const Mat6 Bt = d.cwiseInverse().asDiagonal() * model.B * d.asDiagonal();
    const Mat6 Nt = d.cwiseInverse().asDiagonal() * model.N;
    CMat6 M = -Bt.cast<cd>();
    M.diagonal().array() += cd(0.0, omega);
    const CMat6 G = M.partialPivLu().solve(Nt.cast<cd>());
    const CMat6 St = G * G.adjoint() / two_pi;
    return d.cast<cd>().asDiagonal() * St * d.cast<cd>().asDiagonal();
}

inline CMat6 psd_matrix(const LinearModel& model, double omega)
{
    if (!is_hurwitz(model.B)) throw DomainError("drift matrix is not Hurwitz; no stationary spectrum");
    return psd_matrix_unchecked(model, omega, balance_scales(model.B));
}

// Solves B S + S B^T + N N^T = 0 in balanced coordinates (Kronecker form).
inline Mat6 stationary_covariance(const LinearModel& model)
{
    if (!is_hurwitz(model.B)) throw DomainError("drift matrix is not Hurwitz; no stationary covariance");
    const Vec6 d = balance_scales(model.B);
    const Mat6 Bt = d.cwiseInverse().asDiagonal() * model.B * d.asDiagonal();
    const Mat6 Nt = d.cwiseInverse().asDiagonal() * model.N;
    const Mat6 W = Nt * Nt.transpose();
    Eigen::Matrix<double, 36, 36> K = Eigen::Matrix<double, 36, 36>::Zero();
    const Mat6 I = Mat6::Identity();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            // column-major vec: vec(B S) = (I kron B) vec S, vec(S B^T) = (B kron I) vec S
            K.block<6, 6>(6 * i, 6 * j) += I(i, j) * Bt + Bt(i, j) * I;
        }
    Eigen::Matrix<double, 36, 1> rhs = -Eigen::Map<const Eigen::Matrix<double, 36, 1>>(W.data());
    Eigen::FullPivLU<Eigen::Matrix<double, 36, 36>> lu(K);
    if (!lu.isInvertible()) throw NumericalError("Lyapunov operator is singular");
    Eigen::Matrix<double, 36, 1> x = lu.solve(rhs);
    Mat6 St = Eigen::Map<Mat6>(x.data());
    St = (0.5 * (St + St.transpose())).eval();
    return d.asDiagonal() * St * d.asDiagonal();
}

namespace detail {

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol || b - a <= 1e-13 * std::abs(m))
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
           + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Segment tolerance is relative to the segment itself or to a share of the
// whole integral, whichever is larger.
template <class F>
double simpson(const F& f, double a, double b, double rel_tol, double floor)
{
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = std::max(rel_tol * std::abs(whole), floor) + 1e-300;
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 30);
}

}  // namespace detail

// Integral of S_ii over all real frequencies, i.e. the stationary variance.
// Adaptive Simpson on [0, 20 max(w_z, w_beta, w_LC)], with breakpoints
// clustered around each resonance (spacing in multiples of its half-width),
// plus a power-law tail beyond the cutoff.
inline double integrate_psd(const LinearModel& model, int index, double rel_tol = 1e-6)
{
    if (!is_hurwitz(model.B)) throw DomainError("drift matrix is not Hurwitz; no stationary spectrum");
    const Vec6 d = balance_scales(model.B);
    auto f = [&](double w) { return psd_matrix_unchecked(model, w, d)(index, index).real(); };
    const double wmax = 20.0 * std::max({model.omega_z, model.omega_beta, model.omega_LC});
    std::vector<double> bp{0.0, wmax};
    for (const auto& lam : drift_eigenvalues(model.B)) {
        const double w0 = std::abs(lam.imag());
        const double hw = std::max(std::abs(lam.real()), 1e-300);
        for (double k = 0.0; k <= 60.0; k += 1.0) {
            const double off = (k == 0.0) ? 0.0 : hw * std::pow(2.0, k - 10.0);
            for (double x : {w0 - off, w0 + off})
                if (x > 0.0 && x < wmax) bp.push_back(x);
        }
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    double coarse = 0.0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        coarse += (bp[i + 1] - bp[i]) / 6.0 * (f(bp[i]) + 4.0 * f(0.5 * (bp[i] + bp[i + 1])) + f(bp[i + 1]));
    const double floor = rel_tol * std::abs(coarse) / static_cast<double>(bp.size());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) total += detail::simpson(f, bp[i], bp[i + 1], rel_tol, floor);
    // Tail: S ~ c w^-n with n from the local log-slope at the cutoff.
    const double s1 = f(wmax), s2 = f(1.1 * wmax);
    if (s1 > 0.0 && s2 > 0.0) {
        const double n = std::log(s1 / s2) / std::log(1.1);
        if (n > 1.0) total += s1 * wmax / (n - 1.0);
    }
    return 2.0 * total;
}

inline double effective_temperature(const Mat6& covariance, const LinearModel& model, LinearMode mode)
{
    const int i = LinearModel::momentum_index(mode);
    return covariance(i, i) / (boltzmann * model.inertia(mode));
}

inline double effective_temperature(const LinearModel& model, LinearMode mode)
{
    return effective_temperature(stationary_covariance(model), model, mode);
}

inline double effective_temperature_from_psd(const LinearModel& model, LinearMode mode)
{
    return integrate_psd(model, LinearModel::momentum_index(mode)) / (boltzmann * model.inertia(mode));
}

// Exact one-step propagator of d xi = B xi dt + N dW for a fixed step h:
// xi(t+h) = F xi(t) + L w, w ~ N(0, 1), with L L^T the Van Loan noise covariance.
struct LinearPropagator {
    Mat6 F = Mat6::Identity();
    Mat6 Qd = Mat6::Zero();
    Mat6 L = Mat6::Zero();
    double h = 0.0;

    LinearPropagator() = default;
    LinearPropagator(const LinearModel& model, double step) : h(step)
    {
        if (!(step > 0.0)) throw DomainError("time step must be positive");
        const Vec6 d = balance_scales(model.B);
        const Mat6 Bt = d.cwiseInverse().asDiagonal() * model.B * d.asDiagonal();
        const Mat6 Nt = d.cwiseInverse().asDiagonal() * model.N;
        Eigen::Matrix<double, 12, 12> M = Eigen::Matrix<double, 12, 12>::Zero();
        M.block<6, 6>(0, 0) = -Bt * step;
        M.block<6, 6>(0, 6) = Nt * Nt.transpose() * step;
        M.block<6, 6>(6, 6) = Bt.transpose() * step;
        const Eigen::Matrix<double, 12, 12> E = M.exp();
        const Mat6 Ft = E.block<6, 6>(6, 6).transpose();
        Mat6 Qt = Ft * E.block<6, 6>(0, 6);
        Qt = (0.5 * (Qt + Qt.transpose())).eval();
        Eigen::SelfAdjointEigenSolver<Mat6> es(Qt);
        const Vec6 ev = es.eigenvalues().cwiseMax(0.0);
        const Mat6 Lt = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
        F = d.asDiagonal() * Ft * d.cwiseInverse().asDiagonal();
        Qd = d.asDiagonal() * Qt * d.asDiagonal();
        L = d.asDiagonal() * Lt;
    }
};

struct LinearSeries {
    double t0 = 0.0;
    double dt = 0.0;  // spacing of stored samples
    std::vector<Vec6> states;

    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

// Stateful simulator: continuing with another model reuses the same noise
// stream, so staged runs are bitwise identical to one piecewise run.
class LinearSimulator {
public:
    explicit LinearSimulator(std::uint64_t seed) : rng_(seed) {}

    // Advances `steps` steps of size h from xi, storing every `stride`-th state
    // (the starting state is stored when `include_start`).
    Vec6 run(const LinearPropagator& prop, const Vec6& xi0, long steps, int stride, LinearSeries* out,
             bool include_start = true)
    {
        if (stride < 1) throw DomainError("stride must be at least 1");
        Vec6 xi = xi0;
        if (out && include_start) out->states.push_back(xi);
        Vec6 w;
        for (long k = 1; k <= steps; ++k) {
            for (int i = 0; i < 6; ++i) w(i) = rng_.gaussian();
            xi = prop.F * xi + prop.L * w;
            if (out && k % stride == 0) out->states.push_back(xi);
        }
        return xi;
    }

    CounterRng& rng() { return rng_; }

private:
    CounterRng rng_;
};

inline LinearSeries simulate_linear(const LinearModel& model, const Vec6& xi0, double duration, double dt,
                                    std::uint64_t seed, int stride = 1)
{
    const long steps = step_count(duration, dt);
    LinearSeries out;
    out.dt = dt * stride;
    out.states.reserve(static_cast<std::size_t>(steps / stride + 1));
    LinearSimulator sim(seed);
    sim.run(LinearPropagator(model, dt), xi0, steps, stride, &out);
    return out;
}

struct LinearStage {
    LinearModel model;
    double duration = 0.0;
};

// Piecewise-constant schedule of models sharing one noise stream.
inline LinearSeries simulate_schedule(const std::vector<LinearStage>& stages, const Vec6& xi0, double dt,
                                      std::uint64_t seed, int stride = 1)
{
    LinearSeries out;
    out.dt = dt * stride;
    LinearSimulator sim(seed);
    Vec6 xi = xi0;
    bool first = true;
    for (const auto& st : stages) {
        const long steps = step_count(st.duration, dt);
        if (steps % stride != 0) throw DomainError("stage durations must be multiples of the output spacing");
        xi = sim.run(LinearPropagator(st.model, dt), xi, steps, stride, &out, first);
        first = false;
    }
    return out;
}

// Ensemble mean and second moment propagated exactly through a schedule.
struct MomentSeries {
    double dt = 0.0;
    std::vector<Vec6> mean;
    std::vector<Mat6> second_moment;  // <xi xi^T>
};

inline MomentSeries propagate_moments(const std::vector<LinearStage>& stages, const Vec6& mean0, const Mat6& cov0,
                                      double dt)
{
    MomentSeries out;
    out.dt = dt;
    Vec6 mu = mean0;
    Mat6 cov = cov0;
    out.mean.push_back(mu);
    out.second_moment.push_back(cov + mu * mu.transpose());
    for (const auto& st : stages) {
        const LinearPropagator prop(st.model, dt);
        const long steps = step_count(st.duration, dt);
        for (long k = 0; k < steps; ++k) {
            mu = prop.F * mu;
            cov = prop.F * cov * prop.F.transpose() + prop.Qd;
            out.mean.push_back(mu);
            out.second_moment.push_back(cov + mu * mu.transpose());
        }
    }
    return out;
}

// Initial condition of the staged cooling run: z = 0, beta = pi/2,
// p = -sqrt(2 m kT), p_beta = -sqrt(2 I1 kT), Q = Q0, Phi = flux_charge * L * omega_z.
inline Vec6 cooling_initial_state(const LinearModel& model, double T_gas, double Q0 = -4.8 * elementary_charge,
                                  double flux_charge = 0.4 * elementary_charge)
{
    Vec6 xi = Vec6::Zero();
    xi(ip) = -std::sqrt(2.0 * model.m * boltzmann * T_gas);
    xi(ipbeta) = -std::sqrt(2.0 * model.I1 * boltzmann * T_gas);
    xi(iQ) = Q0;
    xi(iPhi) = flux_charge * model.L * model.omega_z;
    return xi;
}

// Frequency of the largest S_ii within [w_lo, w_hi]: grid scan then golden-section refinement.
inline double psd_peak(const LinearModel& model, int index, double w_lo, double w_hi, int grid = 20000)
{
    const Vec6 d = balance_scales(model.B);
    auto f = [&](double w) { return psd_matrix_unchecked(model, w, d)(index, index).real(); };
    double best = w_lo, fbest = -1.0;
    const double h = (w_hi - w_lo) / grid;
    for (int i = 0; i <= grid; ++i) {
        const double w = w_lo + i * h;
        const double v = f(w);
        if (v > fbest) { fbest = v; best = w; }
    }
    // Narrow resonances can fall between grid points: also test each eigenfrequency.
    for (const auto& lam : drift_eigenvalues(model.B)) {
        const double w = std::abs(lam.imag());
        if (w >= w_lo && w <= w_hi && f(w) > fbest) { fbest = f(w); best = w; }
    }
    double a = best - h, b = best + h;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > 1e-12 * best; ++it) {
        const double c = b - gr * (b - a), e = a + gr * (b - a);
        if (f(c) > f(e)) b = e; else a = c;
    }
    return 0.5 * (a + b);
}

}  // namespace levirotor
