#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "constants.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "trap_fields.hpp"

namespace levirotor {

struct TimeSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> columns;

    std::size_t size() const { return columns.empty() ? 0 : columns.front().size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }

    const std::vector<double>& column(const std::string& label) const
    {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return columns[i];
        throw DomainError("no column named '" + label + "'");
    }

    void validate() const
    {
        if (!(dt > 0.0)) throw DomainError("time series spacing must be positive");
        if (labels.size() != columns.size()) throw DomainError("one label per column required");
        for (const auto& c : columns)
            if (c.size() != size()) throw DomainError("columns of unequal length");
    }

    static TimeSeries single(std::vector<double> values, double dt, double t0 = 0.0, std::string label = "value")
    {
        TimeSeries s;
        s.t0 = t0;
        s.dt = dt;
        s.labels = {std::move(label)};
        s.columns = {std::move(values)};
        return s;
    }
};

// Sliding boxcar of length `window` (in samples, may be fractional: the last
// sample gets the fractional weight). Output timestamps are window centers.
inline TimeSeries moving_average(const TimeSeries& in, double window)
{
    in.validate();
    if (!(window >= 1.0)) throw DomainError("averaging window shorter than one sample");
    const auto full = static_cast<std::size_t>(std::floor(window + 1e-9));
    double frac = window - static_cast<double>(full);
    if (frac < 1e-9) frac = 0.0;
    const std::size_t span = full + (frac > 0.0 ? 1 : 0);
    if (span > in.size()) throw DomainError("averaging window exceeds the series");
    TimeSeries out;
    out.dt = in.dt;
    out.t0 = in.t0 + 0.5 * (window - 1.0) * in.dt;
    out.labels = in.labels;
    const std::size_t n = in.size() - span + 1;
    for (const auto& c : in.columns) {
        std::vector<double> avg(n);
        // prefix sums in long double keep the sliding sums exact enough over 1e8 samples
        std::vector<long double> pre(c.size() + 1, 0.0L);
        for (std::size_t i = 0; i < c.size(); ++i) pre[i + 1] = pre[i] + c[i];
        for (std::size_t i = 0; i < n; ++i) {
            long double s = pre[i + full] - pre[i];
            if (frac > 0.0) s += frac * c[i + full];
            avg[i] = static_cast<double>(s / window);
        }
        out.columns.push_back(std::move(avg));
    }
    return out;
}

inline TimeSeries cycle_average(const TimeSeries& in, double omega_ac)
{
    if (!(omega_ac > 0.0)) throw DomainError("drive frequency must be positive");
    double w = two_pi / (omega_ac * in.dt);
    if (std::abs(w - std::round(w)) < 1e-9 * w) w = std::round(w);
    return moving_average(in, w);
}

// Non-overlapping block means of `block` samples (cheap decimating average).
inline std::vector<double> block_average(const std::vector<double>& x, std::size_t block)
{
    if (block == 0) throw DomainError("block length must be positive");
    std::vector<double> out;
    for (std::size_t i = 0; i + block <= x.size(); i += block) {
        double s = 0.0;
        for (std::size_t k = 0; k < block; ++k) s += x[i + k];
        out.push_back(s / static_cast<double>(block));
    }
    return out;
}

struct DecayFit {
    double rate = 0.0;
    double uncertainty = 0.0;
    double log_intercept = 0.0;
};

// Least-squares line through log E(t); rate = -slope.
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& energy)
{
    if (t.size() != energy.size()) throw DomainError("time and energy lengths differ");
    if (t.size() < 3) throw DomainError("at least three samples required for a decay fit");
    const std::size_t n = t.size();
    double mt = 0.0, my = 0.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(energy[i] > 0.0)) throw DomainError("decay fit needs strictly positive samples");
        y[i] = std::log(energy[i]);
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (y[i] - my);
    }
    if (!(stt > 0.0)) throw DomainError("decay fit needs distinct times");
    const double slope = sty / stt;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - my - slope * (t[i] - mt);
        ssr += r * r;
    }
    DecayFit f;
    f.rate = -slope;
    f.uncertainty = std::sqrt(ssr / static_cast<double>(n - 2) / stt);
    f.log_intercept = my - slope * mt;
    return f;
}

inline DecayFit fit_decay_rate(const TimeSeries& s, const std::string& label, double t_begin, double t_end)
{
    std::vector<double> t, e;
    const auto& c = s.column(label);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double ti = s.time(i);
        if (ti >= t_begin && ti <= t_end) {
            t.push_back(ti);
            e.push_back(c[i]);
        }
    }
    return fit_decay_rate(t, e);
}

// One-sided, segment-averaged periodogram in angular frequency. psd[k]
// covers omega[k] = k d_omega and sum(psd) * d_omega equals the mean
// per-segment variance. For a process with two-sided spectral density S(w)
// (integral over the whole real line = variance), psd approximates 2 S(w).
struct Periodogram {
    double d_omega = 0.0;
    std::vector<double> omega;
    std::vector<double> psd;
};

inline Periodogram periodogram(const std::vector<double>& x, double dt, int segments)
{
    if (segments < 1) throw DomainError("need at least one segment");
    if (!(dt > 0.0)) throw DomainError("sample spacing must be positive");
    const std::size_t M = x.size() / static_cast<std::size_t>(segments);
    if (M < 16) throw DomainError("fewer than 16 samples per segment");
    const std::size_t half = M / 2;
    Periodogram out;
    out.d_omega = two_pi / (static_cast<double>(M) * dt);
    out.psd.assign(half + 1, 0.0);
    out.omega.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) out.omega[k] = out.d_omega * static_cast<double>(k);

    Eigen::FFT<double> fft;
    std::vector<double> seg(M);
    std::vector<std::complex<double>> X;
    const double norm = 1.0 / (static_cast<double>(M) * static_cast<double>(M) * out.d_omega * segments);
    for (int s = 0; s < segments; ++s) {
        const auto first = x.begin() + static_cast<std::ptrdiff_t>(s * M);
        const double mean = std::accumulate(first, first + static_cast<std::ptrdiff_t>(M), 0.0) / M;
        for (std::size_t i = 0; i < M; ++i) seg[i] = first[static_cast<std::ptrdiff_t>(i)] - mean;
        fft.fwd(X, seg);
        for (std::size_t k = 0; k <= half; ++k) {
            const bool edge = k == 0 || (M % 2 == 0 && k == half);
            out.psd[k] += (edge ? 1.0 : 2.0) * std::norm(X[k]) * norm;
        }
    }
    return out;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// Kolmogorov survival function Q(lambda) = P(sqrt(n) D > lambda) as n -> inf.
inline double kolmogorov_q(double lambda)
{
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Theta-function form, fast for small lambda.
        const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
        double s = 0.0;
        for (int k = 1; k < 50; k += 2) s += std::pow(y, k * k);
        return std::clamp(1.0 - std::sqrt(two_pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty()) throw DomainError("KS test needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double D = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        D = std::max({D, F - i / n, (i + 1) / n - F});
    }
    const double sn = std::sqrt(n);
    return {D, kolmogorov_q((sn + 0.12 + 0.11 / sn) * D)};
}

inline double normal_cdf(double x, double variance) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance)); }

struct Estimate {
    double value = 0.0;
    double uncertainty = 0.0;
};

// Mean with a bootstrap standard error (resampling with replacement).
inline Estimate bootstrap_mean(const std::vector<double>& x, std::uint64_t seed, int resamples = 100)
{
    if (x.empty()) throw DomainError("bootstrap needs data");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    CounterRng rng(seed);
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto j = static_cast<std::size_t>(rng.uniform() * n);
            m += x[std::min(j, x.size() - 1)];
        }
        m /= n;
        s1 += m;
        s2 += m * m;
    }
    s1 /= resamples;
    return {mean, std::sqrt(std::max(0.0, s2 / resamples - s1 * s1))};
}

// Variance of P_z in the driven thermal state at time t (drive ~ cos(w t)).
inline double momentum_marginal_variance(double t, double m, double T, double omega_ac)
{
    if (!(T > 0.0)) throw DomainError("temperature must be positive");
    return m * boltzmann * T * (2.0 - std::cos(2.0 * omega_ac * t));
}

inline double momentum_marginal_density(double P_z, double t, double m, double T, double omega_ac)
{
    const double v = momentum_marginal_variance(t, m, T, omega_ac);
    return std::exp(-P_z * P_z / (2.0 * v)) / std::sqrt(two_pi * v);
}

// Macromotion energy of an exact state: momenta shifted back by the
// micromotion correction, plus the effective potential.
inline double macromotion_energy(const System& sys, const SystemState& s)
{
    const Mat3 frame = s.body_frame();
    const MomentumCorrection c = momentum_micromotion_correction(sys.trap, sys.particle, s.R, frame, s.t);
    const Vec3 P = s.P + c.dP;
    const Vec3 J = s.J + c.dJ;
    const Mat3 Iinv = detail::space_inverse_inertia(sys.particle, frame);
    return P.squaredNorm() / (2.0 * sys.particle.mass) + 0.5 * J.dot(Iinv * J)
           + effective_potential(sys.trap, sys.particle, s.R, frame);
}

// Exact state whose macromotion part is `macro`: coordinates displaced by the
// micromotion amplitudes, momenta shifted by the corrections at time macro.t.
inline SystemState exact_from_macromotion(const System& sys, const SystemState& macro)
{
    const Mat3 frame = macro.body_frame();
    const double c = std::cos(sys.trap.omega_ac * macro.t);
    const MicromotionAmplitudes mm = micromotion_amplitudes(sys.trap, sys.particle, macro.R, frame);
    const MomentumCorrection dm = momentum_micromotion_correction(sys.trap, sys.particle, macro.R, frame, macro.t);
    SystemState s = macro;
    s.R += c * mm.eps0;
    s.set_orientation(Orientation::orthonormalize(rotation_from_vector(c * mm.delta0) * frame));
    s.P -= dm.dP;
    s.J -= dm.dJ;
    return s;
}

// Unnormalized phase-space weight exp(-E_macro / kT); energies are measured
// from `reference_energy` to keep the exponent finite.
inline double equilibrium_weight(const System& sys, const SystemState& s, double T, double reference_energy = 0.0)
{
    if (!(T > 0.0)) throw DomainError("temperature must be positive");
    return std::exp(-(macromotion_energy(sys, s) - reference_energy) / (boltzmann * T));
}

// Coordinate-only marginal: exp(-V_eff/kT) times the sin(beta) measure.
inline double coordinate_weight(const System& sys, const Vec3& R, const Orientation& o, double T,
                                double reference_energy = 0.0)
{
    if (!(T > 0.0)) throw DomainError("temperature must be positive");
    const double v = effective_potential(sys.trap, sys.particle, R, o);
    return std::abs(std::sin(o.beta())) * std::exp(-(v - reference_energy) / (boltzmann * T));
}

}  // namespace levirotor
