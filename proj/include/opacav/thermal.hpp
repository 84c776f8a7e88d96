#pragma once

// Cavity-length scan with a single-pole thermo-optic detuning.
//
// θ is the thermal shift of the pump resonance. Since the optical path change
// is common to both wavelengths, the subharmonic sees coupling_sub·θ (1/2 by
// default):
//
//   Δ_b,eff = detune_ratio·δ(t) - θ,   Δ_a,eff = δ(t) - coupling_sub·θ
//   dθ/dt   = (alpha_th |b|² - θ) / tau_th
//
// By default the optical fields are eliminated adiabatically (steady state at
// the instantaneous detunings); the full-ODE mode integrates a, b and θ
// together for validation on short scans.

#include "detail/dopri.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "steady_state.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace opacav {

struct ThermalParams {
    double alpha_th = 0.0; // thermal shift per unit |b|²
    double tau_th = 100.0; // relaxation time, units of 1/γ
    double coupling_sub = 0.5;

    void validate() const
    {
        if (!(tau_th > 0.0))
            throw InvalidArgument("thermal.tau_th must be positive");
        if (!(alpha_th >= 0.0) || !std::isfinite(alpha_th))
            throw InvalidArgument("thermal.alpha_th must be non-negative");
        if (!std::isfinite(coupling_sub))
            throw InvalidArgument("thermal.coupling_sub must be finite");
    }

    /// alpha_th giving a pump-resonance shift of `shift_in_linewidths`·γ_b
    /// for the intracavity pump at threshold, |b|² = γ²/κ².
    static double alpha_for(const ModelParams& p, double shift_in_linewidths)
    {
        return shift_in_linewidths * p.gamma_b() * p.kappa * p.kappa / (p.gamma() * p.gamma());
    }
};

/// Triangular scan of the subharmonic detuning: offset - amplitude at t = 0,
/// offset + amplitude at period/2, back at period.
struct ScanWaveform {
    double period = 2e4;
    double amplitude = 0.25;
    double offset = 0.0;

    void validate() const
    {
        if (!(period > 0.0))
            throw InvalidArgument("scan.period must be positive");
        if (!(amplitude > 0.0))
            throw InvalidArgument("scan.amplitude must be positive");
        if (!std::isfinite(offset))
            throw InvalidArgument("scan.offset must be finite");
    }

    double value(double t) const
    {
        double phase = std::fmod(t / period, 1.0);
        if (phase < 0.0)
            phase += 1.0;
        return phase <= 0.5 ? offset - amplitude + 4.0 * amplitude * phase
                            : offset + amplitude - 4.0 * amplitude * (phase - 0.5);
    }

    /// Detuning change per unit time.
    double slew() const { return 4.0 * amplitude / period; }
};

struct ThermalOptions {
    int samples = 4001;
    int periods = 1;
    double rtol = 1e-9;
    double atol = 1e-12;
    bool full_ode = false;
};

struct ThermalRow {
    double t = 0;
    double scan_value = 0;
    double theta = 0;
    double pump_trans = 0;
    double sub_refl = 0; // NaN when seedless
};

struct ThermalTrace {
    std::vector<ThermalRow> rows;
    bool quasi_static_warning = false;
};

namespace detail {

inline Detunings thermal_detunings(const ModelParams& p, const ThermalParams& tp,
                                   double delta, double theta)
{
    return {delta - tp.coupling_sub * theta, p.detune_ratio * delta - theta};
}

// Quasi-static optical state with warm-started continuation.
class QuasiStaticField {
public:
    QuasiStaticField(const ModelParams& p, const ThermalParams& tp) : p_(p), tp_(tp) {}

    const FieldState& at(double delta, double theta, double t)
    {
        SolveOptions opts;
        if (have_last_)
            opts.warm_start = last_;
        try {
            last_ = solve_steady(p_, thermal_detunings(p_, tp_, delta, theta), opts);
        } catch (const NonConvergence& e) {
            if (!have_last_)
                throw;
            // retry cold before giving up
            opts.warm_start.reset();
            try {
                last_ = solve_steady(p_, thermal_detunings(p_, tp_, delta, theta), opts);
            } catch (const NonConvergence& e2) {
                std::ostringstream msg;
                msg << e2.what() << " during thermal scan at t=" << t;
                throw NonConvergence(msg.str(), e2.delta(), e2.a(), e2.b(), e2.residual());
            }
        }
        have_last_ = true;
        return last_;
    }

private:
    const ModelParams& p_;
    const ThermalParams& tp_;
    FieldState last_;
    bool have_last_ = false;
};

inline double sub_reflection(const ModelParams& p, cplx a)
{
    if (p.seed_amp == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    const cplx ain = seed_input(p);
    return std::norm((std::sqrt(2.0 * p.gamma_in) * a - ain) / ain);
}

} // namespace detail

/// Simulated scan trace. `pump_ratio` overrides params.pump_ratio.
inline ThermalTrace thermal_scan(ModelParams p, const ThermalParams& tp,
                                 const ScanWaveform& scan, double pump_ratio,
                                 const ThermalOptions& opt = {})
{
    p.pump_ratio = pump_ratio;
    p.validate();
    tp.validate();
    scan.validate();
    if (pump_ratio >= 1.0)
        throw InvalidArgument("thermal_scan requires pump_ratio < 1");
    if (opt.samples < 3 || opt.periods < 1)
        throw InvalidArgument("thermal options: samples >= 3 and periods >= 1 required");

    ThermalTrace trace;
    const double longest_lifetime = 1.0 / std::min(p.gamma(), p.gamma_b());
    trace.quasi_static_warning = scan.slew() * longest_lifetime > 0.1 * p.gamma();

    const double t_end = scan.period * opt.periods;
    const auto n = static_cast<std::size_t>(opt.samples);
    trace.rows.reserve(n);
    auto sample_time = [&](std::size_t k) {
        return k + 1 == n ? t_end : t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    };

    detail::QuasiStaticField field(p, tp);
    detail::AdaptiveOptions ao;
    ao.rtol = opt.rtol;
    ao.atol = opt.atol;
    ao.h_max = scan.period / 200.0;

    // Thermal equilibrium at the start of the scan (off resonance): the
    // relaxation map θ -> alpha|b|²(θ) is a contraction there.
    double theta = 0.0;
    for (int it = 0; it < 500; ++it) {
        const double next =
            tp.alpha_th * std::norm(field.at(scan.value(0.0), theta, 0.0).b);
        const double upd = 0.5 * (theta + next);
        if (std::abs(upd - theta) <= 1e-15 * std::max(1.0, std::abs(theta))) {
            theta = upd;
            break;
        }
        theta = upd;
    }

    if (!opt.full_ode) {
        auto rhs = [&](double t, double th) {
            const FieldState& s = field.at(scan.value(t), th, t);
            return (tp.alpha_th * std::norm(s.b) - th) / tp.tau_th;
        };
        auto norm = [&](double err, double y) {
            return std::abs(err) / (opt.atol + opt.rtol * std::abs(y));
        };
        double h = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = sample_time(k);
            if (k > 0)
                theta = detail::integrate_adaptive(rhs, norm, sample_time(k - 1), t, theta, h, ao);
            const double delta = scan.value(t);
            const FieldState& s = field.at(delta, theta, t);
            trace.rows.push_back({t, delta, theta, 2.0 * p.gamma_b_l * std::norm(s.b),
                                  detail::sub_reflection(p, s.a)});
        }
        return trace;
    }

    using Vec5 = Eigen::Matrix<double, 5, 1>;
    const FieldState s0 = field.at(scan.value(0.0), theta, 0.0);
    Vec5 y;
    y << s0.a.real(), s0.a.imag(), s0.b.real(), s0.b.imag(), theta;
    auto rhs = [&](double t, const Vec5& v) {
        const cplx a{v[0], v[1]}, b{v[2], v[3]};
        const auto [da, db] =
            equations_of_motion(p, a, b, detail::thermal_detunings(p, tp, scan.value(t), v[4]));
        Vec5 out;
        out << da.real(), da.imag(), db.real(), db.imag(),
            (tp.alpha_th * std::norm(b) - v[4]) / tp.tau_th;
        return out;
    };
    auto norm = [&](const Vec5& err, const Vec5& v) {
        const double scale = v.head<4>().cwiseAbs().maxCoeff();
        double e = 0.0;
        for (int k = 0; k < 4; ++k)
            e = std::max(e, std::abs(err[k]) / (opt.atol + opt.rtol * scale));
        return std::max(e, std::abs(err[4]) / (opt.atol + opt.rtol * std::abs(v[4])));
    };
    double h = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = sample_time(k);
        if (k > 0)
            y = detail::integrate_adaptive(rhs, norm, sample_time(k - 1), t, y, h, ao);
        const cplx a{y[0], y[1]}, b{y[2], y[3]};
        trace.rows.push_back({t, scan.value(t), y[4], 2.0 * p.gamma_b_l * std::norm(b),
                              detail::sub_reflection(p, a)});
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Ramp analysis

struct RampPeak {
    double width = 0;       // FWHM in time
    double center = 0;      // scan value midway between the half-maximum crossings
    double height = 0;
};

namespace detail {

inline RampPeak ramp_peak(const std::vector<ThermalRow>& rows, std::size_t begin,
                          std::size_t end, const char* label)
{
    if (end <= begin + 2)
        throw PeakNotFound(std::string("ramp too short: ") + label);
    std::size_t imax = begin;
    for (std::size_t k = begin; k < end; ++k)
        if (rows[k].pump_trans > rows[imax].pump_trans)
            imax = k;
    const double half = 0.5 * rows[imax].pump_trans;
    if (!(half > 0.0))
        throw PeakNotFound(std::string("no pump transmission on ") + label + " ramp");

    std::size_t l = imax, r = imax;
    while (l > begin && rows[l].pump_trans > half)
        --l;
    while (r + 1 < end && rows[r].pump_trans > half)
        ++r;
    if (rows[l].pump_trans > half || rows[r].pump_trans > half)
        throw PeakNotFound(std::string("peak not bracketed on ") + label + " ramp");

    // linear interpolation of (t, scan_value) at the half-maximum crossing in [k, k+1]
    auto cross = [&](std::size_t k) {
        const double y0 = rows[k].pump_trans, y1 = rows[k + 1].pump_trans;
        const double f = (half - y0) / (y1 - y0);
        return std::pair{rows[k].t + f * (rows[k + 1].t - rows[k].t),
                         rows[k].scan_value + f * (rows[k + 1].scan_value - rows[k].scan_value)};
    };
    const auto [t_left, s_left] = cross(l);
    const auto [t_right, s_right] = cross(r - 1);
    RampPeak pk;
    pk.width = t_right - t_left;
    pk.center = 0.5 * (s_left + s_right);
    pk.height = rows[imax].pump_trans;
    return pk;
}

inline std::size_t turnaround(const ThermalTrace& trace)
{
    std::size_t top = 0;
    for (std::size_t k = 1; k < trace.rows.size(); ++k)
        if (trace.rows[k].scan_value > trace.rows[top].scan_value)
            top = k;
    return top;
}

} // namespace detail

/// Peaks of the first up-ramp and the following down-ramp.
inline std::pair<RampPeak, RampPeak> ramp_peaks(const ThermalTrace& trace)
{
    const std::size_t top = detail::turnaround(trace);
    std::size_t bottom = trace.rows.size();
    for (std::size_t k = top + 1; k + 1 < trace.rows.size(); ++k)
        if (trace.rows[k + 1].scan_value > trace.rows[k].scan_value) {
            bottom = k + 1;
            break;
        }
    return {detail::ramp_peak(trace.rows, 0, top + 1, "up"),
            detail::ramp_peak(trace.rows, top, bottom, "down")};
}

/// |W_up - W_down| / (W_up + W_down) from the pump-transmission FWHM of each
/// ramp direction.
inline double asymmetry_metric(const ThermalTrace& trace)
{
    const auto [up, down] = ramp_peaks(trace);
    const double sum = up.width + down.width;
    return sum > 0.0 ? std::abs(up.width - down.width) / sum : 0.0;
}

} // namespace opacav
