#pragma once

// Parameters and equations of motion of the degenerate triple-resonant OPA.
//
// Field convention: a is the intracavity subharmonic amplitude (ω), b the
// intracavity pump amplitude (2ω), both in sqrt(photon number). Inputs a_in,
// b_in are in sqrt(photon flux). Rates are amplitude decay rates, so an empty
// port of rate γ_x contributes sqrt(2γ_x) to input-output coupling:
//
//   da/dt = -(γ + iΔ_a) a + κ b a* + sqrt(2γ_in) a_in
//   db/dt = -(γ_b + iΔ_b) b - (κ/2) a² + sqrt(2γ_b,in) b_in
//   a_out = sqrt(2γ_in) a - a_in
//
// Simulation runs in normalized units with γ = 1; physical (SI) values only
// enter through derive_rates / calibrate_kappa.

#include "errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

namespace opacav {

using cplx = std::complex<double>;

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double hbar = 1.054571817e-34;       // J s

/// Physical cavity description. Defaults follow the PPKTP apparatus: 61 mm
/// mirror spacing, 12 mm crystal, 99 %/93 % at 1064 nm, 97 %/HR at 532 nm.
struct CavityParams {
    double mirror_separation = 61e-3;
    double crystal_length = 12e-3;
    double crystal_index_sub = 1.83;
    double crystal_index_pump = 1.89;
    double R_in_sub = 0.99;
    double R_out_sub = 0.93;
    double R_in_pump = 0.97;
    double R_out_pump = 0.999;
    double loss_sub = 0.005;  // round-trip power loss
    double loss_pump = 0.01;
    double wavelength_sub = 1064e-9;

    void validate() const
    {
        auto unit = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0))
                throw InvalidArgument(std::string("cavity.") + name + " must lie in [0,1]");
        };
        unit(R_in_sub, "R_in_sub");
        unit(R_out_sub, "R_out_sub");
        unit(R_in_pump, "R_in_pump");
        unit(R_out_pump, "R_out_pump");
        unit(loss_sub, "loss_sub");
        unit(loss_pump, "loss_pump");
        if (!(crystal_length >= 0.0))
            throw InvalidArgument("cavity.crystal_length must be non-negative");
        if (!(crystal_length < mirror_separation))
            throw InvalidArgument("cavity.crystal_length must be shorter than mirror_separation");
        if (!(crystal_index_sub >= 1.0) || !(crystal_index_pump >= 1.0))
            throw InvalidArgument("cavity crystal indices must be >= 1");
        if (!(wavelength_sub > 0.0))
            throw InvalidArgument("cavity.wavelength_sub must be positive");
    }

    double round_trip_time(double index) const
    {
        const double air = mirror_separation - crystal_length;
        return 2.0 * (air + index * crystal_length) / speed_of_light;
    }
    double round_trip_time_sub() const { return round_trip_time(crystal_index_sub); }
    double round_trip_time_pump() const { return round_trip_time(crystal_index_pump); }
    double pump_angular_frequency() const
    {
        return 2.0 * std::numbers::pi * speed_of_light / (0.5 * wavelength_sub);
    }
};

/// Amplitude decay rates in 1/s, one per port / loss channel.
struct DecayRates {
    double gamma_in = 0;    // subharmonic, probe input mirror
    double gamma_c = 0;     // subharmonic, back mirror
    double gamma_l = 0;     // subharmonic, internal loss
    double gamma_b_in = 0;  // pump, input coupler
    double gamma_b_out = 0; // pump, back mirror leakage
    double gamma_b_loss = 0;
    double tau_sub = 0;
    double tau_pump = 0;

    double gamma() const { return gamma_in + gamma_c + gamma_l; }
    double gamma_b() const { return gamma_b_in + gamma_b_out + gamma_b_loss; }
    bool under_coupled() const { return gamma_in < gamma_c + gamma_l; }
};

/// Decay rates from mirror transmissions and round-trip losses:
/// γ_x = T_x / (2τ), τ the round-trip time at the relevant wavelength.
inline DecayRates derive_rates(const CavityParams& cavity)
{
    cavity.validate();
    DecayRates r;
    r.tau_sub = cavity.round_trip_time_sub();
    r.tau_pump = cavity.round_trip_time_pump();
    if (!(r.tau_sub > 0.0) || !(r.tau_pump > 0.0))
        throw InvalidArgument("round-trip time must be positive");

    const double ks = 1.0 / (2.0 * r.tau_sub);
    const double kp = 1.0 / (2.0 * r.tau_pump);
    r.gamma_in = (1.0 - cavity.R_in_sub) * ks;
    r.gamma_c = (1.0 - cavity.R_out_sub) * ks;
    r.gamma_l = cavity.loss_sub * ks;
    r.gamma_b_in = (1.0 - cavity.R_in_pump) * kp;
    r.gamma_b_out = (1.0 - cavity.R_out_pump) * kp;
    r.gamma_b_loss = cavity.loss_pump * kp;

    if (!(r.gamma() > 0.0) || !(r.gamma_b() > 0.0))
        throw InvalidArgument("lossless cavity: every decay rate is zero");
    if (!(r.gamma_in > 0.0) || !(r.gamma_b_in > 0.0))
        throw InvalidArgument("input couplers must transmit (R_in < 1)");
    return r;
}

/// Normalized model parameters. Totals are computed, never stored, so
/// γ = γ_in + γ_c + γ_l holds exactly on every construction path.
struct ModelParams {
    double gamma_in = 0.01 / 0.085;
    double gamma_c = 0.07 / 0.085;
    double gamma_l = 0.005 / 0.085;
    double gamma_b_in = 0.05 * 0.03 / 0.041;
    double gamma_b_l = 0.05 * 0.011 / 0.041;
    double kappa = 0.01;
    double seed_amp = 1.0 / std::sqrt(2.0 * (0.01 / 0.085));
    double pump_ratio = 0.0;
    double theta = std::numbers::pi; // two-photon phase φ_pump - 2φ_seed
    double detune_ratio = 2.0;       // Δ_b / Δ_a under a cavity-length scan

    double gamma() const { return gamma_in + gamma_c + gamma_l; }
    double gamma_b() const { return gamma_b_in + gamma_b_l; }

    /// Phase in the "φ = π/2 is deamplification" convention.
    double paper_phi() const { return 0.5 * theta; }
    void set_paper_phi(double phi) { theta = 2.0 * phi; }

    bool under_coupled() const { return gamma_in < gamma_c + gamma_l; }
    /// Pump linewidth narrower than the subharmonic one.
    bool eit_like_regime() const { return gamma_b() < gamma(); }

    void validate() const
    {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw InvalidArgument(std::string("model.") + name + " must be positive");
        };
        positive(gamma_in, "gamma_in");
        positive(gamma_c, "gamma_c");
        positive(gamma_l, "gamma_l");
        positive(gamma_b_in, "gamma_b_in");
        positive(gamma_b_l, "gamma_b_l");
        // κ = 0 is the bare linear cavity and only makes sense with the pump off
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw InvalidArgument("model.kappa must be non-negative");
        if (kappa == 0.0 && pump_ratio > 0.0)
            throw InvalidArgument("model.kappa must be positive when the pump is on");
        if (!(seed_amp >= 0.0) || !std::isfinite(seed_amp))
            throw InvalidArgument("model.seed_amp must be non-negative");
        if (!(pump_ratio >= 0.0) || !std::isfinite(pump_ratio))
            throw InvalidArgument("model.pump_ratio must be non-negative");
        if (!std::isfinite(theta) || !std::isfinite(detune_ratio))
            throw InvalidArgument("model.theta and model.detune_ratio must be finite");
    }

    /// Seed amplitude giving |a|² = 1 at κ = 0, Δ = 0.
    static double unit_photon_seed(double gamma_in, double gamma)
    {
        return gamma / std::sqrt(2.0 * gamma_in);
    }

    /// Rates divided by γ, κ scaled to the same time unit. Back-mirror leakage
    /// and internal loss of the pump are lumped into gamma_b_l.
    static ModelParams normalized(const DecayRates& r, double kappa_per_second)
    {
        const double g = r.gamma();
        ModelParams p;
        p.gamma_in = r.gamma_in / g;
        p.gamma_c = r.gamma_c / g;
        p.gamma_l = r.gamma_l / g;
        p.gamma_b_in = r.gamma_b_in / g;
        p.gamma_b_l = (r.gamma_b_out + r.gamma_b_loss) / g;
        p.kappa = kappa_per_second / g;
        p.seed_amp = unit_photon_seed(p.gamma_in, p.gamma());
        return p;
    }
};

/// Subharmonic and pump detunings seen by the cavity.
struct Detunings {
    double sub = 0.0;
    double pump = 0.0;
};

inline Detunings scan_detunings(const ModelParams& p, double delta)
{
    return {delta, p.detune_ratio * delta};
}

/// Intracavity amplitudes at one operating point.
struct FieldState {
    cplx a{};
    cplx b{};
    double delta = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
};

/// Pump input amplitude at threshold: κ|b| = γ for the empty resonant pump
/// cavity, i.e. |b_in,th| = γ γ_b / (κ sqrt(2γ_b,in)).
inline double threshold_drive(const ModelParams& p)
{
    if (!(p.kappa > 0.0))
        throw InvalidArgument("threshold_drive: kappa must be positive");
    if (!(p.gamma_b_in > 0.0))
        throw InvalidArgument("threshold_drive: gamma_b_in must be positive");
    return p.gamma() * p.gamma_b() / (p.kappa * std::sqrt(2.0 * p.gamma_b_in));
}

/// Complex pump input b_in = sqrt(P/P_th) |b_in,th| e^{iΘ}.
inline cplx pump_input(const ModelParams& p)
{
    if (p.pump_ratio == 0.0)
        return {};
    return std::polar(std::sqrt(p.pump_ratio) * threshold_drive(p), p.theta);
}

inline cplx seed_input(const ModelParams& p) { return {p.seed_amp, 0.0}; }

/// Empty-cavity pump parameter σ = sqrt(P/P_th).
inline double pump_parameter(const ModelParams& p) { return std::sqrt(p.pump_ratio); }

/// Time derivatives (da/dt, db/dt). Every solver and integrator in the
/// library evaluates the dynamics through this function.
inline std::pair<cplx, cplx> equations_of_motion(const ModelParams& p, cplx a, cplx b,
                                                 Detunings det)
{
    const cplx i{0.0, 1.0};
    const cplx da = -(p.gamma() + i * det.sub) * a + p.kappa * b * std::conj(a) +
                    std::sqrt(2.0 * p.gamma_in) * seed_input(p);
    const cplx db = -(p.gamma_b() + i * det.pump) * b - 0.5 * p.kappa * a * a +
                    std::sqrt(2.0 * p.gamma_b_in) * pump_input(p);
    return {da, db};
}

inline std::pair<cplx, cplx> equations_of_motion(const ModelParams& p, cplx a, cplx b,
                                                 double delta)
{
    return equations_of_motion(p, a, b, scan_detunings(p, delta));
}

/// κ (1/s) that places threshold at the given pump power (W), with
/// |b_in|² counted as pump photon flux at 2ω.
inline double calibrate_kappa(const DecayRates& r, double threshold_power,
                              const CavityParams& cavity)
{
    if (!(threshold_power > 0.0))
        throw InvalidArgument("threshold power must be positive");
    const double flux = threshold_power / (hbar * cavity.pump_angular_frequency());
    return r.gamma() * r.gamma_b() / (std::sqrt(flux) * std::sqrt(2.0 * r.gamma_b_in));
}

/// Threshold pump power (W) implied by κ (1/s).
inline double threshold_power(const DecayRates& r, double kappa, const CavityParams& cavity)
{
    if (!(kappa > 0.0))
        throw InvalidArgument("kappa must be positive");
    const double drive = r.gamma() * r.gamma_b() / (kappa * std::sqrt(2.0 * r.gamma_b_in));
    return hbar * cavity.pump_angular_frequency() * drive * drive;
}

} // namespace opacav
