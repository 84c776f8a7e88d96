#pragma once

// Pound-Drever-Hall readout of the reflected subharmonic.
//
// The seed is phase modulated at Ω with small depth m, which to first order
// adds sidebands +m/2 a_in at ω+Ω and -m/2 a_in at ω-Ω. Around a steady state
// (a, b) the fluctuation δa = a₊e^{-iΩt} + a₋e^{iΩt} (likewise δb) obeys the
// linearized equations of motion; the parametric term couples a₊ to a₋* via
// b and the pump sidebands are driven by κ a δa. The unknown vector is
// (a₊, a₋*, b₊, b₋*):
//
//   (γ + i(Δ_a-Ω)) a₊  - κ b a₋* - κ a* b₊  =  sqrt(2γ_in)(m/2) a_in
//   (γ - i(Δ_a+Ω)) a₋* - κ b* a₊ - κ a b₋*  = -sqrt(2γ_in)(m/2) a_in*
//   (γ_b + i(Δ_b-Ω)) b₊  + κ a a₊           =  0
//   (γ_b - i(Δ_b+Ω)) b₋* + κ a* a₋*         =  0
//
// The photodetector beat at Ω is C = A₀*A₊ + A₀A₋*, with A the reflected
// amplitudes, and the mixer output is Re[C e^{-iθ_d}].

#include "errors.hpp"
#include "model.hpp"
#include "steady_state.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>

namespace opacav {

/// Pump treatment: resonant (cavity) or held fixed (double-resonant OPA).
enum class PumpMode { cavity, clamped };

struct ModulationSpec {
    double omega = 50.0;
    double depth = 0.2;
    // -π/2 makes the far-sideband error equal -m|a_in|² Im r (positive constant).
    double demod_phase = -0.5 * std::numbers::pi;

    void validate() const
    {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw InvalidArgument("modulation.omega must be positive");
        if (!(depth > 0.0) || !std::isfinite(depth))
            throw InvalidArgument("modulation.depth must be positive");
        if (!std::isfinite(demod_phase))
            throw InvalidArgument("modulation.demod_phase must be finite");
    }
    /// Second-order sidebands stop being negligible.
    bool depth_warning() const { return depth > 0.5; }
};

struct SidebandResponse {
    cplx a_out_carrier{};
    cplx a_out_plus{};
    cplx a_out_minus{};
    cplx a_plus{}, a_minus{}; // intracavity subharmonic sidebands
    cplx b_plus{}, b_minus{}; // intracavity pump sidebands
};

inline SidebandResponse sideband_response(const ModelParams& p, const FieldState& s,
                                          const ModulationSpec& mod,
                                          PumpMode mode = PumpMode::cavity)
{
    if (!s.converged)
        throw InvalidArgument("sideband_response requires a converged steady state");
    mod.validate();

    const cplx i{0.0, 1.0};
    const Detunings det = scan_detunings(p, s.delta);
    const double k = p.kappa;
    const double W = mod.omega;
    const cplx ain = seed_input(p);
    const double ra = std::sqrt(2.0 * p.gamma_in);
    const cplx half = 0.5 * mod.depth * ain;

    Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();

    M(0, 0) = p.gamma() + i * (det.sub - W);
    M(0, 1) = -k * s.b;
    M(1, 0) = -k * std::conj(s.b);
    M(1, 1) = p.gamma() - i * (det.sub + W);
    rhs(0) = ra * half;
    rhs(1) = -ra * std::conj(half);

    if (mode == PumpMode::cavity) {
        M(0, 2) = -k * std::conj(s.a);
        M(1, 3) = -k * s.a;
        M(2, 0) = k * s.a;
        M(2, 2) = p.gamma_b() + i * (det.pump - W);
        M(3, 1) = k * std::conj(s.a);
        M(3, 3) = p.gamma_b() - i * (det.pump + W);
    } else {
        M(2, 2) = 1.0;
        M(3, 3) = 1.0;
    }

    const Eigen::PartialPivLU<Eigen::Matrix4cd> lu(M);
    if (!(lu.rcond() > 1e-14)) {
        std::ostringstream msg;
        msg << "sideband response matrix is singular at delta=" << s.delta;
        throw SingularResponse(msg.str());
    }
    const Eigen::Vector4cd x = lu.solve(rhs);

    SidebandResponse r;
    r.a_plus = x(0);
    r.a_minus = std::conj(x(1));
    r.b_plus = x(2);
    r.b_minus = std::conj(x(3));
    r.a_out_carrier = ra * s.a - ain;
    r.a_out_plus = ra * r.a_plus - half;
    r.a_out_minus = ra * r.a_minus + half;
    return r;
}

inline double demodulate(cplx carrier, cplx plus, cplx minus, double demod_phase)
{
    const cplx beat = std::conj(carrier) * plus + carrier * std::conj(minus);
    return std::real(beat * std::polar(1.0, -demod_phase));
}

inline double pdh_error(const SidebandResponse& r, const ModulationSpec& mod)
{
    return demodulate(r.a_out_carrier, r.a_out_plus, r.a_out_minus, mod.demod_phase);
}

inline double pdh_error(const ModelParams& p, const FieldState& s, const ModulationSpec& mod,
                        PumpMode mode = PumpMode::cavity)
{
    return pdh_error(sideband_response(p, s, mod, mode), mod);
}

/// Error signal with both sidebands taken as promptly reflected (-1 times
/// their input). At the default demodulation phase this is -m|a_in|² Im r.
inline double far_sideband_error(const ModelParams& p, const FieldState& s,
                                 const ModulationSpec& mod)
{
    const cplx ain = seed_input(p);
    const cplx half = 0.5 * mod.depth * ain;
    const cplx carrier = std::sqrt(2.0 * p.gamma_in) * s.a - ain;
    return demodulate(carrier, -half, half, mod.demod_phase);
}

/// Time-averaged second-order flux balance of the sideband fields. Both
/// residuals vanish for an exact linearized solution; the exchange term is
/// counted with opposite signs in the two fields.
struct SidebandFluxBalance {
    double sub_drive = 0;
    double sub_decay = 0;
    double sub_carrier_pump = 0;   // exchange with the steady pump
    double exchange = 0;           // gained by δa from δb
    double pump_decay = 0;

    double sub_residual() const { return sub_drive + sub_carrier_pump + exchange - sub_decay; }
    double pump_residual() const { return -exchange - pump_decay; }
};

inline SidebandFluxBalance sideband_flux_balance(const ModelParams& p, const FieldState& s,
                                                 const SidebandResponse& r,
                                                 const ModulationSpec& mod)
{
    const cplx ain = seed_input(p);
    const cplx half = 0.5 * mod.depth * ain;
    const double k = p.kappa;
    SidebandFluxBalance f;
    f.sub_drive = 2.0 * std::sqrt(2.0 * p.gamma_in) *
                  std::real(std::conj(r.a_plus) * half - std::conj(r.a_minus) * half);
    f.sub_decay = 2.0 * p.gamma() * (std::norm(r.a_plus) + std::norm(r.a_minus));
    f.sub_carrier_pump =
        4.0 * k * std::real(s.b * std::conj(r.a_plus) * std::conj(r.a_minus));
    f.exchange = 2.0 * k *
                 std::real(std::conj(s.a) *
                           (std::conj(r.a_plus) * r.b_plus + std::conj(r.a_minus) * r.b_minus));
    f.pump_decay = 2.0 * p.gamma_b() * (std::norm(r.b_plus) + std::norm(r.b_minus));
    return f;
}

} // namespace opacav
