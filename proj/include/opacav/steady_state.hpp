#pragma once

// Steady states of the coupled subharmonic/pump system, their linear
// stability, and the closed-form undepleted limits.

#include "errors.hpp"
#include "model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace opacav {

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 200;
    double damping = 1.0;
    std::optional<FieldState> warm_start;

    void validate() const
    {
        if (!(tol > 0.0))
            throw InvalidArgument("solve.tol must be positive");
        if (max_iter < 1)
            throw InvalidArgument("solve.max_iter must be >= 1");
        if (!(damping > 0.0 && damping <= 1.0))
            throw InvalidArgument("solve.damping must lie in (0,1]");
    }
};

struct StabilityReport {
    std::array<cplx, 4> eigenvalues{};
    double max_real = 0.0;
    bool stable = false;
};

namespace detail {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline Vec4 pack(cplx a, cplx b) { return {a.real(), a.imag(), b.real(), b.imag()}; }
inline cplx field_a(const Vec4& x) { return {x[0], x[1]}; }
inline cplx field_b(const Vec4& x) { return {x[2], x[3]}; }

inline Vec4 residual(const ModelParams& p, const Vec4& x, Detunings det)
{
    const auto [da, db] = equations_of_motion(p, field_a(x), field_b(x), det);
    return pack(da, db);
}

// Writes the real 2x2 block of ∂f/∂(Re z, Im z) for f with Wirtinger
// derivatives A = ∂f/∂z and B = ∂f/∂z*: ∂f/∂x = A + B, ∂f/∂y = i(A - B).
inline void put_block(Mat4& J, int row, int col, cplx dz, cplx dzbar)
{
    const cplx dx = dz + dzbar;
    const cplx dy = cplx{0.0, 1.0} * (dz - dzbar);
    J(row, col) = dx.real();
    J(row + 1, col) = dx.imag();
    J(row, col + 1) = dy.real();
    J(row + 1, col + 1) = dy.imag();
}

/// Analytic Jacobian of equations_of_motion in the real 4-vector form.
inline Mat4 jacobian(const ModelParams& p, cplx a, cplx b, Detunings det)
{
    const cplx i{0.0, 1.0};
    Mat4 J = Mat4::Zero();
    put_block(J, 0, 0, -(p.gamma() + i * det.sub), p.kappa * b);
    put_block(J, 0, 2, p.kappa * std::conj(a), 0.0);
    put_block(J, 2, 0, -p.kappa * a, 0.0);
    put_block(J, 2, 2, -(p.gamma_b() + i * det.pump), 0.0);
    return J;
}

// Per-equation residual weights: each equation is measured against its own
// drive term. An undriven equation borrows the other's scale.
inline Vec4 residual_weights(const ModelParams& p)
{
    double sa = std::abs(std::sqrt(2.0 * p.gamma_in) * seed_input(p));
    double sb = std::abs(std::sqrt(2.0 * p.gamma_b_in) * pump_input(p));
    if (sa == 0.0)
        sa = sb > 0.0 ? sb : 1.0;
    if (sb == 0.0)
        sb = sa;
    return {1.0 / sa, 1.0 / sa, 1.0 / sb, 1.0 / sb};
}

inline double weighted_norm(const Vec4& F, const Vec4& w)
{
    return F.cwiseProduct(w).lpNorm<Eigen::Infinity>();
}

/// Solves (γ + iΔ) a - c a* = s for a, i.e. the linear subharmonic response
/// to a fixed pump term c = κ b.
inline cplx linear_subharmonic(double gamma, double delta, cplx c, cplx s)
{
    const double det = gamma * gamma + delta * delta - std::norm(c);
    return ((gamma - cplx{0.0, delta}) * s + c * std::conj(s)) / det;
}

} // namespace detail

/// Empty-cavity pump amplitude sqrt(2γ_b,in) b_in / (γ_b + iΔ_b).
inline cplx free_pump(const ModelParams& p, double pump_detuning)
{
    return std::sqrt(2.0 * p.gamma_b_in) * pump_input(p) /
           cplx{p.gamma_b(), pump_detuning};
}

/// Undepleted-pump closed form: pump from the empty cavity, subharmonic from
/// the linear parametric response to it.
inline FieldState undepleted_state(const ModelParams& p, Detunings det)
{
    FieldState s;
    s.b = free_pump(p, det.pump);
    s.a = detail::linear_subharmonic(p.gamma(), det.sub, p.kappa * s.b,
                                     std::sqrt(2.0 * p.gamma_in) * seed_input(p));
    s.delta = det.sub;
    return s;
}

inline double residual_norm(const ModelParams& p, const FieldState& s, Detunings det)
{
    return detail::weighted_norm(detail::residual(p, detail::pack(s.a, s.b), det),
                                 detail::residual_weights(p));
}

/// Steady state with a = 0 and the empty-cavity pump. Exact when seedless.
inline FieldState trivial_state(const ModelParams& p, double delta)
{
    const Detunings det = scan_detunings(p, delta);
    FieldState s;
    s.b = free_pump(p, det.pump);
    s.delta = delta;
    s.residual_norm = residual_norm(p, s, det);
    s.converged = p.seed_amp == 0.0;
    return s;
}

/// Damped Newton on (Re a, Im a, Re b, Im b) with step halving.
inline FieldState solve_steady(const ModelParams& p, Detunings det, const SolveOptions& opts = {})
{
    p.validate();
    opts.validate();
    if (p.pump_ratio >= 1.0 && p.seed_amp == 0.0 && det.sub == 0.0 && det.pump == 0.0)
        throw AboveThresholdUnstableSeedless(
            "seedless operation at or above threshold has no stable trivial state");

    const FieldState start = opts.warm_start ? *opts.warm_start : undepleted_state(p, det);
    const detail::Vec4 w = detail::residual_weights(p);

    detail::Vec4 x = detail::pack(start.a, start.b);
    detail::Vec4 F = detail::residual(p, x, det);
    double fnorm = detail::weighted_norm(F, w);

    for (int it = 0; it <= opts.max_iter; ++it) {
        if (fnorm < opts.tol) {
            FieldState out;
            out.a = detail::field_a(x);
            out.b = detail::field_b(x);
            out.delta = det.sub;
            out.converged = true;
            out.residual_norm = fnorm;
            return out;
        }
        if (it == opts.max_iter)
            break;

        const detail::Mat4 J = detail::jacobian(p, detail::field_a(x), detail::field_b(x), det);
        const detail::Vec4 dx = J.fullPivLu().solve(-F);

        double step = opts.damping;
        detail::Vec4 trial = x + step * dx;
        detail::Vec4 Ft = detail::residual(p, trial, det);
        double ft = detail::weighted_norm(Ft, w);
        while (!(ft < fnorm) && step > 1e-12) {
            step *= 0.5;
            trial = x + step * dx;
            Ft = detail::residual(p, trial, det);
            ft = detail::weighted_norm(Ft, w);
        }
        if (!(ft < fnorm))
            break; // no descent direction left
        x = trial;
        F = Ft;
        fnorm = ft;
    }

    std::ostringstream msg;
    msg << "steady-state Newton did not converge at delta=" << det.sub
        << " (relative residual " << fnorm << ")";
    throw NonConvergence(msg.str(), det.sub, detail::field_a(x), detail::field_b(x), fnorm);
}

inline FieldState solve_steady(const ModelParams& p, double delta, const SolveOptions& opts = {})
{
    return solve_steady(p, scan_detunings(p, delta), opts);
}

/// Solves cold and from the supplied warm start; throws MultiStability when
/// either field differs by more than 10·tol relative.
inline FieldState solve_steady_checked(const ModelParams& p, double delta,
                                       const SolveOptions& opts)
{
    SolveOptions cold_opts = opts;
    cold_opts.warm_start.reset();
    const FieldState cold = solve_steady(p, delta, cold_opts);
    if (!opts.warm_start)
        return cold;
    const FieldState warm = solve_steady(p, delta, opts);
    auto rel = [](cplx x, cplx y) {
        const double m = std::max(std::abs(x), std::abs(y));
        return m > 0.0 ? std::abs(x - y) / m : 0.0;
    };
    const double diff = std::max(rel(cold.a, warm.a), rel(cold.b, warm.b));
    if (diff > 10.0 * opts.tol) {
        std::ostringstream msg;
        msg << "cold and warm-started solutions differ at delta=" << delta
            << " (|diff| = " << diff << ")";
        throw MultiStability(msg.str());
    }
    return warm;
}

/// Eigenvalues of the linearized 4-real-dimensional dynamics.
inline StabilityReport stability(const ModelParams& p, const FieldState& s, Detunings det)
{
    if (!s.converged)
        throw InvalidArgument("stability requires a converged steady state");
    const detail::Mat4 J = detail::jacobian(p, s.a, s.b, det);
    Eigen::EigenSolver<detail::Mat4> es(J, false);
    StabilityReport r;
    r.max_real = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        r.eigenvalues[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        r.max_real = std::max(r.max_real, es.eigenvalues()[k].real());
    }
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    r.stable = r.max_real < 0.0;
    return r;
}

inline StabilityReport stability(const ModelParams& p, const FieldState& s)
{
    return stability(p, s, scan_detunings(p, s.delta));
}

/// Intensity gain |a(Θ)|² / |a(κ=0)|² on resonance, undepleted pump:
/// |1 + σ e^{iΘ}|² / (1 - σ²)². Gives 1/(1-σ)² at Θ=0, 1/(1+σ)² at Θ=π.
inline double classical_gain(const ModelParams& p, double theta)
{
    if (!(p.pump_ratio >= 0.0) || p.pump_ratio >= 1.0)
        throw InvalidArgument("classical_gain requires 0 <= pump_ratio < 1");
    const double sigma = pump_parameter(p);
    const double denom = 1.0 - sigma * sigma;
    return std::norm(1.0 + std::polar(sigma, theta)) / (denom * denom);
}

/// Photon and energy flux bookkeeping at a steady state. Subharmonic photon
/// fluxes are per ħω, pump per ħ(2ω).
struct FluxBalance {
    double sub_drive = 0;       // 2 sqrt(2γ_in) Re(a* a_in)
    double sub_decay = 0;       // 2γ |a|²
    double sub_parametric = 0;  // 2κ Re(b a*²), subharmonic photons created
    double pump_drive = 0;
    double pump_decay = 0;
    double pump_parametric = 0; // κ Re(b* a²), pump photons consumed

    double input_energy = 0;    // |a_in|² + 2|b_in|²   (units of ħω per time)
    double output_energy = 0;   // reflected + transmitted + dissipated, both fields

    double sub_residual() const { return sub_drive + sub_parametric - sub_decay; }
    double pump_residual() const { return pump_drive - pump_parametric - pump_decay; }
    double manley_rowe_residual() const { return sub_parametric - 2.0 * pump_parametric; }
    double energy_residual() const { return input_energy - output_energy; }
};

inline FluxBalance flux_balance(const ModelParams& p, const FieldState& s)
{
    const cplx ain = seed_input(p);
    const cplx bin = pump_input(p);
    const double ra = std::sqrt(2.0 * p.gamma_in);
    const double rb = std::sqrt(2.0 * p.gamma_b_in);
    const cplx a = s.a, b = s.b;

    FluxBalance f;
    f.sub_drive = 2.0 * ra * std::real(std::conj(a) * ain);
    f.sub_decay = 2.0 * p.gamma() * std::norm(a);
    f.sub_parametric = 2.0 * p.kappa * std::real(b * std::conj(a) * std::conj(a));
    f.pump_drive = 2.0 * rb * std::real(std::conj(b) * bin);
    f.pump_decay = 2.0 * p.gamma_b() * std::norm(b);
    f.pump_parametric = p.kappa * std::real(std::conj(b) * a * a);

    const double reflected_sub = std::norm(ra * a - ain);
    const double other_sub = 2.0 * (p.gamma_c + p.gamma_l) * std::norm(a);
    const double reflected_pump = std::norm(rb * b - bin);
    const double other_pump = 2.0 * p.gamma_b_l * std::norm(b);
    f.input_energy = std::norm(ain) + 2.0 * std::norm(bin);
    f.output_energy = reflected_sub + other_sub + 2.0 * (reflected_pump + other_pump);
    return f;
}

} // namespace opacav
