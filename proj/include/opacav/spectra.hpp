#pragma once

// Detuning sweeps of the subharmonic reflection, transmission and reflected
// phase, and the feature extraction used to characterize the transparency
// window.

#include "errors.hpp"
#include "model.hpp"
#include "pdh.hpp"
#include "steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace opacav {

enum class SweepMode { triple_resonant, double_resonant };

inline const char* to_string(SweepMode m)
{
    return m == SweepMode::triple_resonant ? "triple_resonant" : "double_resonant";
}

struct SweepSpec {
    double delta_min = -3.0; // units of γ
    double delta_max = 3.0;
    int n_points = 2001;
    SweepMode mode = SweepMode::triple_resonant;
    bool include_sidebands = false;
    double sideband_freq = 10.0;
    double mod_depth = 0.2;
    bool compute_pdh = false;
    double demod_phase = -0.5 * std::numbers::pi;
    bool check_multistability = false;

    void validate() const
    {
        if (!(delta_min < delta_max))
            throw InvalidArgument("sweep.delta_min must be below sweep.delta_max");
        if (n_points < 3)
            throw InvalidArgument("sweep.n_points must be >= 3");
        if ((include_sidebands || compute_pdh) && !(sideband_freq > 0.0))
            throw InvalidArgument("sweep.sideband_freq must be positive");
        if ((include_sidebands || compute_pdh) && !(mod_depth > 0.0))
            throw InvalidArgument("sweep.mod_depth must be positive");
    }

    ModulationSpec modulation() const { return {sideband_freq, mod_depth, demod_phase}; }

    std::vector<double> grid() const
    {
        std::vector<double> d(static_cast<std::size_t>(n_points));
        const double step = (delta_max - delta_min) / (n_points - 1);
        for (int k = 0; k < n_points; ++k)
            d[static_cast<std::size_t>(k)] = delta_min + k * step;
        // symmetric ranges give exactly mirrored grids with 0 at the center
        if (delta_min == -delta_max) {
            const auto n = static_cast<std::size_t>(n_points);
            for (std::size_t k = 0; k < n / 2; ++k)
                d[n - 1 - k] = -d[k];
            if (n % 2 == 1)
                d[n / 2] = 0.0;
        }
        return d;
    }
};

struct SpectraRow {
    double delta = 0;
    double refl_power = 0;
    double trans_power = 0;
    double phase = 0;
    double pump_intracavity = 0;
    std::optional<double> pdh_error;
    cplx reflection{};     // carrier a_out / a_in
    double trans_carrier = 0;
};

struct SpectraTable {
    std::vector<SpectraRow> rows;
};

/// Bare linear-cavity reflection coefficient 2γ_in/(γ + iδ) - 1.
inline cplx linear_reflection(const ModelParams& p, double delta)
{
    return 2.0 * p.gamma_in / cplx{p.gamma(), delta} - 1.0;
}

/// Normalized subharmonic detuning produced by a cavity length change dL:
/// round-trip phase 4π dL/λ over the round-trip time, in units of γ.
inline double detuning_from_length(double dL, const CavityParams& cavity, const DecayRates& rates)
{
    return 4.0 * std::numbers::pi * dL / (cavity.wavelength_sub * rates.tau_sub * rates.gamma());
}

inline double length_from_detuning(double delta, const CavityParams& cavity,
                                   const DecayRates& rates)
{
    return delta * cavity.wavelength_sub * rates.tau_sub * rates.gamma() / (4.0 * std::numbers::pi);
}

/// Steady state with the pump held at its empty-cavity resonant value
/// (σγ/κ) e^{iΘ}, independent of detuning. The subharmonic equation is then
/// linear and solved in closed form.
inline FieldState clamped_pump_state(const ModelParams& p, double delta)
{
    FieldState s;
    s.b = free_pump(p, 0.0);
    s.a = detail::linear_subharmonic(p.gamma(), delta, p.kappa * s.b,
                                     std::sqrt(2.0 * p.gamma_in) * seed_input(p));
    s.delta = delta;
    s.converged = true;
    const cplx i{0.0, 1.0};
    const cplx da = -(p.gamma() + i * delta) * s.a + p.kappa * s.b * std::conj(s.a) +
                    std::sqrt(2.0 * p.gamma_in) * seed_input(p);
    const double drive = std::abs(std::sqrt(2.0 * p.gamma_in) * seed_input(p));
    s.residual_norm = drive > 0.0 ? std::abs(da) / drive : std::abs(da);
    return s;
}

/// Adds multiples of 2π so adjacent samples never jump by more than π.
inline void unwrap_phase(std::vector<double>& phase)
{
    double offset = 0.0;
    for (std::size_t k = 1; k < phase.size(); ++k) {
        const double raw = phase[k] + offset;
        double jump = raw - phase[k - 1];
        while (jump > std::numbers::pi) {
            offset -= 2.0 * std::numbers::pi;
            jump -= 2.0 * std::numbers::pi;
        }
        while (jump < -std::numbers::pi) {
            offset += 2.0 * std::numbers::pi;
            jump += 2.0 * std::numbers::pi;
        }
        phase[k] = phase[k - 1] + jump;
    }
}

inline SpectraTable sweep(const ModelParams& p, const SweepSpec& spec,
                          const SolveOptions& base_opts = {})
{
    p.validate();
    spec.validate();
    if (!(p.seed_amp > 0.0))
        throw InvalidArgument("sweep requires a seed (seed_amp > 0) to define reflection");

    const cplx ain = seed_input(p);
    const double ra = std::sqrt(2.0 * p.gamma_in);
    const double rc = std::sqrt(2.0 * p.gamma_c);
    const bool need_sidebands = spec.include_sidebands || spec.compute_pdh;
    const ModulationSpec mod = spec.modulation();
    const PumpMode pump_mode =
        spec.mode == SweepMode::triple_resonant ? PumpMode::cavity : PumpMode::clamped;
    const double sideband_power = spec.include_sidebands ? 0.5 * mod.depth * mod.depth : 0.0;
    const double input_power = std::norm(ain) * (1.0 + sideband_power);

    SpectraTable table;
    const auto grid = spec.grid();
    table.rows.reserve(grid.size());
    std::vector<double> phase;
    phase.reserve(grid.size());

    SolveOptions opts = base_opts;
    for (double delta : grid) {
        FieldState s;
        if (spec.mode == SweepMode::triple_resonant) {
            s = spec.check_multistability ? solve_steady_checked(p, delta, opts)
                                          : solve_steady(p, delta, opts);
            opts.warm_start = s;
        } else {
            s = clamped_pump_state(p, delta);
        }

        SpectraRow row;
        row.delta = delta;
        const cplx carrier = ra * s.a - ain;
        row.reflection = carrier / ain;
        row.trans_carrier = 2.0 * p.gamma_c * std::norm(s.a) / std::norm(ain);
        row.pump_intracavity = std::norm(s.b);

        double refl = std::norm(carrier);
        double trans = std::norm(rc * s.a);
        if (need_sidebands) {
            const SidebandResponse r = sideband_response(p, s, mod, pump_mode);
            if (spec.include_sidebands) {
                refl += std::norm(r.a_out_plus) + std::norm(r.a_out_minus);
                trans += std::norm(rc * r.a_plus) + std::norm(rc * r.a_minus);
            }
            if (spec.compute_pdh)
                row.pdh_error = pdh_error(r, mod);
        }
        row.refl_power = refl / input_power;
        row.trans_power = trans / input_power;
        phase.push_back(std::arg(row.reflection));
        table.rows.push_back(row);
    }

    unwrap_phase(phase);
    for (std::size_t k = 0; k < phase.size(); ++k)
        table.rows[k].phase = phase[k];
    return table;
}

// ---------------------------------------------------------------------------
// Feature extraction

struct WindowFeature {
    double center = 0;     // detuning of the central reflection maximum
    double peak = 0;
    double prominence = 0;
    double width = 0;      // full width at half prominence
};

struct FeatureSet {
    double dip_depth = 0;                // 1 - min refl_power
    std::optional<WindowFeature> window; // central transparency maximum
    double center_slope = 0;             // d(phase)/d(delta) at delta = 0
    int extrema_count = 0;               // of refl_power
    std::optional<double> pdh_slope;     // d(error)/d(delta) at delta = 0

    const WindowFeature& require_window() const
    {
        if (!window)
            throw FeatureAbsent("no central reflection maximum (transparency window absent)");
        return *window;
    }
};

/// Indices of local extrema of y. Zero differences are skipped so a plateau
/// counts once, attributed to its leftmost index.
inline std::vector<std::size_t> find_extrema(const std::vector<double>& y)
{
    std::vector<std::size_t> out;
    int last_sign = 0;
    std::size_t plateau_start = 0;
    for (std::size_t k = 1; k < y.size(); ++k) {
        const double d = y[k] - y[k - 1];
        const int sign = (d > 0) - (d < 0);
        if (sign == 0)
            continue;
        if (last_sign != 0 && sign != last_sign)
            out.push_back(plateau_start);
        last_sign = sign;
        plateau_start = k;
    }
    return out;
}

namespace detail {

// Linear interpolation of where y crosses `level` between samples k and k+1.
inline double crossing(const std::vector<double>& x, const std::vector<double>& y,
                       std::size_t k, double level)
{
    const double t = (level - y[k]) / (y[k + 1] - y[k]);
    return x[k] + t * (x[k + 1] - x[k]);
}

inline std::size_t nearest_index(const std::vector<double>& x, double value)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < x.size(); ++k)
        if (std::abs(x[k] - value) < std::abs(x[best] - value))
            best = k;
    return best;
}

// Symmetric difference of y at x = 0 (bracketing pair when 0 is off-grid).
inline double slope_at_zero(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t i0 = nearest_index(x, 0.0);
    std::size_t lo, hi;
    if (x[i0] == 0.0 && i0 > 0 && i0 + 1 < x.size()) {
        lo = i0 - 1;
        hi = i0 + 1;
    } else if (x[i0] > 0.0 && i0 > 0) {
        lo = i0 - 1;
        hi = i0;
    } else {
        lo = i0;
        hi = std::min(i0 + 1, x.size() - 1);
    }
    if (lo == hi)
        throw InvalidArgument("slope at zero needs at least two samples");
    return (y[hi] - y[lo]) / (x[hi] - x[lo]);
}

/// Central peak of y: climb from the sample nearest 0 to a local maximum.
/// Returns nothing when the sample nearest 0 is a strict local minimum, or
/// the climb runs into the grid edge.
inline std::optional<WindowFeature> central_peak(const std::vector<double>& x,
                                                 const std::vector<double>& y)
{
    const std::size_t n = y.size();
    std::size_t i = nearest_index(x, 0.0);
    if (i == 0 || i + 1 >= n)
        return std::nullopt;
    if (y[i] < y[i - 1] && y[i] < y[i + 1])
        return std::nullopt;
    for (;;) {
        if (i == 0 || i + 1 >= n)
            return std::nullopt;
        if (y[i + 1] > y[i])
            ++i;
        else if (y[i - 1] > y[i])
            --i;
        else
            break;
    }
    const double peak = y[i];

    // Walk out until a higher sample or the edge; the lowest point on each
    // side bounds the prominence.
    std::size_t l = i, r = i;
    double lmin = peak, rmin = peak;
    while (l > 0 && y[l - 1] <= peak) {
        --l;
        lmin = std::min(lmin, y[l]);
    }
    while (r + 1 < n && y[r + 1] <= peak) {
        ++r;
        rmin = std::min(rmin, y[r]);
    }
    const double prominence = peak - std::max(lmin, rmin);
    if (!(prominence > 0.0))
        return std::nullopt;

    const double level = peak - 0.5 * prominence;
    std::size_t a = i, b = i;
    while (a > 0 && y[a] > level)
        --a;
    while (b + 1 < n && y[b] > level)
        ++b;
    if (y[a] > level || y[b] > level)
        return std::nullopt;

    WindowFeature w;
    w.center = x[i];
    w.peak = peak;
    w.prominence = prominence;
    w.width = crossing(x, y, b - 1, level) - crossing(x, y, a, level);
    return w;
}

} // namespace detail

inline FeatureSet extract_features(const SpectraTable& table)
{
    if (table.rows.size() < 3)
        throw InvalidArgument("feature extraction needs at least three rows");
    std::vector<double> x, refl, phase, pdh;
    for (const auto& r : table.rows) {
        x.push_back(r.delta);
        refl.push_back(r.refl_power);
        phase.push_back(r.phase);
        if (r.pdh_error)
            pdh.push_back(*r.pdh_error);
    }

    FeatureSet f;
    f.dip_depth = 1.0 - *std::min_element(refl.begin(), refl.end());
    f.window = detail::central_peak(x, refl);
    f.center_slope = detail::slope_at_zero(x, phase);
    f.extrema_count = static_cast<int>(find_extrema(refl).size());
    if (pdh.size() == x.size())
        f.pdh_slope = detail::slope_at_zero(x, pdh);
    return f;
}

} // namespace opacav
