#pragma once

// Run configuration: a JSON tree, either physical ("cavity") or normalized
// ("model") parameters, plus optional sweep / modulation / thermal sections.
// Leaf keys may be overridden with dotted paths, e.g. drive.pump_ratio=0.3.

#include "errors.hpp"
#include "io.hpp"
#include "model.hpp"
#include "pdh.hpp"
#include "spectra.hpp"
#include "steady_state.hpp"
#include "thermal.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace opacav {

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct RunConfig {
    // physical style
    std::optional<CavityParams> cavity;
    double threshold_power = 0.09; // W
    std::optional<DecayRates> rates;
    std::optional<double> kappa_per_second;

    ModelParams model; // fully resolved, normalized
    bool seedless = false;
    bool explicit_paper_phi = false;

    SweepSpec sweep;
    ModulationSpec modulation;
    ThermalParams thermal;
    ScanWaveform scan;
    ThermalOptions thermal_options;
    SolveOptions solver;
    std::string output_dir = ".";

    /// Config tree that reproduces this run when parsed again.
    json resolved() const
    {
        json j;
        if (cavity) {
            j["cavity"] = to_json(*cavity);
            j["calibration"] = {{"threshold_power", threshold_power}};
        } else {
            j["model"] = {{"gamma_in", model.gamma_in},     {"gamma_c", model.gamma_c},
                          {"gamma_l", model.gamma_l},       {"gamma_b_in", model.gamma_b_in},
                          {"gamma_b_l", model.gamma_b_l},   {"kappa", model.kappa},
                          {"detune_ratio", model.detune_ratio}};
        }
        j["drive"] = {{"pump_ratio", model.pump_ratio},
                      {"theta", model.theta},
                      {"seed_amp", model.seed_amp}};
        j["seedless"] = seedless;
        j["sweep"] = to_json(sweep);
        j["modulation"] = to_json(modulation);
        json th = to_json(thermal);
        th["scan"] = to_json(scan);
        th["samples"] = thermal_options.samples;
        th["periods"] = thermal_options.periods;
        th["full_ode"] = thermal_options.full_ode;
        j["thermal"] = th;
        j["solver"] = {{"tol", solver.tol},
                       {"max_iter", solver.max_iter},
                       {"damping", solver.damping}};
        j["output_dir"] = output_dir;

        json derived = {{"model", to_json(model)},
                        {"threshold_drive", model.kappa > 0.0 ? json(threshold_drive(model)) : json()},
                        {"paper_phi", model.paper_phi()}};
        if (rates) {
            derived["rates_per_second"] = to_json(*rates);
            derived["kappa_per_second"] = *kappa_per_second;
            derived["under_coupled"] = rates->under_coupled();
        }
        j["derived"] = derived;
        return j;
    }
};

/// Sets a leaf addressed by a dotted path. The value is parsed as JSON when
/// possible, otherwise taken as a string.
inline void apply_override(json& tree, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    json* node = &tree;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty())
            throw ConfigError("override path '" + path + "' has an empty component");
        if (!node->is_object())
            throw ConfigError("override path '" + path + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null())
            *node = json::object();
        start = dot + 1;
    }
}

inline RunConfig parse_config(const json& j)
{
    try {
        detail::reject_unknown(j,
                               {"cavity", "calibration", "model", "drive", "seedless", "sweep",
                                "modulation", "thermal", "solver", "output_dir", "derived"},
                               "config");
        RunConfig c;
        const bool has_cavity = j.contains("cavity");
        const bool has_model = j.contains("model");
        if (has_cavity && has_model)
            throw ConfigError("config mixes 'cavity' (SI) and 'model' (normalized) parameters");
        if (j.contains("calibration") && !has_cavity)
            throw ConfigError("'calibration' only applies to a 'cavity' config");

        if (has_cavity) {
            c.cavity = cavity_from_json(j.at("cavity"));
            if (j.contains("calibration")) {
                const json& cal = j.at("calibration");
                detail::reject_unknown(cal, {"threshold_power"}, "calibration");
                detail::read_field(cal, "threshold_power", c.threshold_power);
            }
            if (!(c.threshold_power > 0.0))
                throw ConfigError("calibration.threshold_power must be positive");
            c.rates = derive_rates(*c.cavity);
            c.kappa_per_second = calibrate_kappa(*c.rates, c.threshold_power, *c.cavity);
            c.model = ModelParams::normalized(*c.rates, *c.kappa_per_second);
        } else if (has_model) {
            rates_from_json(j.at("model"), c.model);
            c.model.seed_amp = ModelParams::unit_photon_seed(c.model.gamma_in, c.model.gamma());
        }

        if (j.contains("drive")) {
            const json& d = j.at("drive");
            detail::reject_unknown(d, {"pump_ratio", "theta", "paper_phi", "seed_amp"}, "drive");
            if (d.contains("theta") && d.contains("paper_phi"))
                throw ConfigError("drive: give either theta or paper_phi, not both");
            detail::read_field(d, "pump_ratio", c.model.pump_ratio);
            detail::read_field(d, "theta", c.model.theta);
            if (d.contains("paper_phi")) {
                double phi = 0.0;
                detail::read_field(d, "paper_phi", phi);
                c.model.set_paper_phi(phi);
                c.explicit_paper_phi = true;
            }
            detail::read_field(d, "seed_amp", c.model.seed_amp);
        }
        detail::read_field(j, "seedless", c.seedless);
        if (c.seedless)
            c.model.seed_amp = 0.0;
        c.model.validate();

        if (j.contains("sweep"))
            c.sweep = sweep_from_json(j.at("sweep"));
        if (j.contains("modulation")) {
            c.modulation = modulation_from_json(j.at("modulation"));
            c.sweep.sideband_freq = c.modulation.omega;
            c.sweep.mod_depth = c.modulation.depth;
            c.sweep.demod_phase = c.modulation.demod_phase;
        } else {
            c.modulation = c.sweep.modulation();
        }

        if (j.contains("thermal")) {
            const json& t = j.at("thermal");
            detail::reject_unknown(t,
                                   {"alpha_th", "shift_at_threshold", "tau_th", "coupling_sub",
                                    "scan", "samples", "periods", "full_ode"},
                                   "thermal");
            if (t.contains("alpha_th") && t.contains("shift_at_threshold"))
                throw ConfigError("thermal: give either alpha_th or shift_at_threshold");
            double shift = 4.0;
            detail::read_field(t, "shift_at_threshold", shift);
            c.thermal.alpha_th = ThermalParams::alpha_for(c.model, shift);
            detail::read_field(t, "alpha_th", c.thermal.alpha_th);
            detail::read_field(t, "tau_th", c.thermal.tau_th);
            detail::read_field(t, "coupling_sub", c.thermal.coupling_sub);
            if (t.contains("scan"))
                c.scan = scan_from_json(t.at("scan"));
            detail::read_field(t, "samples", c.thermal_options.samples);
            detail::read_field(t, "periods", c.thermal_options.periods);
            detail::read_field(t, "full_ode", c.thermal_options.full_ode);
        } else {
            c.thermal.alpha_th = ThermalParams::alpha_for(c.model, 4.0);
        }
        c.thermal.validate();

        if (j.contains("solver")) {
            const json& s = j.at("solver");
            detail::reject_unknown(s, {"tol", "max_iter", "damping"}, "solver");
            detail::read_field(s, "tol", c.solver.tol);
            detail::read_field(s, "max_iter", c.solver.max_iter);
            detail::read_field(s, "damping", c.solver.damping);
        }
        c.solver.validate();
        detail::read_field(j, "output_dir", c.output_dir);
        return c;
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

inline json load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, false, true);
    if (j.is_discarded())
        throw ConfigError("config file '" + path + "' is not valid JSON");
    return j;
}

} // namespace opacav
