#pragma once

// CSV and JSON serialization of parameters, spectra and thermal traces.
//
// Every artifact carries a provenance object {schema_version, tool, version,
// kind, config}. CSV files put it on a single leading "# " comment line,
// followed by the fixed column header.

#include "errors.hpp"
#include "model.hpp"
#include "pdh.hpp"
#include "spectra.hpp"
#include "thermal.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace opacav {

inline constexpr const char* tool_name = "opacav";
inline constexpr const char* tool_version = "0.1.0";
inline constexpr int schema_version = 1;

inline constexpr const char* spectra_csv_header =
    "delta,refl_power,trans_power,phase,pump_intracavity,pdh_error";
inline constexpr const char* thermal_csv_header = "t,scan_value,theta,pump_trans,sub_refl";

using nlohmann::json;

/// Shortest round-trip decimal, '.' separator regardless of locale.
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (v == 0.0)
        v = 0.0; // drop the sign of -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// --- parameter <-> json ----------------------------------------------------

namespace detail {

template <class T>
void read_field(const json& j, const char* key, T& out)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("field '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known,
                           const std::string& where)
{
    if (!j.is_object())
        throw InvalidArgument(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw InvalidArgument("unknown field '" + where + "." + key + "'");
    }
}

} // namespace detail

inline json to_json(const CavityParams& c)
{
    return {{"mirror_separation", c.mirror_separation},
            {"crystal_length", c.crystal_length},
            {"crystal_index_sub", c.crystal_index_sub},
            {"crystal_index_pump", c.crystal_index_pump},
            {"R_in_sub", c.R_in_sub},
            {"R_out_sub", c.R_out_sub},
            {"R_in_pump", c.R_in_pump},
            {"R_out_pump", c.R_out_pump},
            {"loss_sub", c.loss_sub},
            {"loss_pump", c.loss_pump},
            {"wavelength_sub", c.wavelength_sub}};
}

inline CavityParams cavity_from_json(const json& j)
{
    detail::reject_unknown(j,
                           {"mirror_separation", "crystal_length", "crystal_index_sub",
                            "crystal_index_pump", "R_in_sub", "R_out_sub", "R_in_pump",
                            "R_out_pump", "loss_sub", "loss_pump", "wavelength_sub"},
                           "cavity");
    CavityParams c;
    detail::read_field(j, "mirror_separation", c.mirror_separation);
    detail::read_field(j, "crystal_length", c.crystal_length);
    detail::read_field(j, "crystal_index_sub", c.crystal_index_sub);
    detail::read_field(j, "crystal_index_pump", c.crystal_index_pump);
    detail::read_field(j, "R_in_sub", c.R_in_sub);
    detail::read_field(j, "R_out_sub", c.R_out_sub);
    detail::read_field(j, "R_in_pump", c.R_in_pump);
    detail::read_field(j, "R_out_pump", c.R_out_pump);
    detail::read_field(j, "loss_sub", c.loss_sub);
    detail::read_field(j, "loss_pump", c.loss_pump);
    detail::read_field(j, "wavelength_sub", c.wavelength_sub);
    c.validate();
    return c;
}

inline json to_json(const DecayRates& r)
{
    return {{"gamma_in", r.gamma_in},       {"gamma_c", r.gamma_c},
            {"gamma_l", r.gamma_l},         {"gamma", r.gamma()},
            {"gamma_b_in", r.gamma_b_in},   {"gamma_b_out", r.gamma_b_out},
            {"gamma_b_loss", r.gamma_b_loss}, {"gamma_b", r.gamma_b()},
            {"tau_sub", r.tau_sub},         {"tau_pump", r.tau_pump}};
}

inline json to_json(const ModelParams& p)
{
    return {{"gamma_in", p.gamma_in},     {"gamma_c", p.gamma_c},
            {"gamma_l", p.gamma_l},       {"gamma_b_in", p.gamma_b_in},
            {"gamma_b_l", p.gamma_b_l},   {"kappa", p.kappa},
            {"seed_amp", p.seed_amp},     {"pump_ratio", p.pump_ratio},
            {"theta", p.theta},           {"detune_ratio", p.detune_ratio}};
}

/// Rate fields of a normalized parameter set (drive lives elsewhere).
inline void rates_from_json(const json& j, ModelParams& p)
{
    detail::reject_unknown(j,
                           {"gamma_in", "gamma_c", "gamma_l", "gamma_b_in", "gamma_b_l",
                            "kappa", "detune_ratio"},
                           "model");
    detail::read_field(j, "gamma_in", p.gamma_in);
    detail::read_field(j, "gamma_c", p.gamma_c);
    detail::read_field(j, "gamma_l", p.gamma_l);
    detail::read_field(j, "gamma_b_in", p.gamma_b_in);
    detail::read_field(j, "gamma_b_l", p.gamma_b_l);
    detail::read_field(j, "kappa", p.kappa);
    detail::read_field(j, "detune_ratio", p.detune_ratio);
}

inline json to_json(const SweepSpec& s)
{
    return {{"delta_min", s.delta_min},
            {"delta_max", s.delta_max},
            {"n_points", s.n_points},
            {"mode", to_string(s.mode)},
            {"include_sidebands", s.include_sidebands},
            {"sideband_freq", s.sideband_freq},
            {"mod_depth", s.mod_depth},
            {"compute_pdh", s.compute_pdh},
            {"demod_phase", s.demod_phase},
            {"check_multistability", s.check_multistability}};
}

inline SweepSpec sweep_from_json(const json& j)
{
    detail::reject_unknown(j,
                           {"delta_min", "delta_max", "n_points", "mode", "include_sidebands",
                            "sideband_freq", "mod_depth", "compute_pdh", "demod_phase",
                            "check_multistability"},
                           "sweep");
    SweepSpec s;
    detail::read_field(j, "delta_min", s.delta_min);
    detail::read_field(j, "delta_max", s.delta_max);
    detail::read_field(j, "n_points", s.n_points);
    if (j.contains("mode")) {
        std::string m;
        detail::read_field(j, "mode", m);
        if (m == "triple_resonant")
            s.mode = SweepMode::triple_resonant;
        else if (m == "double_resonant")
            s.mode = SweepMode::double_resonant;
        else
            throw InvalidArgument("sweep.mode must be triple_resonant or double_resonant");
    }
    detail::read_field(j, "include_sidebands", s.include_sidebands);
    detail::read_field(j, "sideband_freq", s.sideband_freq);
    detail::read_field(j, "mod_depth", s.mod_depth);
    detail::read_field(j, "compute_pdh", s.compute_pdh);
    detail::read_field(j, "demod_phase", s.demod_phase);
    detail::read_field(j, "check_multistability", s.check_multistability);
    s.validate();
    return s;
}

inline json to_json(const ModulationSpec& m)
{
    return {{"omega", m.omega}, {"depth", m.depth}, {"demod_phase", m.demod_phase}};
}

inline ModulationSpec modulation_from_json(const json& j)
{
    detail::reject_unknown(j, {"omega", "depth", "demod_phase"}, "modulation");
    ModulationSpec m;
    detail::read_field(j, "omega", m.omega);
    detail::read_field(j, "depth", m.depth);
    detail::read_field(j, "demod_phase", m.demod_phase);
    m.validate();
    return m;
}

inline json to_json(const ThermalParams& t)
{
    return {{"alpha_th", t.alpha_th}, {"tau_th", t.tau_th}, {"coupling_sub", t.coupling_sub}};
}

inline json to_json(const ScanWaveform& s)
{
    return {{"shape", "triangular"},
            {"period", s.period},
            {"amplitude", s.amplitude},
            {"offset", s.offset}};
}

inline ScanWaveform scan_from_json(const json& j)
{
    detail::reject_unknown(j, {"shape", "period", "amplitude", "offset"}, "thermal.scan");
    ScanWaveform s;
    if (j.contains("shape") && j.at("shape") != "triangular")
        throw InvalidArgument("thermal.scan.shape must be triangular");
    detail::read_field(j, "period", s.period);
    detail::read_field(j, "amplitude", s.amplitude);
    detail::read_field(j, "offset", s.offset);
    s.validate();
    return s;
}

// --- artifacts -------------------------------------------------------------

inline json provenance(const std::string& kind, const json& config)
{
    return {{"schema_version", schema_version},
            {"tool", tool_name},
            {"version", tool_version},
            {"kind", kind},
            {"config", config}};
}

inline void write_spectra_csv(std::ostream& os, const SpectraTable& table, const json& prov)
{
    os << "# " << prov.dump() << '\n' << spectra_csv_header << '\n';
    for (const auto& r : table.rows) {
        os << format_number(r.delta) << ',' << format_number(r.refl_power) << ','
           << format_number(r.trans_power) << ',' << format_number(r.phase) << ','
           << format_number(r.pump_intracavity) << ',';
        if (r.pdh_error)
            os << format_number(*r.pdh_error);
        os << '\n';
    }
}

inline json spectra_json(const SpectraTable& table, const json& prov)
{
    json doc = prov;
    doc["columns"] = {"delta", "refl_power", "trans_power", "phase", "pump_intracavity",
                      "pdh_error"};
    json rows = json::array();
    for (const auto& r : table.rows) {
        rows.push_back({r.delta, r.refl_power, r.trans_power, r.phase, r.pump_intracavity,
                        r.pdh_error ? json(*r.pdh_error) : json(nullptr)});
    }
    doc["rows"] = std::move(rows);
    return doc;
}

inline void write_thermal_csv(std::ostream& os, const ThermalTrace& trace, const json& prov)
{
    os << "# " << prov.dump() << '\n' << thermal_csv_header << '\n';
    for (const auto& r : trace.rows) {
        os << format_number(r.t) << ',' << format_number(r.scan_value) << ','
           << format_number(r.theta) << ',' << format_number(r.pump_trans) << ','
           << format_number(r.sub_refl) << '\n';
    }
}

inline json feature_json(const FeatureSet& f)
{
    json j = {{"dip_depth", f.dip_depth},
              {"center_slope", f.center_slope},
              {"extrema_count", f.extrema_count},
              {"window_present", f.window.has_value()}};
    if (f.window) {
        j["window"] = {{"center", f.window->center},
                       {"peak", f.window->peak},
                       {"prominence", f.window->prominence},
                       {"width", f.window->width}};
    } else {
        j["window"] = nullptr;
    }
    j["pdh_slope"] = f.pdh_slope ? json(*f.pdh_slope) : json(nullptr);
    return j;
}

} // namespace opacav
