#pragma once

// Subcommand dispatch shared by the command-line tool and the tests.
//
// Exit status: 0 success, 2 configuration error, 3 solver non-convergence,
// 4 feature-extraction failure, 1 anything else.

#include "config.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "spectra.hpp"
#include "steady_state.hpp"
#include "thermal.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace opacav::cli {

enum ExitCode : int {
    ok = 0,
    failure = 1,
    config_error = 2,
    non_convergence = 3,
    feature_failure = 4,
};

inline const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names = {"sweep", "pdh",  "thermal-scan",
                                                   "threshold", "gain", "features"};
    return names;
}

namespace detail {

inline std::filesystem::path prepare_dir(const std::string& dir)
{
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p))
        throw ConfigError("output_dir '" + dir + "' is not writable");
    return p;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + p.string() + "'");
    return out;
}

inline void write_json(const std::filesystem::path& p, const json& doc)
{
    auto out = open_out(p);
    out << doc.dump(2) << '\n';
}

inline int do_sweep(const RunConfig& c, const json& cfg, const std::string& kind,
                    SweepSpec spec, std::ostream& log)
{
    const auto dir = prepare_dir(c.output_dir);
    const SpectraTable table = sweep(c.model, spec, c.solver);
    const json prov = provenance(kind, cfg);
    {
        auto out = open_out(dir / (kind + ".csv"));
        write_spectra_csv(out, table, prov);
    }
    write_json(dir / (kind + ".json"), spectra_json(table, prov));
    log << kind << ": wrote " << table.rows.size() << " rows to " << (dir / (kind + ".csv")).string()
        << '\n';
    return ok;
}

inline int do_thermal(const RunConfig& c, const json& cfg, std::ostream& log)
{
    const auto dir = prepare_dir(c.output_dir);
    const ThermalTrace trace =
        thermal_scan(c.model, c.thermal, c.scan, c.model.pump_ratio, c.thermal_options);
    const json prov = provenance("thermal-scan", cfg);
    {
        auto out = open_out(dir / "thermal.csv");
        write_thermal_csv(out, trace, prov);
    }
    json doc = prov;
    doc["quasi_static_warning"] = trace.quasi_static_warning;
    if (trace.quasi_static_warning)
        log << "warning: scan slew exceeds the quasi-static limit\n";
    try {
        const auto [up, down] = ramp_peaks(trace);
        doc["asymmetry_metric"] = asymmetry_metric(trace);
        doc["up"] = {{"width", up.width}, {"center", up.center}, {"height", up.height}};
        doc["down"] = {{"width", down.width}, {"center", down.center}, {"height", down.height}};
        log << "asymmetry_metric " << format_number(asymmetry_metric(trace)) << '\n';
    } catch (const PeakNotFound& e) {
        doc["asymmetry_metric"] = nullptr;
        write_json(dir / "thermal.json", doc);
        throw;
    }
    write_json(dir / "thermal.json", doc);
    return ok;
}

inline int do_threshold(const RunConfig& c, const json& cfg, std::ostream& log)
{
    const auto dir = prepare_dir(c.output_dir);
    json doc = provenance("threshold", cfg);
    doc["threshold_drive"] = threshold_drive(c.model);
    log << "threshold_drive (normalized) " << format_number(threshold_drive(c.model)) << '\n';
    if (c.cavity) {
        const double p_back = threshold_power(*c.rates, *c.kappa_per_second, *c.cavity);
        doc["kappa_per_second"] = *c.kappa_per_second;
        doc["threshold_power"] = c.threshold_power;
        doc["threshold_power_roundtrip"] = p_back;
        doc["rates_per_second"] = to_json(*c.rates);
        doc["under_coupled"] = c.rates->under_coupled();
        log << "kappa_per_second " << format_number(*c.kappa_per_second) << '\n'
            << "threshold_power_W " << format_number(p_back) << '\n'
            << "under_coupled " << (c.rates->under_coupled() ? "true" : "false") << '\n';
    }
    write_json(dir / "threshold.json", doc);
    return ok;
}

inline int do_gain(const RunConfig& c, const json& cfg, std::ostream& log)
{
    const auto dir = prepare_dir(c.output_dir);
    json doc = provenance("gain", cfg);
    const double g0 = classical_gain(c.model, 0.0);
    const double gpi = classical_gain(c.model, std::numbers::pi);
    const double gt = classical_gain(c.model, c.model.theta);
    doc["sigma"] = pump_parameter(c.model);
    doc["gain_amplification"] = g0;
    doc["gain_deamplification"] = gpi;
    doc["gain_theta"] = gt;
    log << "sigma " << format_number(pump_parameter(c.model)) << '\n'
        << "gain(theta=0) " << format_number(g0) << '\n'
        << "gain(theta=pi) " << format_number(gpi) << '\n'
        << "gain(theta) " << format_number(gt) << '\n';
    write_json(dir / "gain.json", doc);
    return ok;
}

inline int do_features(const RunConfig& c, const json& cfg, std::ostream& log)
{
    const auto dir = prepare_dir(c.output_dir);
    const SpectraTable table = sweep(c.model, c.sweep, c.solver);
    const FeatureSet f = extract_features(table);

    ModelParams bare = c.model;
    bare.pump_ratio = 0.0;
    bare.kappa = 0.0;
    SweepSpec bare_spec = c.sweep;
    bare_spec.include_sidebands = false;
    bare_spec.compute_pdh = false;
    const FeatureSet base = extract_features(sweep(bare, bare_spec, c.solver));

    json doc = provenance("features", cfg);
    doc["features"] = feature_json(f);
    doc["baseline_center_slope"] = base.center_slope;
    doc["slope_sign_flipped"] = (f.center_slope > 0) != (base.center_slope > 0);
    write_json(dir / "features.json", doc);

    log << "window " << (f.window ? "present" : "absent") << '\n';
    if (f.window)
        log << "window_width " << format_number(f.window->width) << '\n';
    log << "center_slope " << format_number(f.center_slope) << '\n'
        << "baseline_center_slope " << format_number(base.center_slope) << '\n'
        << "extrema_count " << f.extrema_count << '\n';
    f.require_window();
    return ok;
}

} // namespace detail

/// Runs one subcommand on a parsed config tree (overrides already applied).
inline int run(const std::string& subcommand, const json& tree, std::ostream& log,
               std::ostream& err)
{
    try {
        bool known = false;
        for (const auto& s : subcommands())
            known = known || s == subcommand;
        if (!known)
            throw ConfigError("unknown subcommand '" + subcommand + "'");

        const RunConfig c = parse_config(tree);
        const json cfg = c.resolved();
        if (c.modulation.depth_warning())
            log << "warning: modulation depth > 0.5, second-order sidebands are not modeled\n";

        if (subcommand == "sweep")
            return detail::do_sweep(c, cfg, "sweep", c.sweep, log);
        if (subcommand == "pdh") {
            SweepSpec spec = c.sweep;
            spec.compute_pdh = true;
            return detail::do_sweep(c, cfg, "pdh", spec, log);
        }
        if (subcommand == "thermal-scan")
            return detail::do_thermal(c, cfg, log);
        if (subcommand == "threshold")
            return detail::do_threshold(c, cfg, log);
        if (subcommand == "gain")
            return detail::do_gain(c, cfg, log);
        return detail::do_features(c, cfg, log);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NonConvergence& e) {
        err << "solver error: " << e.what() << '\n';
        return non_convergence;
    } catch (const FeatureAbsent& e) {
        err << "feature error: " << e.what() << '\n';
        return feature_failure;
    } catch (const PeakNotFound& e) {
        err << "feature error: " << e.what() << '\n';
        return feature_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
}

inline int run(const std::string& subcommand, const std::string& config_path,
               const std::vector<std::string>& overrides, std::ostream& log, std::ostream& err)
{
    json tree;
    try {
        tree = config_path.empty() ? json::object() : load_config_file(config_path);
        for (const auto& o : overrides)
            apply_override(tree, o);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    return run(subcommand, tree, log, err);
}

} // namespace opacav::cli
