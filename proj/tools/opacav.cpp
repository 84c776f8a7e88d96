#include <opacav/cli.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv)
{
    CLI::App app{"Triple-resonant OPA cavity simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(opacav::tool_version));

    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;

    const char* help[] = {
        "Sweep detuning; write reflection/transmission/phase spectra",
        "Sweep detuning with the PDH error signal column",
        "Simulate a thermal cavity-length scan of the pump transmission",
        "Print the threshold drive and, for SI configs, the calibrated coupling",
        "Print the on-resonance parametric gain",
        "Extract window width, dispersion slope and extrema from a sweep",
    };
    std::size_t k = 0;
    for (const auto& name : opacav::cli::subcommands()) {
        auto* sub = app.add_subcommand(name, help[k++]);
        sub->add_option("-c,--config", config_path, "JSON config file");
        sub->add_option("-s,--set", overrides, "Override a config leaf: key.path=value");
        sub->add_option("-o,--output-dir", output_dir, "Directory for artifacts");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : opacav::cli::config_error;
    }

    if (!output_dir.empty())
        overrides.push_back("output_dir=" + opacav::json(output_dir).dump());
    const std::string sub = app.get_subcommands().front()->get_name();
    return opacav::cli::run(sub, config_path, overrides, std::cout, std::cerr);
}
