#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sidecool/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sidecool: sideband-cooling simulator and occupancy inference toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string input;
    std::vector<std::string> overrides;

    const auto add_common = [&](CLI::App* sub, bool with_input) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--set", overrides, "override a config leaf, dotted key=value");
        sub->add_option("--out", out_dir, "output directory (default: paths.out_dir)");
        if (with_input) sub->add_option("--in", input, "input CSV file");
        return sub;
    };

    add_common(app.add_subcommand("steady", "steady-state occupancy at the configured pump"), false);
    add_common(app.add_subcommand("spectrum", "synthesize a noisy output spectrum CSV"), false);
    add_common(app.add_subcommand("fit", "fit a Lorentzian to a PSD CSV"), true);
    add_common(app.add_subcommand("calibrate", "thermal calibration from a (temp_k,power) CSV"), true);
    add_common(app.add_subcommand("sweep", "occupancy versus pump photon number"), false);
    add_common(app.add_subcommand("dynamics", "cooling / rethermalization timeline"), false);
    add_common(app.add_subcommand("budget", "heating and phase-noise budget table"), false);

    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    const sidecool::cli::CommandResult result =
        sidecool::cli::run_command(name, config_path, overrides, out_dir, input);

    for (const auto& path : result.outputs) std::cout << path.string() << "\n";
    if (!result.message.empty())
        (result.code == 0 ? std::cout : std::cerr) << result.message << "\n";
    return result.code;
}
