// Command-line front-end: scenario runner, built-in preset listing and the
// acceptance verification suite.
//
//   nonfick run <config-or-preset> [--out DIR] [--override sec.key=val]...
//   nonfick verify
//   nonfick presets

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "nonfick/acceptance.hpp"
#include "nonfick/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nonfick: non-Fickian polymer-penetrant diffusion laboratory"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "run a scenario config or preset");
    run->add_option("config", config, "config file path or preset name")->required();
    run->add_option("--out", out_dir, "output directory (default: from config)");
    run->add_option("--override", overrides,
                    "override a config entry, e.g. solver.dt=1e-3");

    CLI::App* verify =
        app.add_subcommand("verify", "run the acceptance criteria suite");
    CLI::App* presets =
        app.add_subcommand("presets", "list built-in scenario presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            nonfick::ScenarioConfig cfg = nonfick::load_scenario(config, overrides);
            const std::string dir = out_dir.empty() ? cfg.directory : out_dir;
            nonfick::RunOutcome outcome = nonfick::run_scenario(cfg, dir);
            std::cout << outcome.summary;
            std::cout << "artifacts: " << dir << "\n";
            return outcome.exit_code;
        }
        if (verify->parsed()) {
            return nonfick::run_acceptance(std::cout) ? 0 : 1;
        }
        if (presets->parsed()) {
            for (const auto& [name, info] : nonfick::scenario_presets())
                std::cout << name << "\n    " << info.first << "\n";
            return 0;
        }
    } catch (const nonfick::ConfigError& err) {
        std::cerr << "configuration error: " << err.what() << "\n";
        return 3;
    } catch (const nonfick::CertificateError& err) {
        std::cerr << "certificate rejection: " << err.what() << "\n";
        return 3;
    } catch (const nonfick::NumericsError& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return 4;
    }
    return 0;
}
