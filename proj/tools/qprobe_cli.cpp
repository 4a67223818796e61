#include "qprobe/cli.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <string>

namespace {

std::string flag_for(const std::string& key) {
    std::string flag = key;
    for (auto& c : flag)
        if (c == '_') c = '-';
    return "--" + flag;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qprobe;
    CLI::App app{"Probe-qubit generation, read-out and certification of collective-spin correlations"};
    app.set_version_flag("--version", cli::tool_version);
    app.require_subcommand(1);

    struct Bound {
        CLI::App* app;
        std::string config_path;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
    };
    std::map<std::string, Bound> subs;
    for (const auto& name : cli::commands()) {
        auto& b = subs[name];
        b.app = app.add_subcommand(name);
        b.app->add_option("--config", b.config_path, "JSON config file; flags override its keys");
        for (const auto& spec : cli::parameters(name))
            b.options[spec.key] = b.app->add_option(flag_for(spec.key), b.values[spec.key], spec.help);
    }
    subs["generate"].app->description("Bell correlator of the exact central-spin and one-axis-twisting paths");
    subs["readout"].app->description("Simulated probe read-out: p_n(theta) grid, probe samples, theta spectrum");
    subs["certify"].app->description("Squeezing, Fisher, QFI bound, Bell correlator and depth from a read-out grid");
    subs["oracle-check"].app->description("Compare fast paths with brute-force qubit simulations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::config_error;
    }

    for (auto& [name, b] : subs) {
        if (!b.app->parsed()) continue;
        cli::Json file_doc;
        if (!b.config_path.empty()) {
            try {
                file_doc = cli::load_config_file(b.config_path);
            } catch (const cli::ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return cli::config_error;
            }
        }
        std::map<std::string, std::string> overrides;
        for (const auto& [key, option] : b.options)
            if (option->count() > 0) overrides[key] = b.values[key];
        return cli::run(name, file_doc, overrides, std::cout, std::cerr);
    }
    return cli::config_error;
}
