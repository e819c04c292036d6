// Command-line driver: meta-train, fine-tune, denoise, solve-oracle,
// export-figures-data. Every configuration key is also a flag
// (--key-name, underscores written as dashes).

#include "pinnmeta/errors.hpp"
#include "pinnmeta/experiment.hpp"
#include "pinnmeta/run_config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <string>

namespace {

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

} // namespace

int main(int argc, char** argv) {
    using namespace pinnmeta;
    CLI::App app{"Meta-learned PINN initializations and GAM data losses"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        int (*run)(RunConfig, std::ostream&);
    };
    const Command commands[] = {
        {"meta-train", "meta-train an initialization (mamlpinn or gampinn)", cmd_meta_train},
        {"fine-tune", "fine-tune held-out tasks and score them against the oracle", cmd_fine_tune},
        {"denoise", "noisy Burgers run with and without GAM residual correction", cmd_denoise},
        {"solve-oracle", "write a finite-difference reference field", cmd_solve_oracle},
        {"export-figures-data", "aggregate run CSVs into plotting tables", cmd_export_figures_data},
    };

    std::string config_file;
    std::map<std::string, std::map<std::string, std::string>> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_file, "key = value configuration file");
        for (const auto& key : RunConfig::keys()) {
            auto* opt = sub->add_option_function<std::string>(
                flag_name(key.name),
                [&flags, name = c.name, k = key.name](const std::string& v) { flags[name][k] = v; },
                key.help + (key.default_value.empty() ? "" : " [" + key.default_value + "]"));
            opt->type_name("VALUE");
        }
        subs[c.name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    for (const auto& c : commands) {
        if (!subs[c.name]->parsed()) {
            continue;
        }
        try {
            RunConfig config;
            if (!config_file.empty()) {
                config.load_file(config_file);
            }
            for (const auto& [k, v] : flags[c.name]) {
                config.set(k, v);
            }
            return c.run(std::move(config), std::cerr);
        } catch (const UsageError& e) {
            std::cerr << "usage error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
