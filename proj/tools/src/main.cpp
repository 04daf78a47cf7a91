#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"
#include "relground/planner.hpp"
#include "relground/trainer.hpp"

using namespace relground;

namespace {

enum Exit { ok = 0, failure = 1, usage = 2, config = 3, data = 4, numerical = 5 };

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "error [" << kind << "]: " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grounded relational embeddings: data generation, training, plan inference and evaluation."};
    app.require_subcommand(0, 1);
    bool reference = false;
    app.add_flag("--reference", reference, "print the markdown reference of all commands and keys");

    const auto& specs = cli::commands();
    std::map<std::string, cli::FlagValues> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& s : specs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        cli::register_flags(*sub, s, flags[s.name]);
        subs[s.name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }
    if (reference) {
        std::cout << cli::reference_page(specs);
        return ok;
    }
    const cli::CommandSpec* chosen = nullptr;
    for (const auto& s : specs)
        if (subs[s.name]->parsed()) chosen = &s;
    if (!chosen) {
        std::cerr << app.help();
        return usage;
    }

    try {
        const auto cfg = cli::resolve_config(*chosen, flags[chosen->name]);
        cli::RunContext ctx{std::cerr};
        chosen->run(cfg, ctx);
        return ok;
    } catch (const cli::UsageError& e) {
        return report("usage", e, usage);
    } catch (const ConfigError& e) {
        return report("config", e, config);
    } catch (const DataError& e) {
        return report("data", e, data);
    } catch (const NumericalError& e) {
        return report("numerical", e, numerical);
    } catch (const std::exception& e) {
        return report("internal", e, failure);
    }
}
