#include "thickjunction/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"tjlab: Signorini problem in a thick junction and its homogenized limit"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    const char* commands[][2] = {
        {"solve-eps", "solve the junction problem for one N"},
        {"solve-limit", "solve the homogenized problem"},
        {"converge", "run the convergence study over run.N_list"},
        {"identity-check", "evaluate the rod integral identity for run.identity_v"},
        {"oracle-compare", "compare the 2D limit solution with the 1D reduction"},
    };
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd[0], cmd[1]);
        sub->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides run.output_dir)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tj::cli::BadConfig;
    }
    return tj::cli::run(app.get_subcommands().front()->get_name(), config, out, std::cout, std::cerr);
}
