// Command-line front end: simulate / invariants / stability / converge.
//
// Exit codes: 0 success, 1 certificate failure, 2 configuration error,
// 3 I/O or runtime failure.  KINFLOW_THREADS caps worker threads.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kinflow/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override run.seed");
    cmd->add_option("--out", args.out_dir, "override output.dir");
    cmd->add_flag("--force", args.force, "overwrite an existing run directory");
}

kinflow::HarnessOptions to_options(const CommonArgs& args) {
    kinflow::HarnessOptions opts;
    opts.seed = args.seed;
    opts.out_dir = args.out_dir;
    opts.force = args.force;
    return opts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"particle-method solver and bound-certificate harness for a "
                 "2-d mean-field kinetic equation"};
    app.require_subcommand(1);

    CommonArgs sim_args, inv_args, stab_args, conv_args;
    std::optional<double> e_cap_override;
    std::string config_b_path;

    CLI::App* sim = app.add_subcommand("simulate", "integrate and stream diagnostics");
    add_common(sim, sim_args);

    CLI::App* inv = app.add_subcommand("invariants", "run the certificate suite");
    add_common(inv, inv_args);
    inv->add_option("--override-e-cap", e_cap_override,
                    "debug: replace the derived energy cap verbatim "
                    "(disables the realized-E(0) floor)");

    CLI::App* stab = app.add_subcommand("stability", "Dobrushin pair run with W1 report");
    add_common(stab, stab_args);
    stab->add_option("--config-b", config_b_path,
                     "second config supplying the perturbed density")
        ->check(CLI::ExistingFile);

    CLI::App* conv = app.add_subcommand("converge", "mean-field refinement study");
    add_common(conv, conv_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return kinflow::cmd_simulate(kinflow::load_config(sim_args.config_path),
                                         to_options(sim_args));
        if (inv->parsed()) {
            auto opts = to_options(inv_args);
            opts.e_cap_override = e_cap_override;
            return kinflow::cmd_invariants(kinflow::load_config(inv_args.config_path),
                                           opts);
        }
        if (stab->parsed()) {
            auto opts = to_options(stab_args);
            if (!config_b_path.empty())
                opts.config_b = kinflow::load_config(config_b_path);
            return kinflow::cmd_stability(kinflow::load_config(stab_args.config_path),
                                          opts);
        }
        if (conv->parsed())
            return kinflow::cmd_converge(kinflow::load_config(conv_args.config_path),
                                         to_options(conv_args));
    } catch (const kinflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const kinflow::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
