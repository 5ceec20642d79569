#include <string>

#include <CLI11.hpp>

#include "heatmem/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "heatmem: one-dimensional heat conduction with heat-flux and heat-capacity memory.\n"
        "Exponential-sum kernels, localized auxiliary variables, two-level weighted scheme."};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string oracle;
    std::string param_path;
    std::string values_csv;

    auto add_common = [&](CLI::App* command) {
        command->add_option("--config", config_path, "configuration file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        command->add_option("--out", out_dir,
                            "output directory (defaults to the config's \"out\" entry)");
    };

    CLI::App* solve = app.add_subcommand("solve", "run a simulation; write snapshots and energy log");
    add_common(solve);

    CLI::App* compare =
        app.add_subcommand("compare", "run and compare against an independent reference solver");
    add_common(compare);
    compare->add_option("--oracle", oracle, "reference solver: volterra, modal, or dense-block")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "repeat a solve over a list of parameter values");
    add_common(sweep);
    sweep->add_option("--param", param_path,
                      "dotted path of a numeric config entry, e.g. flux_kernel.0.weight")
        ->required();
    sweep->add_option("--values", values_csv, "comma-separated values (may be empty)")->required();

    CLI::App* audit_cmd =
        app.add_subcommand("audit", "run a simulation and verify the a priori energy bound");
    add_common(audit_cmd);

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return heatmem::cli::run_solve(config_path, out_dir);
    if (compare->parsed()) return heatmem::cli::run_compare(config_path, oracle, out_dir);
    if (sweep->parsed()) return heatmem::cli::run_sweep(config_path, param_path, values_csv, out_dir);
    if (audit_cmd->parsed()) return heatmem::cli::run_audit(config_path, out_dir);
    return heatmem::cli::kExitError;
}
