#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "heatmem/cli/config.hpp"
#include "heatmem/cli/io.hpp"
#include "heatmem/diagnostics.hpp"
#include "heatmem/memory_system.hpp"
#include "heatmem/oracles.hpp"

namespace heatmem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitBoundViolation = 3;

namespace detail {

inline std::filesystem::path pick_out_dir(const RunConfig& config, const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (!config.out_dir.empty()) return config.out_dir;
    throw ConfigError("no output directory: pass --out or set \"out\" in the config");
}

struct SolveResult {
    Trajectory trajectory;
    AuditReport report;
};

/// Shared core of solve/audit/sweep: run, audit, write all solve outputs.
inline SolveResult solve_into(const RunConfig& config, const std::filesystem::path& out_dir) {
    const ProblemSpec problem = make_problem(config);
    const SchemeConfig scheme = make_scheme(config);
    SolveResult result;
    result.trajectory = run(problem, scheme);
    result.report = audit(result.trajectory, problem, scheme);

    std::filesystem::create_directories(out_dir);
    write_resolved_config(out_dir, config.resolved);
    write_energy_log(out_dir, config.resolved, result.report);
    for (std::size_t i = 0; i < config.snapshot_steps.size(); ++i) {
        const long long step = config.snapshot_steps[i];
        write_snapshot(out_dir, step, config.resolved, problem.grid,
                       result.trajectory.states.at(static_cast<std::size_t>(step)).u);
    }
    return result;
}

}  // namespace detail

inline int run_solve(const std::string& config_path, const std::string& out_override) {
    try {
        const RunConfig config = load_config(config_path);
        const std::filesystem::path out_dir = detail::pick_out_dir(config, out_override);
        const detail::SolveResult result = detail::solve_into(config, out_dir);
        const State& final_state = result.trajectory.back();
        std::cout << "solve: " << result.trajectory.size() - 1 << " steps to t=" << format17(final_state.t)
                  << ", " << config.snapshot_steps.size() << " snapshots -> " << out_dir.string()
                  << '\n';
        return kExitOk;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return kExitError;
    }
}

inline int run_audit(const std::string& config_path, const std::string& out_override) {
    try {
        const RunConfig config = load_config(config_path);
        const std::filesystem::path out_dir = detail::pick_out_dir(config, out_override);
        const detail::SolveResult result = detail::solve_into(config, out_dir);
        if (!result.report.pass) {
            const int first = result.report.first_violation();
            const auto& row = result.report.steps.at(static_cast<std::size_t>(first));
            std::cerr << "audit: energy bound violated at step " << row.step
                      << " (t=" << format17(row.time) << "): energy " << format17(row.energy)
                      << " exceeds bound " << format17(row.bound) << '\n';
            return kExitBoundViolation;
        }
        std::cout << "audit: energy bound holds at all " << result.report.steps.size()
                  << " time levels -> " << out_dir.string() << '\n';
        return kExitOk;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return kExitError;
    }
}

inline int run_compare(const std::string& config_path, const std::string& oracle,
                       const std::string& out_override) {
    try {
        const RunConfig config = load_config(config_path);
        const std::filesystem::path out_dir = detail::pick_out_dir(config, out_override);
        const ProblemSpec problem = make_problem(config);

        // Oracle preconditions, checked before any computation.
        if (oracle == "modal") {
            if (problem.kernels.flux.size() > 1 || problem.kernels.capacity.size() > 1)
                throw ConfigError(
                    "oracle 'modal' requires at most one term per kernel; "
                    "use 'volterra' or 'dense-block' for multi-term kernels");
            if (problem.source)
                throw ConfigError("oracle 'modal' requires a zero source");
        } else if (oracle == "dense-block") {
            if (problem.grid.n > 64)
                throw ConfigError("oracle 'dense-block' requires n <= 64 (got n=" +
                                  std::to_string(problem.grid.n) + ")");
        } else if (oracle != "volterra") {
            throw ConfigError("unknown oracle '" + oracle +
                              "' (expected volterra, modal, or dense-block)");
        }

        std::vector<ConvergenceRow> convergence;
        std::vector<Discrepancy> snapshot_rows;
        for (int level = 0; level < 3; ++level) {
            SchemeConfig scheme = make_scheme(config);
            scheme.tau /= static_cast<double>(1 << level);
            const Trajectory computed = run(problem, scheme);

            Trajectory reference;
            if (oracle == "volterra") {
                reference = oracles::volterra_solve(problem, scheme.tau);
            } else if (oracle == "modal") {
                std::vector<double> times;
                times.reserve(computed.size());
                for (const auto& state : computed.states) times.push_back(state.t);
                reference = oracles::modal_superposition(problem, times, problem.grid.n);
            } else {
                reference = oracles::run_dense(problem, scheme);
            }

            ConvergenceRow row;
            row.tau = scheme.tau;
            row.overall = discrepancy(computed, reference, problem.grid);
            row.order = std::numeric_limits<double>::quiet_NaN();
            if (level > 0) {
                const double previous = convergence.back().overall.max_abs;
                if (previous > 0.0 && row.overall.max_abs > 0.0)
                    row.order = std::log2(previous / row.overall.max_abs);
            }
            convergence.push_back(row);

            if (level == 0)
                for (const long long step : config.snapshot_steps)
                    snapshot_rows.push_back(
                        state_discrepancy(computed.states.at(static_cast<std::size_t>(step)),
                                          reference.states.at(static_cast<std::size_t>(step)),
                                          problem.grid));
        }

        std::filesystem::create_directories(out_dir);
        write_resolved_config(out_dir, config.resolved);
        write_discrepancy_table(out_dir, config.resolved, config.snapshot_times, snapshot_rows);
        write_convergence_table(out_dir, config.resolved, convergence);
        std::cout << "compare vs " << oracle
                  << ": max_abs=" << format17(convergence.front().overall.max_abs)
                  << " at tau=" << format17(convergence.front().tau) << " -> " << out_dir.string()
                  << '\n';
        return kExitOk;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return kExitError;
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (c == ',') {
            tokens.push_back(current);
            current.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            current += c;
        }
    }
    if (!current.empty() || !tokens.empty()) tokens.push_back(current);
    return tokens;
}

}  // namespace detail

inline int run_sweep(const std::string& config_path, const std::string& param_path,
                     const std::string& values_csv, const std::string& out_override) {
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError(config_path + ": cannot open");
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& error) {
            throw ConfigError(config_path + ": " + error.what());
        }

        std::string pointer_text = "/" + param_path;
        std::replace(pointer_text.begin(), pointer_text.end(), '.', '/');
        const nlohmann::json::json_pointer pointer(pointer_text);
        try {
            if (!root.at(pointer).is_number())
                throw ConfigError("parameter path '" + param_path +
                                  "' does not address a numeric scalar");
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("parameter path '" + param_path + "' not found in the config");
        }

        // Resolve the base config once so path/out errors surface before any solve.
        const RunConfig base = resolve_config(root, config_path);
        const std::filesystem::path out_dir = detail::pick_out_dir(base, out_override);

        std::vector<std::string> tokens = detail::split_csv(values_csv);
        std::vector<double> values;
        for (const std::string& token : tokens) {
            if (token.empty())
                throw ConfigError("empty entry in --values list");
            char* end = nullptr;
            const double value = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size() || !std::isfinite(value))
                throw ConfigError("--values entry '" + token + "' is not a finite number");
            values.push_back(value);
        }

        std::filesystem::create_directories(out_dir);
        auto summary = open_output(out_dir / "summary.csv");
        summary << "value,min_u,max_u,final_energy\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            nlohmann::json varied = root;
            varied[pointer] = values[i];
            const std::string label = param_path + "=" + tokens[i];
            const RunConfig config =
                resolve_config(varied, config_path + " [" + label + "]");
            const detail::SolveResult result =
                detail::solve_into(config, out_dir / label);

            const ProblemSpec problem = make_problem(config);
            const State& final_state = result.trajectory.back();
            const double min_u =
                *std::min_element(final_state.u.begin(), final_state.u.end());
            const double max_u =
                *std::max_element(final_state.u.begin(), final_state.u.end());
            const double final_energy = energy_norm(final_state, problem.kernels,
                                                    assemble_laplacian(problem.grid), problem.grid);
            summary << format17(values[i]) << ',' << format17(min_u) << ',' << format17(max_u)
                    << ',' << format17(final_energy) << '\n';
        }
        std::cout << "sweep " << param_path << ": " << values.size() << " values -> "
                  << out_dir.string() << '\n';
        return kExitOk;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return kExitError;
    }
}

}  // namespace heatmem::cli
