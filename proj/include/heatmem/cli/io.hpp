#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatmem/diagnostics.hpp"
#include "heatmem/spatial.hpp"

namespace heatmem::cli {

/// Shortest round-trippable decimal form, 17 significant digits.
inline std::string format17(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation, byte-stable
    if (!out) throw std::runtime_error("cannot open output file '" + path.string() + "'");
    return out;
}

/// `# config: {...}` provenance header embedded in every CSV.
inline std::string config_header(const nlohmann::json& resolved) {
    return "# config: " + resolved.dump();
}

inline void write_resolved_config(const std::filesystem::path& out_dir,
                                  const nlohmann::json& resolved) {
    auto out = open_output(out_dir / "resolved_config.json");
    out << resolved.dump(2) << '\n';
}

inline std::filesystem::path snapshot_path(const std::filesystem::path& out_dir, long long step) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%06lld.csv", step);
    return out_dir / name;
}

inline void write_snapshot(const std::filesystem::path& out_dir, long long step,
                           const nlohmann::json& resolved, const Grid1D& grid,
                           std::span<const double> u) {
    auto out = open_output(snapshot_path(out_dir, step));
    out << config_header(resolved) << "\nx,u\n";
    for (int k = 0; k < grid.n; ++k)
        out << format17(grid.x(k)) << ',' << format17(u[k]) << '\n';
}

inline void write_energy_log(const std::filesystem::path& out_dir, const nlohmann::json& resolved,
                             const AuditReport& report) {
    auto out = open_output(out_dir / "energy.csv");
    out << config_header(resolved) << "\nn,t,energy,bound,margin\n";
    for (const auto& row : report.steps)
        out << row.step << ',' << format17(row.time) << ',' << format17(row.energy) << ','
            << format17(row.bound) << ',' << format17(row.margin) << '\n';
}

inline void write_discrepancy_table(const std::filesystem::path& out_dir,
                                    const nlohmann::json& resolved, std::span<const double> times,
                                    std::span<const Discrepancy> rows) {
    auto out = open_output(out_dir / "discrepancy.csv");
    out << config_header(resolved) << "\nt,max_abs,weighted_l2\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << format17(times[i]) << ',' << format17(rows[i].max_abs) << ','
            << format17(rows[i].weighted_l2) << '\n';
}

struct ConvergenceRow {
    double tau;
    Discrepancy overall;
    double order;  // NaN in the first row
};

inline void write_convergence_table(const std::filesystem::path& out_dir,
                                    const nlohmann::json& resolved,
                                    std::span<const ConvergenceRow> rows) {
    auto out = open_output(out_dir / "convergence.csv");
    out << config_header(resolved) << "\ntau,max_abs,weighted_l2,order\n";
    for (const auto& row : rows) {
        out << format17(row.tau) << ',' << format17(row.overall.max_abs) << ','
            << format17(row.overall.weighted_l2) << ',';
        if (std::isnan(row.order))
            out << '\n';
        else
            out << format17(row.order) << '\n';
    }
}

}  // namespace heatmem::cli
