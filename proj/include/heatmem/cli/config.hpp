#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatmem/memory_system.hpp"

namespace heatmem::cli {

/// Raised for any problem with a configuration file; the message names the
/// file and, where possible, the offending field or input position.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fully resolved run configuration: every default materialized, grid and
/// snapshot times validated. `resolved` is the canonical JSON echo that
/// output files embed as a provenance header.
struct RunConfig {
    int n = 0;
    double h = 0.0;
    double tau = 0.0;
    double horizon = 0.0;
    double sigma = 1.0;
    std::vector<ExpSumTerm> flux_terms;
    std::vector<ExpSumTerm> capacity_terms;
    std::string initial = "ramp";
    std::string source = "zero";
    std::vector<double> snapshot_times;
    std::vector<long long> snapshot_steps;
    std::string out_dir;  // optional "out" key; the command line overrides
    nlohmann::json resolved;
};

/// Initial node values for a named preset or a node-value file:
///   zero            all-zero profile
///   ramp            x for x <= 1/2, 0 beyond (value 1/2 at the node x = 1/2)
///   sine:<k>        sin(k pi x), k >= 1
///   file:<path>     whitespace-separated node values, one per interior node
inline std::vector<double> initial_preset(const std::string& name, const Grid1D& grid) {
    std::vector<double> u0(grid.n, 0.0);
    if (name == "zero") return u0;
    if (name == "ramp" || name == "paper_ramp") {
        for (int k = 0; k < grid.n; ++k) {
            const double x = grid.x(k);
            u0[k] = (x <= 0.5 + 1e-12) ? x : 0.0;
        }
        return u0;
    }
    if (name.starts_with("sine:")) {
        const std::string digits = name.substr(5);
        int mode = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), mode);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || mode < 1)
            throw ConfigError("initial preset '" + name + "': mode must be a positive integer");
        for (int k = 0; k < grid.n; ++k) u0[k] = std::sin(mode * std::numbers::pi * grid.x(k));
        return u0;
    }
    if (name.starts_with("file:")) {
        const std::string path = name.substr(5);
        std::ifstream in(path);
        if (!in) throw ConfigError("initial values file '" + path + "': cannot open");
        std::vector<double> values;
        double value = 0.0;
        while (in >> value) values.push_back(value);
        if (!in.eof()) throw ConfigError("initial values file '" + path + "': non-numeric entry");
        if (static_cast<int>(values.size()) != grid.n)
            throw ConfigError("initial values file '" + path + "': expected " +
                              std::to_string(grid.n) + " node values, found " +
                              std::to_string(values.size()));
        return values;
    }
    throw ConfigError("unknown initial preset '" + name +
                      "' (expected zero, ramp, sine:<k>, or file:<path>)");
}

namespace detail {

inline void require_keys(const nlohmann::json& object, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : object.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) known = true;
        if (!known) throw ConfigError("field '" + where + "." + item.key() + "': unknown key");
    }
}

inline double number_at(const nlohmann::json& object, const std::string& where,
                        const std::string& key) {
    if (!object.contains(key)) throw ConfigError("field '" + where + "." + key + "': missing");
    const auto& node = object.at(key);
    if (!node.is_number()) throw ConfigError("field '" + where + "." + key + "': expected a number");
    return node.get<double>();
}

inline std::vector<ExpSumTerm> terms_at(const nlohmann::json& root, const std::string& key) {
    std::vector<ExpSumTerm> terms;
    if (!root.contains(key)) return terms;
    const auto& node = root.at(key);
    if (!node.is_array()) throw ConfigError("field '" + key + "': expected a list of terms");
    for (std::size_t i = 0; i < node.size(); ++i) {
        const std::string where = key + "." + std::to_string(i);
        const auto& term = node.at(i);
        if (!term.is_object()) throw ConfigError("field '" + where + "': expected {weight, rate}");
        require_keys(term, where, {"weight", "rate"});
        terms.push_back({number_at(term, where, "weight"), number_at(term, where, "rate")});
    }
    return terms;
}

}  // namespace detail

/// Parse and resolve a configuration file. Schema (JSON):
///   grid:            {n: int} or {h: number}, exactly one of the two
///   time:            {tau: number, T: number}, T an integer multiple of tau
///   scheme:          {sigma: number in [0,1]}, optional, default 1
///   flux_kernel:     [{weight, rate}, ...], optional, default empty
///   capacity_kernel: [{weight, rate}, ...], optional, default empty
///   initial:         preset string, optional, default "ramp"
///   source:          "zero" (the only supported preset), optional
///   snapshots:       [times...], optional; default {0, 0.01, 0.02, 0.05, 0.1}
///                    clipped to [0, T], with T always included
///   out:             output directory, optional (command line takes precedence)
inline RunConfig resolve_config(const nlohmann::json& root, const std::string& context) {
    if (!root.is_object()) throw ConfigError(context + ": top level must be an object");

    try {
        detail::require_keys(root, "<root>",
                             {"grid", "time", "scheme", "flux_kernel", "capacity_kernel", "initial",
                              "source", "snapshots", "out"});

        RunConfig config;

        if (!root.contains("grid") || !root.at("grid").is_object())
            throw ConfigError("field 'grid': expected an object with n or h");
        const auto& grid_node = root.at("grid");
        detail::require_keys(grid_node, "grid", {"n", "h"});
        if (grid_node.contains("n") == grid_node.contains("h"))
            throw ConfigError("field 'grid': exactly one of n or h is required");
        if (grid_node.contains("n")) {
            const auto& n_node = grid_node.at("n");
            if (!n_node.is_number_integer() || n_node.get<std::int64_t>() < 1)
                throw ConfigError("field 'grid.n': expected a positive integer");
            config.n = static_cast<int>(n_node.get<std::int64_t>());
        } else {
            const double h = detail::number_at(grid_node, "grid", "h");
            if (!(h > 0.0) || h >= 1.0)
                throw ConfigError("field 'grid.h': expected a value in (0, 1)");
            const double cells = 1.0 / h;
            const auto rounded = static_cast<long long>(std::llround(cells));
            if (rounded < 2 || std::abs(cells - static_cast<double>(rounded)) > 1e-9 * cells)
                throw ConfigError("field 'grid.h': 1/h must be an integer >= 2");
            config.n = static_cast<int>(rounded) - 1;
        }
        config.h = 1.0 / (config.n + 1);

        if (!root.contains("time") || !root.at("time").is_object())
            throw ConfigError("field 'time': expected an object with tau and T");
        const auto& time_node = root.at("time");
        detail::require_keys(time_node, "time", {"tau", "T"});
        config.tau = detail::number_at(time_node, "time", "tau");
        config.horizon = detail::number_at(time_node, "time", "T");
        if (!(config.tau > 0.0)) throw ConfigError("field 'time.tau': expected a positive number");
        if (!(config.horizon > 0.0)) throw ConfigError("field 'time.T': expected a positive number");
        long long steps = 0;
        try {
            steps = step_count(config.horizon, config.tau);
        } catch (const std::exception& error) {
            throw ConfigError(std::string("field 'time': ") + error.what());
        }

        config.sigma = 1.0;
        if (root.contains("scheme")) {
            if (!root.at("scheme").is_object())
                throw ConfigError("field 'scheme': expected an object");
            detail::require_keys(root.at("scheme"), "scheme", {"sigma"});
            if (root.at("scheme").contains("sigma"))
                config.sigma = detail::number_at(root.at("scheme"), "scheme", "sigma");
            if (config.sigma < 0.0 || config.sigma > 1.0)
                throw ConfigError("field 'scheme.sigma': expected a value in [0, 1]");
        }

        config.flux_terms = detail::terms_at(root, "flux_kernel");
        config.capacity_terms = detail::terms_at(root, "capacity_kernel");
        const std::pair<const char*, const std::vector<ExpSumTerm>*> kernel_fields[] = {
            {"flux_kernel", &config.flux_terms}, {"capacity_kernel", &config.capacity_terms}};
        for (const auto& [key, terms] : kernel_fields)
            for (std::size_t i = 0; i < terms->size(); ++i) {
                const auto& term = (*terms)[i];
                if (!(term.weight > 0.0) || !(term.rate > 0.0) || !std::isfinite(term.weight) ||
                    !std::isfinite(term.rate))
                    throw ConfigError("field '" + std::string(key) + "." + std::to_string(i) +
                                      "': weight and rate must be positive and finite");
            }

        if (root.contains("initial")) {
            if (!root.at("initial").is_string())
                throw ConfigError("field 'initial': expected a string");
            config.initial = root.at("initial").get<std::string>();
        }
        if (root.contains("source")) {
            if (!root.at("source").is_string() || root.at("source").get<std::string>() != "zero")
                throw ConfigError("field 'source': the only supported preset is \"zero\"");
        }
        if (root.contains("out")) {
            if (!root.at("out").is_string()) throw ConfigError("field 'out': expected a string");
            config.out_dir = root.at("out").get<std::string>();
        }

        const bool user_snapshots = root.contains("snapshots");
        std::vector<double> requested;
        if (user_snapshots) {
            if (!root.at("snapshots").is_array())
                throw ConfigError("field 'snapshots': expected a list of times");
            for (std::size_t i = 0; i < root.at("snapshots").size(); ++i) {
                const auto& node = root.at("snapshots").at(i);
                if (!node.is_number())
                    throw ConfigError("field 'snapshots." + std::to_string(i) +
                                      "': expected a number");
                requested.push_back(node.get<double>());
            }
        } else {
            for (const double t : {0.0, 0.01, 0.02, 0.05, 0.1})
                if (t < config.horizon) requested.push_back(t);
            requested.push_back(config.horizon);
        }
        for (std::size_t i = 0; i < requested.size(); ++i) {
            const double t = requested[i];
            const auto step = static_cast<long long>(std::llround(t / config.tau));
            const bool on_grid = step >= 0 && step <= steps &&
                                 std::abs(t - static_cast<double>(step) * config.tau) <=
                                     1e-9 * std::max(1.0, std::abs(t));
            if (!on_grid) {
                if (user_snapshots)
                    throw ConfigError("field 'snapshots." + std::to_string(i) +
                                      "': time must lie on the step grid within [0, T]");
                continue;  // default snapshot times are best effort
            }
            config.snapshot_steps.push_back(step);
            config.snapshot_times.push_back(static_cast<double>(step) * config.tau);
        }

        config.resolved = {
            {"grid", {{"n", config.n}, {"h", config.h}}},
            {"time", {{"tau", config.tau}, {"T", config.horizon}, {"steps", steps}}},
            {"scheme", {{"sigma", config.sigma}}},
            {"flux_kernel", nlohmann::json::array()},
            {"capacity_kernel", nlohmann::json::array()},
            {"initial", config.initial},
            {"source", config.source},
            {"snapshots", config.snapshot_times},
        };
        for (const auto& term : config.flux_terms)
            config.resolved["flux_kernel"].push_back({{"weight", term.weight}, {"rate", term.rate}});
        for (const auto& term : config.capacity_terms)
            config.resolved["capacity_kernel"].push_back(
                {{"weight", term.weight}, {"rate", term.rate}});
        return config;
    } catch (const ConfigError& error) {
        throw ConfigError(context + ": " + error.what());
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& error) {
        throw ConfigError(path + ": " + error.what());
    }
    return resolve_config(root, path);
}

/// Problem assembly from a resolved config. The source is always zero for now.
inline ProblemSpec make_problem(const RunConfig& config) {
    Grid1D grid(config.n);
    KernelPair kernels{ExpSumKernel(config.flux_terms), ExpSumKernel(config.capacity_terms)};
    std::vector<double> u0 = initial_preset(config.initial, grid);
    return ProblemSpec{grid, std::move(kernels), std::move(u0), SourceFn{}, config.horizon};
}

inline SchemeConfig make_scheme(const RunConfig& config) {
    return SchemeConfig{config.sigma, config.tau};
}

}  // namespace heatmem::cli
