#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatmem/memory_system.hpp"
#include "heatmem/spatial.hpp"

namespace heatmem {

/// Energy audit of one time level: the composite norm ||y||_*, the stability
/// bound accumulated over the steps taken so far, and their difference.
struct StepDiagnostics {
    int step = 0;
    double time = 0.0;
    double energy = 0.0;
    double bound = 0.0;
    double margin = 0.0;
};

struct AuditReport {
    std::vector<StepDiagnostics> steps;
    bool pass = true;

    /// First step whose margin violates the bound, or -1 when none does.
    int first_violation() const {
        for (const auto& d : steps)
            if (d.margin < -1e-10 * d.bound) return d.step;
        return -1;
    }
};

/// Composite energy norm
///   ||y||_*^2 = ||u||^2 + sum_i alpha_i ||v_i||_A^2 + sum_j beta_j nu_j ||w_j||^2
/// in which the scheme is unconditionally stable for sigma >= 0.5.
inline double energy_norm(const State& state, const KernelPair& kernels,
                          const TridiagonalOperator& laplacian, const Grid1D& grid) {
    const auto& flux = kernels.flux.terms();
    const auto& capacity = kernels.capacity.terms();
    if (state.v.size() != flux.size() || state.w.size() != capacity.size())
        throw std::invalid_argument("energy_norm: state inconsistent with kernels");
    double energy_sq = inner(state.u, state.u, grid);
    for (std::size_t i = 0; i < flux.size(); ++i)
        energy_sq += flux[i].weight * inner(laplacian.apply(state.v[i]), state.v[i], grid);
    for (std::size_t j = 0; j < capacity.size(); ++j)
        energy_sq += capacity[j].weight * capacity[j].rate * inner(state.w[j], state.w[j], grid);
    return std::sqrt(energy_sq);
}

/// Right side of the a priori estimate: ||u0|| + 2 sigma sum_k tau ||phi^{k+sigma}||.
inline double stability_bound(double u0_norm, std::span<const double> phi_norms, double sigma,
                              double tau) {
    double sum = 0.0;
    for (double value : phi_norms) sum += value;
    return u0_norm + 2.0 * sigma * tau * sum;
}

/// Per-step energy audit of a trajectory against the stability bound. The
/// pass flag uses a relative tolerance of 1e-10 on the bound.
inline AuditReport audit(const Trajectory& trajectory, const ProblemSpec& problem,
                         const SchemeConfig& config) {
    validate_scheme(config);
    const TridiagonalOperator laplacian = assemble_laplacian(problem.grid);
    const double u0_norm = norm(problem.u0, problem.grid);

    AuditReport report;
    report.steps.reserve(trajectory.size());
    std::vector<double> phi_norms;
    phi_norms.reserve(trajectory.size());
    for (std::size_t s = 0; s < trajectory.size(); ++s) {
        const State& state = trajectory.states[s];
        StepDiagnostics diag;
        diag.step = static_cast<int>(s);
        diag.time = state.t;
        diag.energy = energy_norm(state, problem.kernels, laplacian, problem.grid);
        diag.bound = stability_bound(u0_norm, phi_norms, config.sigma, config.tau);
        diag.margin = diag.bound - diag.energy;
        if (diag.margin < -1e-10 * diag.bound) report.pass = false;
        report.steps.push_back(diag);
        if (s + 1 < trajectory.size()) {
            const std::vector<double> phi = sample_source(problem, state.t + config.sigma * config.tau);
            phi_norms.push_back(norm(phi, problem.grid));
        }
    }
    return report;
}

struct Discrepancy {
    double max_abs = 0.0;
    double weighted_l2 = 0.0;
};

/// Pointwise discrepancy of the u components of two states on the same grid.
inline Discrepancy state_discrepancy(const State& a, const State& b, const Grid1D& grid) {
    if (a.u.size() != b.u.size() || static_cast<int>(a.u.size()) != grid.n)
        throw std::invalid_argument("state_discrepancy: grid mismatch");
    Discrepancy out;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < a.u.size(); ++k) {
        const double diff = a.u[k] - b.u[k];
        out.max_abs = std::max(out.max_abs, std::abs(diff));
        sum_sq += diff * diff;
    }
    out.weighted_l2 = std::sqrt(grid.h * sum_sq);
    return out;
}

/// Trajectory discrepancy at matching times: the maximum over time of the
/// spatial max norm and of the h-weighted l2 norm of the u difference.
inline Discrepancy discrepancy(const Trajectory& a, const Trajectory& b, const Grid1D& grid) {
    if (a.size() != b.size()) throw std::invalid_argument("discrepancy: trajectory lengths differ");
    Discrepancy out;
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (std::abs(a.states[s].t - b.states[s].t) > 1e-9)
            throw std::invalid_argument("discrepancy: time grids differ");
        const Discrepancy step = state_discrepancy(a.states[s], b.states[s], grid);
        out.max_abs = std::max(out.max_abs, step.max_abs);
        out.weighted_l2 = std::max(out.weighted_l2, step.weighted_l2);
    }
    return out;
}

}  // namespace heatmem
