#pragma once

// Shared helpers for the test suite: deterministic random problem generation,
// an independent residual check of the scheme's defining equations, and a
// generic RK4 integrator for the localized ODE system.

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatmem/memory_system.hpp"
#include "heatmem/spatial.hpp"

namespace testsupport {

using heatmem::ExpSumKernel;
using heatmem::ExpSumTerm;
using heatmem::Grid1D;
using heatmem::KernelPair;
using heatmem::ProblemSpec;
using heatmem::SchemeConfig;
using heatmem::State;

inline double log_uniform(std::mt19937& rng, double lo, double hi) {
    std::uniform_real_distribution<double> pick(std::log(lo), std::log(hi));
    return std::exp(pick(rng));
}

inline ExpSumKernel random_kernel(std::mt19937& rng, int max_terms) {
    std::uniform_int_distribution<int> count(0, max_terms);
    const int terms = count(rng);
    std::vector<ExpSumTerm> list;
    for (int i = 0; i < terms; ++i)
        list.push_back({log_uniform(rng, 1e-2, 1e2), log_uniform(rng, 1e-2, 1e2)});
    return ExpSumKernel(list);
}

/// Bounded smooth source: per-node amplitude pair driving cos/sin of a shared
/// frequency. Keeps the stability-audit inputs nontrivial but controlled.
inline heatmem::SourceFn random_source(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> amplitude(-1.0, 1.0);
    std::uniform_real_distribution<double> frequency(0.5, 20.0);
    auto cos_amp = std::make_shared<std::vector<double>>();
    auto sin_amp = std::make_shared<std::vector<double>>();
    for (int k = 0; k < n; ++k) {
        cos_amp->push_back(amplitude(rng));
        sin_amp->push_back(amplitude(rng));
    }
    const double omega = frequency(rng);
    return [cos_amp, sin_amp, omega](double t) {
        std::vector<double> values(cos_amp->size());
        for (std::size_t k = 0; k < values.size(); ++k)
            values[k] = (*cos_amp)[k] * std::cos(omega * t) + (*sin_amp)[k] * std::sin(omega * t);
        return values;
    };
}

inline std::vector<double> random_profile(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<double> u(n);
    for (double& entry : u) entry = value(rng);
    return u;
}

struct RandomProblemOptions {
    int n = 50;
    int max_terms = 3;
    bool with_source = true;
    std::vector<double> sigma_choices = {0.5, 0.75, 1.0};
    double tau_lo = 1e-4;
    double tau_hi = 1e-1;
    int steps = 100;
};

struct RandomProblem {
    ProblemSpec problem;
    SchemeConfig config;
};

inline RandomProblem random_problem(std::mt19937& rng, const RandomProblemOptions& options = {}) {
    Grid1D grid(options.n);
    KernelPair kernels{random_kernel(rng, options.max_terms), random_kernel(rng, options.max_terms)};
    std::vector<double> u0 = random_profile(rng, options.n);
    heatmem::SourceFn source;
    if (options.with_source) source = random_source(rng, options.n);

    SchemeConfig config;
    std::uniform_int_distribution<std::size_t> pick(0, options.sigma_choices.size() - 1);
    config.sigma = options.sigma_choices[pick(rng)];
    config.tau = log_uniform(rng, options.tau_lo, options.tau_hi);

    ProblemSpec problem{grid, std::move(kernels), std::move(u0), std::move(source),
                        config.tau * options.steps};
    return {std::move(problem), config};
}

/// Random state with consistent dimensions; auxiliary components need not be
/// reachable from zero initial data, which makes single-step checks stronger.
inline State random_state(std::mt19937& rng, const ProblemSpec& problem, double t = 0.0) {
    State state;
    state.t = t;
    state.u = random_profile(rng, problem.grid.n);
    for (std::size_t i = 0; i < problem.kernels.flux.size(); ++i)
        state.v.push_back(random_profile(rng, problem.grid.n));
    for (std::size_t j = 0; j < problem.kernels.capacity.size(); ++j)
        state.w.push_back(random_profile(rng, problem.grid.n));
    return state;
}

/// Maximum relative residual of the scheme's defining equations over one step
/// (weighted-average form, before any algebraic factoring). Written directly
/// from those equations so it shares no code with the production step.
inline double scheme_residual(const State& state, const State& next, const ProblemSpec& problem,
                              const SchemeConfig& config) {
    const int n = problem.grid.n;
    const double sigma = config.sigma;
    const double tau = config.tau;
    const auto& flux = problem.kernels.flux.terms();
    const auto& capacity = problem.kernels.capacity.terms();
    const heatmem::TridiagonalOperator laplacian = heatmem::assemble_laplacian(problem.grid);

    const auto weighted = [sigma](const std::vector<double>& now, const std::vector<double>& later) {
        std::vector<double> mix(now.size());
        for (std::size_t k = 0; k < now.size(); ++k)
            mix[k] = sigma * later[k] + (1.0 - sigma) * now[k];
        return mix;
    };

    const std::vector<double> u_mix = weighted(state.u, next.u);
    const std::vector<double> lap_u_mix = laplacian.apply(u_mix);
    const std::vector<double> phi = heatmem::sample_source(problem, state.t + sigma * tau);

    double worst = 0.0;
    const auto record = [&worst](double residual, double magnitude) {
        const double rel = std::abs(residual) / std::max(1.0, magnitude);
        if (rel > worst) worst = rel;
    };

    for (int k = 0; k < n; ++k) {
        double residual = (next.u[k] - state.u[k]) / tau + lap_u_mix[k] - phi[k];
        double magnitude = std::abs((next.u[k] - state.u[k]) / tau) + std::abs(lap_u_mix[k]) +
                           std::abs(phi[k]);
        for (std::size_t j = 0; j < capacity.size(); ++j) {
            const double w_mix = sigma * next.w[j][k] + (1.0 - sigma) * state.w[j][k];
            const double term = capacity[j].weight * (u_mix[k] - capacity[j].rate * w_mix);
            residual += term;
            magnitude += std::abs(term);
        }
        for (std::size_t i = 0; i < flux.size(); ++i) {
            // One tridiagonal row of A applied to the weighted v_i.
            double lap_v = laplacian.diag()[k] *
                           (sigma * next.v[i][k] + (1.0 - sigma) * state.v[i][k]);
            if (k > 0)
                lap_v += laplacian.sub()[k - 1] *
                         (sigma * next.v[i][k - 1] + (1.0 - sigma) * state.v[i][k - 1]);
            if (k < n - 1)
                lap_v += laplacian.super()[k] *
                         (sigma * next.v[i][k + 1] + (1.0 - sigma) * state.v[i][k + 1]);
            residual += flux[i].weight * lap_v;
            magnitude += std::abs(flux[i].weight * lap_v);
        }
        record(residual, magnitude);
    }

    for (std::size_t i = 0; i < flux.size(); ++i)
        for (int k = 0; k < n; ++k) {
            const double v_mix = sigma * next.v[i][k] + (1.0 - sigma) * state.v[i][k];
            const double residual =
                (next.v[i][k] - state.v[i][k]) / tau + flux[i].rate * v_mix - u_mix[k];
            record(residual, std::abs((next.v[i][k] - state.v[i][k]) / tau) +
                                 std::abs(flux[i].rate * v_mix) + std::abs(u_mix[k]));
        }
    for (std::size_t j = 0; j < capacity.size(); ++j)
        for (int k = 0; k < n; ++k) {
            const double w_mix = sigma * next.w[j][k] + (1.0 - sigma) * state.w[j][k];
            const double residual =
                (next.w[j][k] - state.w[j][k]) / tau + capacity[j].rate * w_mix - u_mix[k];
            record(residual, std::abs((next.w[j][k] - state.w[j][k]) / tau) +
                                 std::abs(capacity[j].rate * w_mix) + std::abs(u_mix[k]));
        }
    return worst;
}

/// Classic fourth-order Runge–Kutta over a flattened state vector.
inline std::vector<double> rk4(
    const std::function<std::vector<double>(double, const std::vector<double>&)>& derivative,
    std::vector<double> y, double t0, double t1, int steps) {
    if (steps < 1) throw std::invalid_argument("rk4: steps must be positive");
    const double dt = (t1 - t0) / steps;
    const auto axpy = [](const std::vector<double>& y0, double a, const std::vector<double>& d) {
        std::vector<double> out(y0.size());
        for (std::size_t k = 0; k < y0.size(); ++k) out[k] = y0[k] + a * d[k];
        return out;
    };
    for (int s = 0; s < steps; ++s) {
        const double t = t0 + s * dt;
        const std::vector<double> k1 = derivative(t, y);
        const std::vector<double> k2 = derivative(t + dt / 2, axpy(y, dt / 2, k1));
        const std::vector<double> k3 = derivative(t + dt / 2, axpy(y, dt / 2, k2));
        const std::vector<double> k4 = derivative(t + dt, axpy(y, dt, k3));
        for (std::size_t k = 0; k < y.size(); ++k)
            y[k] += dt / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
    }
    return y;
}

/// Time derivative of the localized system (u, v_1..v_m, w_1..w_l) flattened
/// into one vector, for use with rk4. Independent restatement of the
/// continuous equations the scheme discretizes.
inline std::function<std::vector<double>(double, const std::vector<double>&)> localized_derivative(
    const ProblemSpec& problem) {
    const heatmem::TridiagonalOperator laplacian = heatmem::assemble_laplacian(problem.grid);
    const auto flux = problem.kernels.flux.terms();
    const auto capacity = problem.kernels.capacity.terms();
    const heatmem::SourceFn source = problem.source;
    const int n = problem.grid.n;
    return [laplacian, flux, capacity, source, n](double t, const std::vector<double>& y) {
        const auto m = static_cast<int>(flux.size());
        const auto l = static_cast<int>(capacity.size());
        std::vector<double> dy(y.size());
        const std::span<const double> u(y.data(), static_cast<std::size_t>(n));
        std::vector<double> lap(n, 0.0);
        {
            std::vector<double> combined(u.begin(), u.end());
            for (int i = 0; i < m; ++i)
                for (int k = 0; k < n; ++k)
                    combined[k] += flux[i].weight * y[(1 + i) * n + k];
            lap = laplacian.apply(combined);
        }
        const std::vector<double> phi =
            source ? source(t) : std::vector<double>(static_cast<std::size_t>(n), 0.0);
        for (int k = 0; k < n; ++k) {
            double du = phi[k] - lap[k];
            for (int j = 0; j < l; ++j)
                du -= capacity[j].weight * (u[k] - capacity[j].rate * y[(1 + m + j) * n + k]);
            dy[k] = du;
        }
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < n; ++k)
                dy[(1 + i) * n + k] = u[k] - flux[i].rate * y[(1 + i) * n + k];
        for (int j = 0; j < l; ++j)
            for (int k = 0; k < n; ++k)
                dy[(1 + m + j) * n + k] = u[k] - capacity[j].rate * y[(1 + m + j) * n + k];
        return dy;
    };
}

inline std::vector<double> flatten_state(const State& state) {
    std::vector<double> y(state.u);
    for (const auto& v : state.v) y.insert(y.end(), v.begin(), v.end());
    for (const auto& w : state.w) y.insert(y.end(), w.begin(), w.end());
    return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

}  // namespace testsupport
