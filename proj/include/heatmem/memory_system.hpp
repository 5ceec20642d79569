#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatmem/kernels.hpp"
#include "heatmem/spatial.hpp"

namespace heatmem {

/// Right-hand side f(t) as interior-node values; an empty function means f = 0.
using SourceFn = std::function<std::vector<double>(double)>;

/// One initial-boundary value problem: grid, memory kernels, initial profile,
/// source, and the final time.
struct ProblemSpec {
    Grid1D grid;
    KernelPair kernels;
    std::vector<double> u0;
    SourceFn source;
    double horizon;
};

/// Extended solution at one time level: the temperature u plus the auxiliary
/// flux-memory variables v_i (one per flux-kernel term) and capacity-memory
/// variables w_j (one per capacity-kernel term).
struct State {
    double t = 0.0;
    std::vector<double> u;
    std::vector<std::vector<double>> v;
    std::vector<std::vector<double>> w;
};

/// Two-level scheme parameters. Unconditional stability is guaranteed only
/// for sigma >= 0.5; smaller weights are allowed but emit a warning.
struct SchemeConfig {
    double sigma = 1.0;
    double tau = 0.0;
};

struct Trajectory {
    std::vector<State> states;

    std::size_t size() const { return states.size(); }
    const State& back() const { return states.back(); }
};

inline std::vector<double> sample_source(const ProblemSpec& problem, double t) {
    if (!problem.source) return std::vector<double>(problem.grid.n, 0.0);
    std::vector<double> values = problem.source(t);
    if (static_cast<int>(values.size()) != problem.grid.n)
        throw std::invalid_argument("sample_source: source vector has wrong length");
    return values;
}

inline void validate_scheme(const SchemeConfig& config) {
    if (!(config.tau > 0.0)) throw std::invalid_argument("SchemeConfig: tau must be positive");
    if (!(config.sigma >= 0.0 && config.sigma <= 1.0))
        throw std::invalid_argument("SchemeConfig: sigma must lie in [0,1]");
}

/// State at t = 0: u = u0, all auxiliary variables zero.
inline State initialize(const ProblemSpec& problem) {
    if (static_cast<int>(problem.u0.size()) != problem.grid.n)
        throw std::invalid_argument("initialize: u0 length does not match grid");
    State state;
    state.t = 0.0;
    state.u = problem.u0;
    state.v.assign(problem.kernels.flux.size(), std::vector<double>(problem.grid.n, 0.0));
    state.w.assign(problem.kernels.capacity.size(), std::vector<double>(problem.grid.n, 0.0));
    return state;
}

/// Per-step quantities of the factored realization: the scalars b_I, b_A, the
/// factored operator B = b_I I + sigma tau b_A A, and the update coefficients
/// of the auxiliary-variable recurrences. Built once per (problem, config).
class StepOperator {
public:
    StepOperator(const ProblemSpec& problem, const SchemeConfig& config)
        : laplacian_(assemble_laplacian(problem.grid)) {
        validate_scheme(config);
        const double sigma = config.sigma;
        const double tau = config.tau;
        const auto& flux = problem.kernels.flux.terms();
        const auto& capacity = problem.kernels.capacity.terms();

        b_I_ = 1.0;
        sum_beta_ = 0.0;
        for (const auto& term : capacity) {
            b_I_ += sigma * tau * term.weight / (1.0 + sigma * term.rate * tau);
            sum_beta_ += term.weight;
        }
        b_A_ = 1.0;
        for (const auto& term : flux)
            b_A_ += sigma * tau * term.weight / (1.0 + sigma * term.rate * tau);

        for (const auto& term : flux) {
            const double denom = 1.0 + sigma * term.rate * tau;
            v_gain_.push_back(sigma * tau / denom);
            eta_u_.push_back((1.0 - sigma) * tau / denom);
            eta_v_.push_back((1.0 - (1.0 - sigma) * term.rate * tau) / denom);
        }
        for (const auto& term : capacity) {
            const double denom = 1.0 + sigma * term.rate * tau;
            w_gain_.push_back(sigma * tau / denom);
            theta_u_.push_back((1.0 - sigma) * tau / denom);
            theta_w_.push_back((1.0 - (1.0 - sigma) * term.rate * tau) / denom);
        }

        std::vector<double> sub(problem.grid.n - 1), diag(problem.grid.n), sup(problem.grid.n - 1);
        const double off = sigma * tau * b_A_;
        for (int i = 0; i < problem.grid.n; ++i) diag[i] = b_I_ + off * laplacian_.diag()[i];
        for (int i = 0; i < problem.grid.n - 1; ++i) {
            sub[i] = off * laplacian_.sub()[i];
            sup[i] = off * laplacian_.super()[i];
        }
        factorization_.emplace(TridiagonalOperator(std::move(sub), std::move(diag), std::move(sup)));
    }

    double b_I() const { return b_I_; }
    double b_A() const { return b_A_; }
    const TridiagonalOperator& laplacian() const { return laplacian_; }
    const TridiagonalFactorization& factorization() const { return *factorization_; }
    double sum_beta() const { return sum_beta_; }
    double v_gain(std::size_t i) const { return v_gain_[i]; }
    double w_gain(std::size_t j) const { return w_gain_[j]; }
    double eta_u(std::size_t i) const { return eta_u_[i]; }
    double eta_v(std::size_t i) const { return eta_v_[i]; }
    double theta_u(std::size_t j) const { return theta_u_[j]; }
    double theta_w(std::size_t j) const { return theta_w_[j]; }

private:
    TridiagonalOperator laplacian_;
    std::optional<TridiagonalFactorization> factorization_;
    double b_I_ = 1.0, b_A_ = 1.0, sum_beta_ = 0.0;
    std::vector<double> v_gain_, eta_u_, eta_v_;
    std::vector<double> w_gain_, theta_u_, theta_w_;
};

inline StepOperator build_step_operator(const ProblemSpec& problem, const SchemeConfig& config) {
    return StepOperator(problem, config);
}

/// One step of the weighted scheme via the factored realization: recover the
/// auxiliary recurrences, assemble the right-hand side chi with a single
/// Laplacian apply, solve B u' = chi, then update v and w.
inline State advance(const State& state, const StepOperator& step_op, const ProblemSpec& problem,
                     const SchemeConfig& config) {
    const int n = problem.grid.n;
    const std::size_t m = problem.kernels.flux.size();
    const std::size_t l = problem.kernels.capacity.size();
    if (static_cast<int>(state.u.size()) != n || state.v.size() != m || state.w.size() != l)
        throw std::invalid_argument("advance: state inconsistent with problem dimensions");
    const double sigma = config.sigma;
    const double tau = config.tau;
    const auto& flux = problem.kernels.flux.terms();
    const auto& capacity = problem.kernels.capacity.terms();

    std::vector<std::vector<double>> eta(m), theta(l);
    for (std::size_t i = 0; i < m; ++i) {
        eta[i].resize(n);
        for (int k = 0; k < n; ++k)
            eta[i][k] = step_op.eta_u(i) * state.u[k] + step_op.eta_v(i) * state.v[i][k];
    }
    for (std::size_t j = 0; j < l; ++j) {
        theta[j].resize(n);
        for (int k = 0; k < n; ++k)
            theta[j][k] = step_op.theta_u(j) * state.u[k] + step_op.theta_w(j) * state.w[j][k];
    }

    const std::vector<double> phi = sample_source(problem, state.t + sigma * tau);
    std::vector<double> chi(n);
    const double u_factor = 1.0 - (1.0 - sigma) * tau * step_op.sum_beta();
    for (int k = 0; k < n; ++k) chi[k] = u_factor * state.u[k] + tau * phi[k];
    for (std::size_t j = 0; j < l; ++j) {
        const double coeff = tau * capacity[j].weight * capacity[j].rate;
        for (int k = 0; k < n; ++k)
            chi[k] += coeff * (sigma * theta[j][k] + (1.0 - sigma) * state.w[j][k]);
    }

    std::vector<double> flux_combination(n);
    for (int k = 0; k < n; ++k) flux_combination[k] = (1.0 - sigma) * state.u[k];
    for (std::size_t i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k)
            flux_combination[k] += flux[i].weight * (sigma * eta[i][k] + (1.0 - sigma) * state.v[i][k]);
    const std::vector<double> lap_applied = step_op.laplacian().apply(flux_combination);
    for (int k = 0; k < n; ++k) chi[k] -= tau * lap_applied[k];

    State next;
    next.t = state.t + tau;
    next.u = step_op.factorization().solve(chi);
    next.v.resize(m);
    next.w.resize(l);
    for (std::size_t i = 0; i < m; ++i) {
        next.v[i].resize(n);
        for (int k = 0; k < n; ++k) next.v[i][k] = step_op.v_gain(i) * next.u[k] + eta[i][k];
    }
    for (std::size_t j = 0; j < l; ++j) {
        next.w[j].resize(n);
        for (int k = 0; k < n; ++k) next.w[j][k] = step_op.w_gain(j) * next.u[k] + theta[j][k];
    }
    return next;
}

using StepObserver = std::function<void(const State&)>;

/// Number of uniform steps covering [0, horizon]; horizon must be an integer
/// multiple of tau to within 1e-9.
inline int step_count(double horizon, double tau) {
    const double ratio = horizon / tau;
    const auto steps = static_cast<long long>(std::llround(ratio));
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9)
        throw std::invalid_argument("run: horizon is not an integer multiple of tau");
    return static_cast<int>(steps);
}

/// Time loop over [0, horizon]: states at t = 0, tau, ..., horizon. Observers
/// are invoked after every accepted step with the new state.
inline Trajectory run(const ProblemSpec& problem, const SchemeConfig& config,
                      const std::vector<StepObserver>& observers = {}) {
    validate_scheme(config);
    if (config.sigma < 0.5)
        std::cerr << "warning: sigma=" << config.sigma
                  << " < 0.5: the scheme has no unconditional stability guarantee\n";
    const int steps = step_count(problem.horizon, config.tau);
    const StepOperator step_op(problem, config);

    Trajectory trajectory;
    trajectory.states.reserve(steps + 1);
    trajectory.states.push_back(initialize(problem));
    for (int s = 0; s < steps; ++s) {
        trajectory.states.push_back(advance(trajectory.states.back(), step_op, problem, config));
        for (const auto& observer : observers) observer(trajectory.states.back());
    }
    return trajectory;
}

}  // namespace heatmem
