#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatmem/diagnostics.hpp"
#include "heatmem/memory_system.hpp"

namespace heatmem::oracles {

/// Discrete eigenvalue of the difference Laplacian for mode k (1-based),
/// lambda_k = (4/h^2) sin^2(k pi h / 2), eigenvector sin(k pi x).
inline double laplacian_eigenvalue(const Grid1D& grid, int mode) {
    if (mode < 1 || mode > grid.n) throw std::invalid_argument("laplacian_eigenvalue: mode out of range");
    const double s = std::sin(mode * std::numbers::pi * grid.h / 2.0);
    return 4.0 / (grid.h * grid.h) * s * s;
}

/// Coefficients of the discrete sine expansion u0 = sum_k c_k sin(k pi x),
/// c_k = 2 h sum_j u0_j sin(k pi x_j). Exact round trip on the grid.
inline std::vector<double> sine_coefficients(std::span<const double> u0, const Grid1D& grid) {
    if (static_cast<int>(u0.size()) != grid.n)
        throw std::invalid_argument("sine_coefficients: dimension mismatch");
    std::vector<double> coeff(grid.n);
    for (int k = 1; k <= grid.n; ++k) {
        double sum = 0.0;
        for (int j = 0; j < grid.n; ++j) sum += u0[j] * std::sin(k * std::numbers::pi * grid.x(j));
        coeff[k - 1] = 2.0 * grid.h * sum;
    }
    return coeff;
}

/// Semi-analytic solution of the classical heat model: expand in discrete
/// sine modes, damp mode k by exp(-lambda_k t), reconstruct.
inline std::vector<double> classical_heat_series(std::span<const double> u0, const Grid1D& grid,
                                                 double t) {
    if (t < 0.0) throw std::invalid_argument("classical_heat_series: negative time");
    const std::vector<double> coeff = sine_coefficients(u0, grid);
    std::vector<double> out(grid.n, 0.0);
    for (int k = 1; k <= grid.n; ++k) {
        const double amplitude = coeff[k - 1] * std::exp(-laplacian_eigenvalue(grid, k) * t);
        if (amplitude == 0.0) continue;
        for (int j = 0; j < grid.n; ++j)
            out[j] += amplitude * std::sin(k * std::numbers::pi * grid.x(j));
    }
    return out;
}

/// One spatial mode of a problem with at most one term per kernel: the
/// Laplacian acts as the scalar lambda and the evolution reduces to a linear
/// constant-coefficient system of dimension <= 3.
struct ModalProblem {
    int mode = 1;
    double lambda = 0.0;
    double u0 = 0.0;
    KernelPair kernels;
};

inline ModalProblem make_modal_problem(const Grid1D& grid, int mode, double u0_coefficient,
                                       const KernelPair& kernels) {
    if (kernels.flux.size() > 1 || kernels.capacity.size() > 1)
        throw std::invalid_argument("make_modal_problem: kernels must have at most one term each");
    return {mode, laplacian_eigenvalue(grid, mode), u0_coefficient, kernels};
}

namespace detail {

/// Matrix exponential of a small dense matrix by scaling and squaring with a
/// Taylor expansion; adequate for the <= 3x3 modal systems handled here.
inline Eigen::MatrixXd small_expm(const Eigen::MatrixXd& matrix) {
    const double scale = matrix.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    Eigen::MatrixXd scaled = matrix;
    if (scale > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(scale / 0.5)));
        scaled /= std::pow(2.0, squarings);
    }
    const auto dim = matrix.rows();
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(dim, dim);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(dim, dim);
    for (int k = 1; k <= 24; ++k) {
        term = (term * scaled / static_cast<double>(k)).eval();
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = (result * result).eval();
    return result;
}

}  // namespace detail

/// Evolution operator for one modal system. Eigendecomposition of the system
/// matrix gives the closed form; near-defective spectra fall back to a
/// scaling-and-squaring matrix exponential.
class ModalPropagator {
public:
    explicit ModalPropagator(const ModalProblem& problem) {
        const auto& flux = problem.kernels.flux.terms();
        const auto& capacity = problem.kernels.capacity.terms();
        if (flux.size() > 1 || capacity.size() > 1)
            throw std::invalid_argument("ModalPropagator: kernels must have at most one term each");
        const bool has_flux = !flux.empty();
        const bool has_capacity = !capacity.empty();
        const double lambda = problem.lambda;
        const double alpha = has_flux ? flux[0].weight : 0.0;
        const double mu = has_flux ? flux[0].rate : 0.0;
        const double beta = has_capacity ? capacity[0].weight : 0.0;
        const double nu = has_capacity ? capacity[0].rate : 0.0;

        const int dim = 1 + (has_flux ? 1 : 0) + (has_capacity ? 1 : 0);
        const int iv = 1;
        const int iw = has_flux ? 2 : 1;
        matrix_ = Eigen::MatrixXd::Zero(dim, dim);
        matrix_(0, 0) = -(beta + lambda);
        if (has_flux) {
            matrix_(0, iv) = -alpha * lambda;
            matrix_(iv, 0) = 1.0;
            matrix_(iv, iv) = -mu;
        }
        if (has_capacity) {
            matrix_(0, iw) = beta * nu;
            matrix_(iw, 0) = 1.0;
            matrix_(iw, iw) = -nu;
        }
        initial_ = Eigen::VectorXd::Zero(dim);
        initial_(0) = problem.u0;

        Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix_);
        eigenvalues_ = solver.eigenvalues();
        double min_gap = std::numeric_limits<double>::infinity();
        double magnitude = 0.0;
        for (int i = 0; i < dim; ++i) {
            magnitude = std::max(magnitude, std::abs(eigenvalues_(i)));
            for (int j = i + 1; j < dim; ++j)
                min_gap = std::min(min_gap, std::abs(eigenvalues_(i) - eigenvalues_(j)));
        }
        // QR iteration splits a genuinely repeated eigenvalue by about
        // sqrt(eps) * |M|, so the near-defect test must sit well above that.
        use_expm_ = dim > 1 && min_gap < 1e-6 * std::max(magnitude, 1e-300);
        if (!use_expm_) {
            const Eigen::MatrixXcd vectors = solver.eigenvectors();
            weighted_ = vectors.row(0).transpose().cwiseProduct(
                vectors.partialPivLu().solve(initial_.cast<std::complex<double>>()));
        }
    }

    double operator()(double t) const {
        if (use_expm_) return (detail::small_expm(matrix_ * t) * initial_)(0);
        std::complex<double> value = 0.0;
        for (int i = 0; i < eigenvalues_.size(); ++i)
            value += weighted_(i) * std::exp(eigenvalues_(i) * t);
        return value.real();
    }

    bool used_matrix_exponential() const { return use_expm_; }
    const Eigen::MatrixXd& system_matrix() const { return matrix_; }

private:
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd initial_;
    Eigen::VectorXcd eigenvalues_;
    Eigen::VectorXcd weighted_;
    bool use_expm_ = false;
};

/// Modal value u_k(t) for a zero-source problem, exact up to roundoff.
inline double modal_solve(const ModalProblem& problem, double t) {
    return ModalPropagator(problem)(t);
}

/// Direct history-quadrature solver for the Volterra form of the problem:
/// fully implicit differencing with left-rectangle product quadrature over
/// all stored past levels. No auxiliary variables; cost grows quadratically
/// with the step count. Its value is independence from the localized scheme,
/// not accuracy.
inline Trajectory volterra_solve(const ProblemSpec& problem, double tau) {
    const int steps = step_count(problem.horizon, tau);
    if (steps > 1000000) throw std::invalid_argument("volterra_solve: refusing more than 1e6 steps");
    const int n = problem.grid.n;
    const TridiagonalOperator laplacian = assemble_laplacian(problem.grid);

    std::vector<double> sub(n - 1), diag(n), sup(n - 1);
    for (int i = 0; i < n; ++i) diag[i] = 1.0 + tau * laplacian.diag()[i];
    for (int i = 0; i < n - 1; ++i) {
        sub[i] = tau * laplacian.sub()[i];
        sup[i] = tau * laplacian.super()[i];
    }
    const TridiagonalFactorization factorization(
        TridiagonalOperator(std::move(sub), std::move(diag), std::move(sup)));

    const bool has_flux = !problem.kernels.flux.empty();
    const bool has_capacity = !problem.kernels.capacity.empty();
    // Kernel lag tables: value at lag j*tau, and the backward difference used
    // for the discrete time derivative of the capacity history term.
    std::vector<double> flux_lag(steps + 1, 0.0), capacity_diff(steps + 1, 0.0), capacity_lag(steps + 2, 0.0);
    for (int j = 0; j <= steps; ++j) {
        if (has_flux) flux_lag[j] = problem.kernels.flux.eval(j * tau);
        if (has_capacity) capacity_lag[j] = problem.kernels.capacity.eval(j * tau);
    }
    if (has_capacity) {
        capacity_lag[steps + 1] = problem.kernels.capacity.eval((steps + 1) * tau);
        for (int j = 0; j <= steps; ++j) capacity_diff[j] = capacity_lag[j + 1] - capacity_lag[j];
    }

    if (static_cast<int>(problem.u0.size()) != n)
        throw std::invalid_argument("volterra_solve: u0 length does not match grid");
    Trajectory trajectory;
    trajectory.states.reserve(steps + 1);
    State first;
    first.t = 0.0;
    first.u = problem.u0;
    trajectory.states.push_back(std::move(first));

    std::vector<std::vector<double>> lap_history;
    if (has_flux) lap_history.push_back(laplacian.apply(trajectory.states[0].u));

    std::vector<double> rhs(n);
    for (int s = 0; s < steps; ++s) {
        const double t_next = (s + 1) * tau;
        const std::vector<double> phi = sample_source(problem, t_next);
        for (int k = 0; k < n; ++k) rhs[k] = trajectory.states[s].u[k] + tau * phi[k];
        if (has_flux) {
            // tau * I_flux^{s+1} with I_flux^{s+1} = tau * sum_{k<=s} flux((s+1-k)tau) A u^k
            for (int k = 0; k <= s; ++k) {
                const double coeff = tau * tau * flux_lag[s + 1 - k];
                const auto& lap_u = lap_history[k];
                for (int idx = 0; idx < n; ++idx) rhs[idx] -= coeff * lap_u[idx];
            }
        }
        if (has_capacity) {
            // I_b^{s+1} - I_b^s = tau * (cap(tau) u^s + sum_{k<s} [cap((s+1-k)tau)-cap((s-k)tau)] u^k)
            for (int k = 0; k < s; ++k) {
                const double coeff = tau * capacity_diff[s - k];
                const auto& u_k = trajectory.states[k].u;
                for (int idx = 0; idx < n; ++idx) rhs[idx] -= coeff * u_k[idx];
            }
            const double coeff = tau * capacity_lag[1];
            const auto& u_s = trajectory.states[s].u;
            for (int idx = 0; idx < n; ++idx) rhs[idx] -= coeff * u_s[idx];
        }
        State next;
        next.t = t_next;
        next.u = factorization.solve(rhs);
        if (has_flux) lap_history.push_back(laplacian.apply(next.u));
        trajectory.states.push_back(std::move(next));
    }
    return trajectory;
}

/// Superposition of modal solutions over the first `modes` sine modes of u0,
/// evaluated at the given times. Requires at most one term per kernel and a
/// zero source.
inline Trajectory modal_superposition(const ProblemSpec& problem, std::span<const double> times,
                                      int modes) {
    if (problem.kernels.flux.size() > 1 || problem.kernels.capacity.size() > 1)
        throw std::invalid_argument("modal_superposition: kernels must have at most one term each");
    const int n = problem.grid.n;
    const std::vector<double> coeff = sine_coefficients(problem.u0, problem.grid);
    const int used = std::min(modes, n);
    if (used < 1) throw std::invalid_argument("modal_superposition: need at least one mode");

    std::vector<ModalPropagator> propagators;
    propagators.reserve(used);
    for (int k = 1; k <= used; ++k)
        propagators.emplace_back(make_modal_problem(problem.grid, k, coeff[k - 1], problem.kernels));

    Trajectory trajectory;
    trajectory.states.reserve(times.size());
    for (const double t : times) {
        State state;
        state.t = t;
        state.u.assign(n, 0.0);
        trajectory.states.push_back(std::move(state));
    }
    // Mode-outer accumulation: each mode's sine row is evaluated once and
    // reused across all requested times.
    std::vector<double> row(n);
    for (int k = 1; k <= used; ++k) {
        for (int j = 0; j < n; ++j) row[j] = std::sin(k * std::numbers::pi * problem.grid.x(j));
        for (std::size_t s = 0; s < times.size(); ++s) {
            const double amplitude = propagators[k - 1](times[s]);
            if (amplitude == 0.0) continue;
            std::vector<double>& u = trajectory.states[s].u;
            for (int j = 0; j < n; ++j) u[j] += amplitude * row[j];
        }
    }
    return trajectory;
}

struct ModalCompareReport {
    std::vector<double> times;
    std::vector<Discrepancy> at_time;
    Discrepancy overall;
    int modes_used = 0;
    bool truncation_warning = false;
};

/// Run the two-level scheme and compare it against the modal superposition at
/// every time level. Warns when a dropped mode (beyond the first K) carries a
/// coefficient above 1e-12 relative to the largest one.
inline ModalCompareReport modal_compare(const ProblemSpec& problem, const SchemeConfig& config,
                                        int modes) {
    if (problem.source) throw std::invalid_argument("modal_compare: requires a zero source");
    const Trajectory computed = run(problem, config);

    ModalCompareReport report;
    report.modes_used = std::min(modes, problem.grid.n);
    const std::vector<double> coeff = sine_coefficients(problem.u0, problem.grid);
    double coeff_scale = 0.0;
    for (double c : coeff) coeff_scale = std::max(coeff_scale, std::abs(c));
    for (int k = report.modes_used + 1; k <= problem.grid.n; ++k)
        if (coeff_scale > 0.0 && std::abs(coeff[k - 1]) > 1e-12 * coeff_scale)
            report.truncation_warning = true;

    std::vector<double> times;
    times.reserve(computed.size());
    for (const auto& state : computed.states) times.push_back(state.t);
    const Trajectory reference = modal_superposition(problem, times, report.modes_used);

    report.times = times;
    report.at_time.reserve(times.size());
    for (std::size_t s = 0; s < times.size(); ++s) {
        const Discrepancy step =
            state_discrepancy(computed.states[s], reference.states[s], problem.grid);
        report.at_time.push_back(step);
        report.overall.max_abs = std::max(report.overall.max_abs, step.max_abs);
        report.overall.weighted_l2 = std::max(report.overall.weighted_l2, step.weighted_l2);
    }
    return report;
}

/// One step of the weighted scheme computed from its defining equations: the
/// unfactored block system over (u, v_1..v_m, w_1..w_l) assembled densely and
/// solved by LU. Reference implementation for scheme-vs-definition checks.
inline State advance_dense(const State& state, const ProblemSpec& problem,
                           const SchemeConfig& config) {
    validate_scheme(config);
    const int n = problem.grid.n;
    const auto& flux = problem.kernels.flux.terms();
    const auto& capacity = problem.kernels.capacity.terms();
    const auto m = static_cast<int>(flux.size());
    const auto l = static_cast<int>(capacity.size());
    if (static_cast<int>(state.u.size()) != n || static_cast<int>(state.v.size()) != m ||
        static_cast<int>(state.w.size()) != l)
        throw std::invalid_argument("advance_dense: state inconsistent with problem dimensions");
    const double sigma = config.sigma;
    const double tau = config.tau;
    const TridiagonalOperator laplacian = assemble_laplacian(problem.grid);

    const int dim = (1 + m + l) * n;
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    const auto u_index = [n](int k) { return k; };
    const auto v_index = [n](int i, int k) { return (1 + i) * n + k; };
    const auto w_index = [n, m](int j, int k) { return (1 + m + j) * n + k; };

    double sum_beta = 0.0;
    for (const auto& term : capacity) sum_beta += term.weight;
    const auto lap_entry = [&laplacian, n](int r, int c) -> double {
        if (r == c) return laplacian.diag()[r];
        if (c == r - 1) return laplacian.sub()[c];
        if (c == r + 1) return laplacian.super()[r];
        return 0.0;
    };

    const std::vector<double> lap_u = laplacian.apply(state.u);
    const std::vector<double> phi = sample_source(problem, state.t + sigma * tau);
    for (int r = 0; r < n; ++r) {
        block(u_index(r), u_index(r)) += 1.0 + sigma * tau * sum_beta;
        for (int c = std::max(0, r - 1); c <= std::min(n - 1, r + 1); ++c)
            block(u_index(r), u_index(c)) += sigma * tau * lap_entry(r, c);
        for (int i = 0; i < m; ++i)
            for (int c = std::max(0, r - 1); c <= std::min(n - 1, r + 1); ++c)
                block(u_index(r), v_index(i, c)) += sigma * tau * flux[i].weight * lap_entry(r, c);
        for (int j = 0; j < l; ++j)
            block(u_index(r), w_index(j, r)) -= sigma * tau * capacity[j].weight * capacity[j].rate;

        double value = state.u[r] + tau * phi[r] -
                       (1.0 - sigma) * tau * (sum_beta * state.u[r] + lap_u[r]);
        rhs(u_index(r)) = value;
    }
    for (int i = 0; i < m; ++i) {
        const std::vector<double> lap_v = laplacian.apply(state.v[i]);
        for (int r = 0; r < n; ++r)
            rhs(u_index(r)) -= (1.0 - sigma) * tau * flux[i].weight * lap_v[r];
    }
    for (int j = 0; j < l; ++j)
        for (int r = 0; r < n; ++r)
            rhs(u_index(r)) += (1.0 - sigma) * tau * capacity[j].weight * capacity[j].rate * state.w[j][r];

    for (int i = 0; i < m; ++i)
        for (int r = 0; r < n; ++r) {
            block(v_index(i, r), u_index(r)) = -sigma * tau;
            block(v_index(i, r), v_index(i, r)) = 1.0 + sigma * tau * flux[i].rate;
            rhs(v_index(i, r)) =
                state.v[i][r] + (1.0 - sigma) * tau * (state.u[r] - flux[i].rate * state.v[i][r]);
        }
    for (int j = 0; j < l; ++j)
        for (int r = 0; r < n; ++r) {
            block(w_index(j, r), u_index(r)) = -sigma * tau;
            block(w_index(j, r), w_index(j, r)) = 1.0 + sigma * tau * capacity[j].rate;
            rhs(w_index(j, r)) =
                state.w[j][r] + (1.0 - sigma) * tau * (state.u[r] - capacity[j].rate * state.w[j][r]);
        }

    const Eigen::VectorXd solution = block.partialPivLu().solve(rhs);
    State next;
    next.t = state.t + tau;
    next.u.resize(n);
    next.v.assign(m, std::vector<double>(n));
    next.w.assign(l, std::vector<double>(n));
    for (int k = 0; k < n; ++k) next.u[k] = solution(u_index(k));
    for (int i = 0; i < m; ++i)
        for (int k = 0; k < n; ++k) next.v[i][k] = solution(v_index(i, k));
    for (int j = 0; j < l; ++j)
        for (int k = 0; k < n; ++k) next.w[j][k] = solution(w_index(j, k));
    return next;
}

/// Whole-trajectory version of advance_dense with the block matrix factored
/// once. Guarded to small grids.
inline Trajectory run_dense(const ProblemSpec& problem, const SchemeConfig& config) {
    if (problem.grid.n > 64) throw std::invalid_argument("run_dense: grid too large (n must be <= 64)");
    const int steps = step_count(problem.horizon, config.tau);
    Trajectory trajectory;
    trajectory.states.reserve(steps + 1);
    trajectory.states.push_back(initialize(problem));
    for (int s = 0; s < steps; ++s)
        trajectory.states.push_back(advance_dense(trajectory.states.back(), problem, config));
    return trajectory;
}

}  // namespace heatmem::oracles
