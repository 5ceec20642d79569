#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "heatmem/kernels.hpp"

namespace heatmem {

struct FitOptions {
    /// Return the zero kernel instead of throwing when every sample value is zero.
    bool zero_on_degenerate = false;
    /// Relative imaginary part above which a characteristic root counts as complex.
    double imag_tol = 1e-9;
};

/// Fit an exponential sum with `term_count` terms to uniformly spaced samples
/// by Prony's method: linear prediction for the characteristic polynomial,
/// companion-matrix rooting, then linear least squares for the weights.
/// Terms with complex roots or nonpositive weights/rates are never projected
/// onto the feasible set; such fits fail with FitError.
inline ExpSumKernel fit_exp_sum(std::span<const KernelSample> samples, int term_count,
                                const FitOptions& options = {}) {
    const int m = term_count;
    const auto n = static_cast<Eigen::Index>(samples.size());
    if (m < 1) throw std::invalid_argument("fit_exp_sum: term count must be >= 1");
    if (n < 2 * m) throw std::invalid_argument("fit_exp_sum: need at least 2*m samples");

    const double t0 = samples[0].t;
    const double dt = (samples[samples.size() - 1].t - t0) / static_cast<double>(n - 1);
    if (!(dt > 0.0)) throw std::invalid_argument("fit_exp_sum: sample times must be increasing");
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double step = samples[k].t - samples[k - 1].t;
        if (std::abs(step - dt) > 1e-9 * dt)
            throw std::invalid_argument("fit_exp_sum: sample times must be uniformly spaced");
    }

    double scale = 0.0;
    for (const auto& s : samples) scale = std::max(scale, std::abs(s.value));
    if (scale == 0.0) {
        if (options.zero_on_degenerate) return ExpSumKernel{};
        throw FitError("fit_exp_sum: all samples are zero");
    }

    // Linear prediction y[k+m] = sum_j p_j y[k+m-j].
    Eigen::MatrixXd hankel(n - m, m);
    Eigen::VectorXd target(n - m);
    for (Eigen::Index r = 0; r < n - m; ++r) {
        for (Eigen::Index j = 0; j < m; ++j) hankel(r, j) = samples[r + m - 1 - j].value;
        target(r) = samples[r + m].value;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hankel);
    if (qr.rank() < m) throw FitError("fit_exp_sum: ill-conditioned sample set (rank-deficient prediction system)");
    const Eigen::VectorXd pred = qr.solve(target);

    // Roots of z^m - p_1 z^{m-1} - ... - p_m via the companion matrix.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    companion.row(0) = pred.transpose();
    for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();

    std::vector<double> decay(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::complex<double> z = roots(i);
        if (std::abs(z.imag()) > options.imag_tol * std::max(1.0, std::abs(z)))
            throw FitError("fit_exp_sum: complex characteristic root");
        if (!(z.real() > 0.0)) throw FitError("fit_exp_sum: nonpositive characteristic root");
        if (z.real() >= 1.0) throw FitError("fit_exp_sum: root >= 1 implies nonpositive rate");
        decay[i] = z.real();
    }
    std::sort(decay.begin(), decay.end());
    for (int i = 1; i < m; ++i)
        if (decay[i] - decay[i - 1] <= 1e-12 * decay[i])
            throw FitError("fit_exp_sum: ill-conditioned sample set (coincident roots)");

    // Amplitudes from the Vandermonde least-squares problem y_k = sum_i a_i z_i^k.
    Eigen::MatrixXd vander(n, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double power = 1.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            vander(k, i) = power;
            power *= decay[i];
        }
    }
    Eigen::VectorXd values(n);
    for (Eigen::Index k = 0; k < n; ++k) values(k) = samples[k].value;
    const Eigen::VectorXd amplitude = vander.colPivHouseholderQr().solve(values);

    std::vector<ExpSumTerm> terms(m);
    for (int i = 0; i < m; ++i) {
        const double rate = -std::log(decay[i]) / dt;
        const double weight = amplitude(i) * std::exp(rate * t0);
        if (!(weight > 0.0)) throw FitError("fit_exp_sum: nonpositive weight");
        terms[i] = {weight, rate};
    }
    std::sort(terms.begin(), terms.end(),
              [](const ExpSumTerm& a, const ExpSumTerm& b) { return a.rate < b.rate; });
    return ExpSumKernel(std::move(terms));
}

}  // namespace heatmem
