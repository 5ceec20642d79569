#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heatmem {

/// Thrown when exponential-sum fitting cannot produce a kernel with strictly
/// positive weights and rates (complex/nonpositive roots, rank deficiency).
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

struct ExpSumTerm {
    double weight;
    double rate;
};

/// Relaxation function represented as a finite sum of decaying exponentials,
///   k(t) = sum_i weight_i * exp(-rate_i * t).
/// All weights and rates are strictly positive; the empty term list is the
/// zero kernel. Immutable after construction.
class ExpSumKernel {
public:
    ExpSumKernel() = default;

    explicit ExpSumKernel(std::vector<ExpSumTerm> terms) : terms_(std::move(terms)) {
        for (const auto& term : terms_) {
            if (!(term.weight > 0.0) || !std::isfinite(term.weight))
                throw std::invalid_argument("ExpSumKernel: weight must be positive and finite");
            if (!(term.rate > 0.0) || !std::isfinite(term.rate))
                throw std::invalid_argument("ExpSumKernel: rate must be positive and finite");
        }
    }

    const std::vector<ExpSumTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    double eval(double t) const {
        if (t < 0.0) throw std::invalid_argument("ExpSumKernel::eval: negative time");
        double sum = 0.0;
        for (const auto& term : terms_) sum += term.weight * std::exp(-term.rate * t);
        return sum;
    }

    double weight_sum() const {
        double sum = 0.0;
        for (const auto& term : terms_) sum += term.weight;
        return sum;
    }

private:
    std::vector<ExpSumTerm> terms_;
};

/// Flux and capacity relaxation kernels of one problem. Either may be empty;
/// both empty is the classical heat equation.
struct KernelPair {
    ExpSumKernel flux;
    ExpSumKernel capacity;
};

/// Single-term kernel (k/tau_q) * exp(-t/tau_q) whose induced flux law is the
/// Maxwell-Cattaneo relaxation with conductivity k and relaxation time tau_q.
inline ExpSumKernel maxwell_cattaneo_kernel(double k, double tau_q) {
    if (!(k > 0.0)) throw std::invalid_argument("maxwell_cattaneo_kernel: k must be positive");
    if (!(tau_q > 0.0)) throw std::invalid_argument("maxwell_cattaneo_kernel: tau_q must be positive");
    return ExpSumKernel({{k / tau_q, 1.0 / tau_q}});
}

struct KernelSample {
    double t;
    double value;
};

/// Largest absolute deviation between the kernel and the samples.
inline double fit_residual(const ExpSumKernel& kernel, std::span<const KernelSample> samples) {
    if (samples.empty()) throw std::invalid_argument("fit_residual: empty sample set");
    double worst = 0.0;
    for (const auto& s : samples) worst = std::max(worst, std::abs(kernel.eval(s.t) - s.value));
    return worst;
}

}  // namespace heatmem
