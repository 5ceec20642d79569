#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heatmem {

class SolverBreakdown : public std::runtime_error {
public:
    explicit SolverBreakdown(const std::string& what) : std::runtime_error(what) {}
};

/// Uniform grid of interior nodes on [0,1] with homogeneous Dirichlet
/// boundaries. Node i (zero-based) sits at x = (i+1)*h, h = 1/(n+1).
struct Grid1D {
    int n;
    double h;

    explicit Grid1D(int interior_nodes)
        : n(interior_nodes), h(1.0 / (interior_nodes + 1)) {
        if (interior_nodes < 1) throw std::invalid_argument("Grid1D: need at least one interior node");
    }

    double x(int i) const { return (i + 1) * h; }
};

/// Tridiagonal operator on interior-node vectors. Band storage:
/// sub/super have length n-1, diag has length n.
class TridiagonalOperator {
public:
    TridiagonalOperator(std::vector<double> sub, std::vector<double> diag, std::vector<double> super)
        : sub_(std::move(sub)), diag_(std::move(diag)), super_(std::move(super)) {
        if (diag_.empty() || sub_.size() != diag_.size() - 1 || super_.size() != diag_.size() - 1)
            throw std::invalid_argument("TridiagonalOperator: inconsistent band lengths");
    }

    static TridiagonalOperator identity(int n) {
        return {std::vector<double>(n - 1, 0.0), std::vector<double>(n, 1.0),
                std::vector<double>(n - 1, 0.0)};
    }

    int size() const { return static_cast<int>(diag_.size()); }
    const std::vector<double>& sub() const { return sub_; }
    const std::vector<double>& diag() const { return diag_; }
    const std::vector<double>& super() const { return super_; }

    std::vector<double> apply(std::span<const double> y) const {
        const int n = size();
        if (static_cast<int>(y.size()) != n)
            throw std::invalid_argument("TridiagonalOperator::apply: dimension mismatch");
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) {
            double acc = diag_[i] * y[i];
            if (i > 0) acc += sub_[i - 1] * y[i - 1];
            if (i < n - 1) acc += super_[i] * y[i + 1];
            out[i] = acc;
        }
        return out;
    }

private:
    std::vector<double> sub_, diag_, super_;
};

/// Difference Laplacian A y = -(y(x+h) - 2 y(x) + y(x-h)) / h^2 with zero
/// boundary extension; symmetric positive definite.
inline TridiagonalOperator assemble_laplacian(const Grid1D& grid) {
    const double scale = 1.0 / (grid.h * grid.h);
    return {std::vector<double>(grid.n - 1, -scale), std::vector<double>(grid.n, 2.0 * scale),
            std::vector<double>(grid.n - 1, -scale)};
}

/// Thomas elimination without pivoting, factored once for repeated solves.
/// Valid for diagonally dominant or symmetric positive definite systems; a
/// pivot below 1e-14 of the row scale is a hard error.
class TridiagonalFactorization {
public:
    explicit TridiagonalFactorization(const TridiagonalOperator& op)
        : super_(op.super()), pivot_(op.diag().size()), mult_(op.sub().size()) {
        const auto& sub = op.sub();
        const auto& diag = op.diag();
        const int n = op.size();
        double pivot = diag[0];
        check_pivot(pivot, row_scale(op, 0), 0);
        pivot_[0] = pivot;
        for (int i = 1; i < n; ++i) {
            mult_[i - 1] = sub[i - 1] / pivot_[i - 1];
            pivot = diag[i] - mult_[i - 1] * super_[i - 1];
            check_pivot(pivot, row_scale(op, i), i);
            pivot_[i] = pivot;
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        const int n = static_cast<int>(pivot_.size());
        if (static_cast<int>(rhs.size()) != n)
            throw std::invalid_argument("TridiagonalFactorization::solve: dimension mismatch");
        std::vector<double> y(n);
        y[0] = rhs[0];
        for (int i = 1; i < n; ++i) y[i] = rhs[i] - mult_[i - 1] * y[i - 1];
        y[n - 1] /= pivot_[n - 1];
        for (int i = n - 2; i >= 0; --i) y[i] = (y[i] - super_[i] * y[i + 1]) / pivot_[i];
        return y;
    }

    int size() const { return static_cast<int>(pivot_.size()); }

private:
    static double row_scale(const TridiagonalOperator& op, int i) {
        double scale = std::abs(op.diag()[i]);
        if (i > 0) scale += std::abs(op.sub()[i - 1]);
        if (i < op.size() - 1) scale += std::abs(op.super()[i]);
        return scale;
    }

    static void check_pivot(double pivot, double scale, int row) {
        if (std::abs(pivot) < 1e-14 * scale || scale == 0.0)
            throw SolverBreakdown("tridiagonal factorization: vanishing pivot at row " + std::to_string(row));
    }

    std::vector<double> super_, pivot_, mult_;
};

inline std::vector<double> solve_tridiagonal(const TridiagonalOperator& op, std::span<const double> rhs) {
    return TridiagonalFactorization(op).solve(rhs);
}

/// Discrete inner product (y, z) = h * sum_k y_k z_k. The h weight makes the
/// induced norm approximate the continuous L2 norm as h -> 0.
inline double inner(std::span<const double> y, std::span<const double> z, const Grid1D& grid) {
    if (y.size() != z.size() || static_cast<int>(y.size()) != grid.n)
        throw std::invalid_argument("inner: dimension mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) sum += y[k] * z[k];
    return grid.h * sum;
}

inline double norm(std::span<const double> y, const Grid1D& grid) {
    return std::sqrt(inner(y, y, grid));
}

/// Operator norm ||y||_A = (A y, y)^{1/2}.
inline double a_norm(const TridiagonalOperator& op, std::span<const double> y, const Grid1D& grid) {
    return std::sqrt(inner(op.apply(y), y, grid));
}

}  // namespace heatmem
