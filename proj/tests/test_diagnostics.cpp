#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "heatmem/diagnostics.hpp"
#include "heatmem/memory_system.hpp"
#include "support/support.hpp"

using heatmem::audit;
using heatmem::AuditReport;
using heatmem::Discrepancy;
using heatmem::discrepancy;
using heatmem::energy_norm;
using heatmem::ExpSumKernel;
using heatmem::Grid1D;
using heatmem::KernelPair;
using heatmem::ProblemSpec;
using heatmem::run;
using heatmem::SchemeConfig;
using heatmem::stability_bound;
using heatmem::State;
using heatmem::state_discrepancy;
using heatmem::Trajectory;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("energy norm reduces to the plain norm without auxiliaries", "[diagnostics]") {
    const Grid1D grid(4);
    const auto laplacian = heatmem::assemble_laplacian(grid);
    State state;
    state.u = {1.0, -2.0, 0.5, 3.0};
    CHECK_THAT(energy_norm(state, {}, laplacian, grid),
               WithinRel(heatmem::norm(state.u, grid), 1e-15));

    State zero;
    zero.u = std::vector<double>(4, 0.0);
    CHECK(energy_norm(zero, {}, laplacian, grid) == 0.0);
}

TEST_CASE("energy norm matches a hand-computed composite value", "[diagnostics]") {
    // n=1, h=1/2, A=[8]; u=(2), v=((1)), w=((1)); flux weight 3, capacity
    // weight 2 with rate 4:
    //   energy^2 = 0.5*4 + 3*(0.5*8) + 2*4*0.5 = 2 + 12 + 4 = 18.
    const Grid1D grid(1);
    const auto laplacian = heatmem::assemble_laplacian(grid);
    const KernelPair kernels{ExpSumKernel({{3.0, 1.7}}), ExpSumKernel({{2.0, 4.0}})};
    State state;
    state.u = {2.0};
    state.v = {{1.0}};
    state.w = {{1.0}};
    CHECK_THAT(energy_norm(state, kernels, laplacian, grid), WithinRel(std::sqrt(18.0), 1e-14));
}

TEST_CASE("energy norm validates state shape", "[diagnostics]") {
    const Grid1D grid(2);
    const auto laplacian = heatmem::assemble_laplacian(grid);
    const KernelPair kernels{ExpSumKernel({{1.0, 1.0}}), {}};
    State state;
    state.u = {1.0, 1.0};  // missing the v vector for the flux term
    CHECK_THROWS_AS(energy_norm(state, kernels, laplacian, grid), std::invalid_argument);
}

TEST_CASE("stability bound accumulates the source history", "[diagnostics]") {
    CHECK(stability_bound(3.0, {}, 1.0, 0.01) == 3.0);

    const std::vector<double> constant(10, 2.5);
    CHECK_THAT(stability_bound(3.0, constant, 0.75, 0.01),
               WithinRel(3.0 + 2.0 * 0.75 * 10.0 * 0.01 * 2.5, 1e-14));

    CHECK(stability_bound(3.0, constant, 0.0, 0.01) == 3.0);
}

TEST_CASE("audit passes and energy decays for source-free implicit runs", "[diagnostics]") {
    std::mt19937 rng(515);
    for (const double sigma : {0.5, 1.0}) {
        testsupport::RandomProblemOptions options;
        options.n = 30;
        options.with_source = false;
        options.sigma_choices = {sigma};
        options.steps = 40;
        auto [problem, config] = testsupport::random_problem(rng, options);
        const Trajectory trajectory = run(problem, config);
        const AuditReport report = audit(trajectory, problem, config);
        CHECK(report.pass);
        CHECK(report.first_violation() == -1);
        REQUIRE(report.steps.size() == trajectory.size());
        for (std::size_t s = 1; s < report.steps.size(); ++s)
            CHECK(report.steps[s].energy <= report.steps[s - 1].energy * (1.0 + 1e-12));
        // With no source the bound is flat at ||u0||.
        for (const auto& row : report.steps)
            CHECK_THAT(row.bound, WithinRel(heatmem::norm(problem.u0, problem.grid), 1e-12));
    }
}

TEST_CASE("audit of the zero problem is all zeros and passes", "[diagnostics]") {
    ProblemSpec problem{Grid1D(8), {}, std::vector<double>(8, 0.0), {}, 0.05};
    const SchemeConfig config{1.0, 0.01};
    const AuditReport report = audit(run(problem, config), problem, config);
    CHECK(report.pass);
    for (const auto& row : report.steps) {
        CHECK(row.energy == 0.0);
        CHECK(row.bound == 0.0);
    }
}

TEST_CASE("audit detects the explicit scheme blowing up", "[diagnostics]") {
    // sigma=0 with tau far above the explicit stability limit: the classical
    // mode amplification factor |1 - tau*lambda_max| > 2 guarantees growth.
    const int n = 20;
    Grid1D grid(n);
    const double s = std::sin(n * std::numbers::pi * grid.h / 2.0);
    const double lambda_max = 4.0 / (grid.h * grid.h) * s * s;
    const double tau = 3.5 / lambda_max;

    std::vector<double> u0(n);
    for (int k = 0; k < n; ++k) u0[k] = (grid.x(k) <= 0.5 + 1e-12) ? grid.x(k) : 0.0;
    ProblemSpec problem{grid, {}, u0, {}, tau * 50};
    const SchemeConfig config{0.0, tau};
    const AuditReport report = audit(run(problem, config), problem, config);
    CHECK_FALSE(report.pass);
    CHECK(report.first_violation() >= 1);
    CHECK(report.first_violation() <= 50);
}

TEST_CASE("discrete energy at fixed time approaches a limit below the initial norm",
          "[diagnostics]") {
    // Source-free refinement study: energy(T) settles as tau shrinks and the
    // limit respects the continuous a priori estimate.
    const int n = 30;
    Grid1D grid(n);
    std::vector<double> u0(n);
    for (int k = 0; k < n; ++k) u0[k] = std::sin(2.0 * std::numbers::pi * grid.x(k));
    const KernelPair kernels{ExpSumKernel({{5.0, 1.0}}), ExpSumKernel({{5.0, 1.0}})};
    const double u0_norm = heatmem::norm(u0, grid);

    std::vector<double> final_energies;
    for (const double tau : {4e-3, 2e-3, 1e-3}) {
        ProblemSpec problem{grid, kernels, u0, {}, 0.1};
        const SchemeConfig config{1.0, tau};
        const Trajectory trajectory = run(problem, config);
        const auto laplacian = heatmem::assemble_laplacian(grid);
        final_energies.push_back(energy_norm(trajectory.back(), kernels, laplacian, grid));
        CHECK(final_energies.back() <= u0_norm * (1.0 + 1e-12));
    }
    const double gap_coarse = std::abs(final_energies[1] - final_energies[0]);
    const double gap_fine = std::abs(final_energies[2] - final_energies[1]);
    CHECK(gap_fine < gap_coarse);
}

TEST_CASE("trajectory discrepancy metrics", "[diagnostics]") {
    const Grid1D grid(3);
    Trajectory a;
    for (int s = 0; s < 3; ++s) {
        State state;
        state.t = 0.1 * s;
        state.u = {1.0, 2.0, 3.0};
        a.states.push_back(state);
    }
    SECTION("identical trajectories have zero discrepancy") {
        const Discrepancy d = discrepancy(a, a, grid);
        CHECK(d.max_abs == 0.0);
        CHECK(d.weighted_l2 == 0.0);
    }
    SECTION("a constant offset at one level sets the max metric") {
        Trajectory b = a;
        for (double& value : b.states[1].u) value += 1.0;
        const Discrepancy d = discrepancy(a, b, grid);
        CHECK(d.max_abs == 1.0);
        CHECK_THAT(d.weighted_l2, WithinRel(std::sqrt(0.25 * 3.0), 1e-14));
    }
    SECTION("mismatched grids and time levels are rejected") {
        Trajectory b = a;
        b.states[2].t += 0.05;
        CHECK_THROWS_AS(discrepancy(a, b, grid), std::invalid_argument);
        Trajectory c = a;
        c.states.pop_back();
        CHECK_THROWS_AS(discrepancy(a, c, grid), std::invalid_argument);

        State narrow;
        narrow.u = {1.0};
        CHECK_THROWS_AS(state_discrepancy(a.states[0], narrow, grid), std::invalid_argument);
    }
}
