#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "bnls/errors.hpp"
#include "bnls/evolution.hpp"
#include "bnls/profile.hpp"

namespace {

using bnls::GradedGrid;
using bnls::GradedGridSpec;
using cd = std::complex<double>;

GradedGridSpec uniform(double h, double r_max, int dim) { return {h, h, 0.025, r_max, dim}; }

std::vector<cd> sample(const GradedGrid& g, auto&& f) {
    std::vector<cd> v(g.size());
    for (int n = 0; n < g.size(); ++n) v[n] = f(g.node(n));
    return v;
}

double sup_diff(std::span<const cd> a, std::span<const cd> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double sup_abs(std::span<const cd> v) {
    double m = 0.0;
    for (cd z : v) m = std::max(m, std::abs(z));
    return m;
}

// Fixed-step evolution on a fixed grid.
std::vector<cd> evolve(const GradedGrid& g, std::vector<cd> psi, double sigma, double t_end, int steps,
                       bool nonlinear = true) {
    bnls::CrankNicolsonStepper stepper(g, sigma, nonlinear);
    const double dt = t_end / steps;
    std::vector<cd> prev;
    for (int k = 0; k < steps; ++k) {
        std::vector<cd> cur = psi;
        stepper.step(psi, dt, prev.empty() ? nullptr : &prev);
        prev = std::move(cur);
    }
    return psi;
}

TEST(GradedGrid, UniformSpecIsCellCentred) {
    const GradedGrid g(uniform(0.5, 10.0, 1));
    ASSERT_EQ(g.size(), 20);
    for (int n = 0; n < g.size(); ++n) EXPECT_NEAR(g.node(n), (n + 0.5) * 0.5, 1e-12);
    EXPECT_NEAR(g.h_min(), 0.5, 1e-15);
}

TEST(GradedGrid, GradedSpacingGrowsFromTheFocus) {
    const GradedGrid g({1e-3, 0.05, 0.025, 10.0, 2});
    EXPECT_LE(g.h_min(), 1e-3);
    EXPECT_NEAR(g.node(0), 0.5 * g.h_min(), 1e-3 * g.h_min());
    for (int n = 1; n < g.size(); ++n) {
        EXPECT_GT(g.node(n), g.node(n - 1));
        if (n > 1) EXPECT_GE(g.node(n) - g.node(n - 1), (g.node(n - 1) - g.node(n - 2)) * (1.0 - 1e-9));
    }
    EXPECT_LT(g.node(g.size() - 1), 10.0);
    EXPECT_GT(g.node(g.size() - 1), 10.0 - 0.05);
    // Weights integrate r dr over [0, 10].
    double total = 0.0;
    for (double w : g.weights()) total += w;
    EXPECT_NEAR(total, 50.0, 1e-3);
}

TEST(GradedGrid, OffCentreFocusIsFinestThere) {
    GradedGridSpec spec{1e-4, 0.02, 0.025, 5.0, 1, 1.5};
    const GradedGrid g(spec);
    double best = 1e9, where = 0.0;
    for (int n = 1; n < g.size(); ++n)
        if (g.node(n) - g.node(n - 1) < best) {
            best = g.node(n) - g.node(n - 1);
            where = g.node(n);
        }
    EXPECT_NEAR(where, 1.5, 1e-3);
    EXPECT_NEAR(best, 1e-4, 2e-6);
    EXPECT_THROW(GradedGrid({1e-3, 0.02, 0.025, 5.0, 1, 6.0}), std::invalid_argument);
    EXPECT_THROW(GradedGrid({1e-3, 0.02, 0.0, 5.0, 1}), std::invalid_argument);
}

class GradedLaplacian : public ::testing::TestWithParam<int> {};

TEST_P(GradedLaplacian, SecondOrderOnAGaussian) {
    const int d = GetParam();
    auto error = [&](double scale) {
        const GradedGrid g({0.02 * scale, 0.1 * scale, 0.1 * scale, 10.0, d});
        const auto f = sample(g, [](double r) { return std::exp(-r * r); });
        const auto lap = bnls::graded_laplacian(g, f);
        double err = 0.0;
        for (int n = 0; n < g.size() && g.node(n) < 5.0; ++n) {
            const double r = g.node(n);
            err = std::max(err, std::abs(lap[n] - (4.0 * r * r - 2.0 * d) * std::exp(-r * r)));
        }
        return err;
    };
    const double e1 = error(1.0), e2 = error(0.5);
    EXPECT_LT(e1, 2e-2);
    EXPECT_GT(std::log2(e1 / e2), 1.9);
}

TEST_P(GradedLaplacian, SelfAdjointInTheWeightedProduct) {
    const GradedGrid g({0.01, 0.1, 0.05, 8.0, GetParam()});
    const auto f = sample(g, [](double r) { return cd(std::exp(-r), std::sin(r)); });
    const auto h = sample(g, [](double r) { return cd(std::cos(r) / (1 + r * r), r * std::exp(-r)); });
    const auto lf = bnls::graded_laplacian(g, f), lh = bnls::graded_laplacian(g, h);
    cd a{}, b{};
    for (int n = 0; n < g.size(); ++n) {
        a += g.weights()[n] * std::conj(f[n]) * lh[n];
        b += g.weights()[n] * std::conj(lf[n]) * h[n];
    }
    EXPECT_LT(std::abs(a - b), 1e-11 * std::abs(a));
}

INSTANTIATE_TEST_SUITE_P(Dims, GradedLaplacian, ::testing::Values(1, 2, 3));

TEST(Potential, PowerAndHamiltonianHelpersAgree) {
    const GradedGrid g(uniform(0.01, 10.0, 1));
    const auto f = sample(g, [](double r) { return cd(std::exp(-r * r)); });
    // P = int_0^inf e^{-2 r^2} dr.
    EXPECT_NEAR(bnls::graded_power(g, f), std::sqrt(std::numbers::pi / 2.0) / 2.0, 1e-10);
    const double h = bnls::graded_hamiltonian(g, f, 1.0);
    EXPECT_NEAR(h, bnls::graded_laplacian_norm2(g, f) - 0.5 * std::sqrt(std::numbers::pi) / 4.0, 1e-10);
}

TEST(Stepper, ZeroStaysZero) {
    const GradedGrid g({0.005, 0.05, 0.025, 10.0, 2});
    std::vector<cd> psi(g.size());
    bnls::CrankNicolsonStepper stepper(g, 3.0);
    for (int k = 0; k < 20; ++k) stepper.step(psi, 1e-3);
    EXPECT_EQ(sup_abs(psi), 0.0);
}

TEST(Stepper, RejectsBadInput) {
    const GradedGrid g(uniform(0.1, 5.0, 1));
    bnls::CrankNicolsonStepper stepper(g, 3.0);
    std::vector<cd> psi(g.size(), 1.0);
    EXPECT_THROW(stepper.step(psi, 0.0), std::invalid_argument);
    std::vector<cd> short_psi(3);
    EXPECT_THROW(stepper.step(short_psi, 1e-3), std::invalid_argument);
    EXPECT_THROW(bnls::CrankNicolsonStepper(g, 0.0), std::invalid_argument);
}

TEST(Stepper, ConservesPowerAndHamiltonian) {
    for (int d : {1, 2}) {
        const GradedGrid g({0.01, 0.05, 0.025, 10.0, d});
        const double sigma = d == 1 ? 6.0 : 3.0;
        auto psi = sample(g, [](double r) { return cd(1.2 * std::exp(-r * r), 0.1 * r * std::exp(-r * r)); });
        const double p0 = bnls::graded_power(g, psi);
        const double h0 = bnls::graded_hamiltonian(g, psi, sigma);
        const double lap0 = bnls::graded_laplacian_norm2(g, psi);
        psi = evolve(g, psi, sigma, 2e-3, 100);
        EXPECT_LT(std::abs(bnls::graded_power(g, psi) - p0) / p0, 1e-12) << "d=" << d;
        EXPECT_LT(std::abs(bnls::graded_hamiltonian(g, psi, sigma) - h0) / lap0, 1e-11) << "d=" << d;
    }
}

// Linear regime against a reference run at h/4 and dt/16.
TEST(Stepper, LinearSelfConvergence) {
    const double h = 0.0125, t_end = 0.01;
    const int steps = 100;
    const GradedGrid coarse(uniform(h, 10.0, 1)), fine(uniform(h / 4, 10.0, 1));
    auto gauss = [](double r) { return cd(std::exp(-r * r)); };
    const auto run = evolve(coarse, sample(coarse, gauss), 1.0, t_end, steps, false);
    const auto ref = evolve(fine, sample(fine, gauss), 1.0, t_end, 16 * steps, false);
    const auto ref_on_coarse = bnls::resample(fine, ref, coarse);
    EXPECT_LT(sup_diff(run, ref_on_coarse) / sup_abs(ref_on_coarse), 1e-4);
}

TEST(Stepper, SecondOrderInTime) {
    const GradedGrid g(uniform(0.025, 20.0, 1));
    const auto psi0 = sample(g, [](double r) { return cd(1.6 * std::exp(-r * r)); });
    const double t_end = 1e-3;
    const auto a = evolve(g, psi0, 6.0, t_end, 20);
    const auto b = evolve(g, psi0, 6.0, t_end, 40);
    const auto c = evolve(g, psi0, 6.0, t_end, 80);
    const double order = std::log2(sup_diff(a, b) / sup_diff(b, c));
    EXPECT_GE(order, 1.9);
}

TEST(Stepper, StandingWaveIsStationary) {
    const auto sw = bnls::solve_standing_wave(bnls::make_grid(4000, 40.0, 1), 6.0, 1.0);
    const GradedGrid g(uniform(0.005, 40.0, 1));
    std::vector<cd> psi(g.size());
    const auto& r0 = sw.s.grid();
    std::vector<double> x = r0.nodes();
    for (int n = 0; n < g.size(); ++n) psi[n] = bnls::sample_quartic(x, sw.s.values(), g.node(n));
    const auto start = psi;
    const double peak = sup_abs(start);

    bnls::CrankNicolsonStepper stepper(g, 6.0);
    const double dt = 1e-3;
    std::vector<double> t, phase;
    double drift = 0.0, unwrapped = std::arg(bnls::origin_value(g, psi)), raw = unwrapped;
    std::vector<cd> prev;
    for (int k = 1; k <= 1000; ++k) {
        std::vector<cd> cur = psi;
        stepper.step(psi, dt, prev.empty() ? nullptr : &prev);
        prev = std::move(cur);
        for (int n = 0; n < g.size(); ++n) drift = std::max(drift, std::abs(std::abs(psi[n]) - std::abs(start[n])));
        const double a = std::arg(bnls::origin_value(g, psi));
        unwrapped += std::remainder(a - raw, 2.0 * std::numbers::pi);
        raw = a;
        t.push_back(k * dt);
        phase.push_back(unwrapped);
    }
    EXPECT_LT(drift / peak, 1e-4);
    double st = 0, sp = 0, stt = 0, stp = 0;
    const double n = static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sp += phase[i];
        stt += t[i] * t[i];
        stp += t[i] * phase[i];
    }
    const double rate = (n * stp - st * sp) / (n * stt - st * st);
    EXPECT_NEAR(rate, 1.0, 1e-3);
}

TEST(Refinement, WideFieldLeavesStateUnchanged) {
    auto state = bnls::make_state(uniform(0.025, 20.0, 1), [](double r) { return cd(std::exp(-r * r)); }, 6.0);
    const auto before = state.psi;
    EXPECT_FALSE(bnls::maybe_refine(state, {}, 6.0).has_value());
    EXPECT_EQ(state.refinement_level, 0);
    EXPECT_EQ(sup_diff(before, state.psi), 0.0);
}

TEST(Refinement, NarrowCoreTriggersAndHalvesSpacing) {
    const double h = 0.025;
    // Half-width (m - 1) h for a Gaussian exp(-a r^2): a = ln 2 / w^2.
    const double w = 31 * h;
    const double a = std::log(2.0) / (w * w);
    auto state = bnls::make_state({h, h, 0.025, 20.0, 1}, [&](double r) { return cd(std::exp(-a * r * r)); }, 6.0);
    EXPECT_NEAR(bnls::core_half_width(state.grid, state.psi), w, 1e-4);
    const auto ev = bnls::maybe_refine(state, {}, 6.0);
    ASSERT_TRUE(ev.has_value());
    EXPECT_TRUE(ev->refined);
    EXPECT_EQ(state.refinement_level, 1);
    EXPECT_NEAR(state.grid.h_min(), h / 2, 1e-3 * h);
    int inside = 0;
    for (double r : state.grid.nodes()) inside += r < w;
    // The mesh grades away from the origin, so the count grows by a bit less than 2x.
    EXPECT_GE(inside, 1.7 * 31);
    EXPECT_LT(std::abs(ev->power_after - ev->power_before) / ev->power_before, 1e-7);
}

TEST(Refinement, QuarticFieldIsTransferredExactly) {
    auto poly = [](double r) { return cd(1.0 - 0.3 * r * r + 0.02 * r * r * r * r, 0.5 - 0.1 * r * r); };
    const GradedGrid from({0.01, 0.05, 0.025, 4.0, 2});
    const GradedGrid to({0.005, 0.05, 0.025, 4.0, 2});
    const auto moved = bnls::resample(from, sample(from, poly), to);
    double err = 0.0;
    for (int n = 0; n < to.size() && to.node(n) < 3.5; ++n) err = std::max(err, std::abs(moved[n] - poly(to.node(n))));
    EXPECT_LT(err, 1e-12);
    EXPECT_THROW(bnls::resample(from, sample(from, poly), GradedGrid({0.005, 0.05, 0.025, 5.0, 2})),
                 std::invalid_argument);
}

TEST(Refinement, CeilingIsReported) {
    auto state = bnls::make_state(uniform(0.025, 20.0, 1), [](double r) { return cd(std::exp(-40 * r * r)); }, 6.0);
    bnls::RefinementPolicy policy;
    policy.max_level = 0;
    EXPECT_THROW(bnls::maybe_refine(state, policy, 6.0), bnls::RefinementCeiling);
}

TEST(Refinement, FocusFollowsAnOffCentrePeak) {
    auto bump = [](double r) { return cd(std::exp(-200.0 * (r - 1.0) * (r - 1.0))); };
    auto state = bnls::make_state({0.02, 0.02, 0.025, 5.0, 1}, bump, 6.0);
    const auto pk = bnls::locate_peak(state.grid, state.psi);
    EXPECT_NEAR(pk.r, 1.0, 1e-3);
    const auto ev = bnls::maybe_refine(state, {}, 6.0);
    ASSERT_TRUE(ev.has_value());
    EXPECT_NEAR(ev->focus, 1.0, 1e-3);
    EXPECT_NEAR(state.grid.spec().focus, 1.0, 1e-3);
    EXPECT_GE(bnls::core_half_width(state.grid, state.psi) / 0.01, 4.0);
}

TEST(Peak, CentredMaximumUsesOriginValue) {
    const GradedGrid g(uniform(0.1, 5.0, 1));
    const auto f = sample(g, [](double r) { return cd(2.0 / (1.0 + r * r)); });
    const auto pk = bnls::locate_peak(g, f);
    EXPECT_EQ(pk.r, 0.0);
    EXPECT_NEAR(pk.value.real(), 2.0, 2e-4);
    EXPECT_NEAR(bnls::focusing_length(g, f, 6.0), std::pow(std::abs(pk.value), -3.0), 1e-15);
}

TEST(Collapse, RejectsInadmissibleUnlessAllowed) {
    bnls::CollapseConfig cfg;
    auto psi0 = [](double r) { return cd(1.6 * std::exp(-r * r)); };
    EXPECT_THROW(bnls::run_collapse(psi0, 3.0, cfg), bnls::AdmissibilityError);
    cfg.allow_inadmissible = true;
    cfg.t_end = 1e-3;
    const auto run = bnls::run_collapse(psi0, 3.0, cfg);
    EXPECT_EQ(run.stop, bnls::StopReason::kTimeLimit);
}

// Subcritical control: the sup norm stays bounded.
TEST(Collapse, SubcriticalRunStaysBounded) {
    bnls::CollapseConfig cfg;
    cfg.allow_inadmissible = true;
    cfg.t_end = 0.5;
    const auto run = bnls::run_collapse([](double r) { return cd(1.6 * std::exp(-r * r)); }, 3.0, cfg);
    EXPECT_EQ(run.stop, bnls::StopReason::kTimeLimit);
    const double sup0 = run.diagnostics.sup_norm.front();
    const double top = *std::max_element(run.diagnostics.sup_norm.begin(), run.diagnostics.sup_norm.end());
    EXPECT_LT(top, 2.0 * sup0);
    EXPECT_TRUE(run.refinements.empty());
    EXPECT_LT(run.power_drift_between_refinements, 1e-10);
}

TEST(Collapse, EarlyFocusingDiagnostics) {
    bnls::CollapseConfig cfg;
    cfg.target_focusing = 100.0;
    cfg.grid = {0.0125, 0.0125, 0.025, 20.0, 1};
    const auto run = bnls::run_collapse([](double r) { return cd(1.6 * std::exp(-r * r)); }, 6.0, cfg);
    ASSERT_EQ(run.stop, bnls::StopReason::kTargetReached);
    const auto& d = run.diagnostics;
    for (std::size_t i = 1; i < d.size(); ++i) {
        ASSERT_GT(d.t[i], d.t[i - 1]);
        ASSERT_LT(std::abs(d.tau[i] - d.tau[i - 1]), std::numbers::pi);
    }
    EXPECT_EQ(run.snapshots.size(), 2u);
    EXPECT_FALSE(run.refinements.empty());
    EXPECT_LT(run.power_drift_between_refinements, 1e-10);
    // Near the end the self-similar rates are close to their limits.
    const double kappa = std::pow(-4.0 * d.l3_lt.back(), 0.25);
    EXPECT_NEAR(kappa, 1.04, 0.03);
    EXPECT_NEAR(d.l4_tau_t.back(), 0.373, 0.02);
    EXPECT_NEAR(d.remaining.front(), d.t.back(), 1e-12);
}

TEST(Diagnostics, DerivativesOfAKnownSeries) {
    bnls::CollapseDiagnostics d;
    // L^4 = 1 - t, tau = 2 t: l3_lt = -1/4, L^4 tau_t = 2 (1 - t).
    double t = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double dt = i == 0 ? 0.0 : 1e-3 * (1.0 + 0.5 * std::sin(i));
        t += dt;
        d.t.push_back(t);
        d.dt.push_back(dt);
        d.focusing.push_back(std::pow(1.0 - t, 0.25));
        d.tau.push_back(2.0 * t);
    }
    d.derive();
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(d.l3_lt[i], -0.25, 1e-10);
        EXPECT_NEAR(d.l4_tau_t[i], 2.0 * (1.0 - d.t[i]), 1e-10);
    }
}

}  // namespace
