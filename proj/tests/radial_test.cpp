#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "bnls/radial.hpp"

namespace {

using bnls::ComplexField;
using bnls::RadialGrid;
using bnls::StencilOrder;
using cd = std::complex<double>;

// Independent quadrature of the two Hamiltonian terms for f = exp(-rho^2).
struct GaussianOracle {
    int dim;
    double sigma;

    double power() const {
        boost::math::quadrature::exp_sinh<double> q;
        return q.integrate([&](double r) { return std::exp(-2 * r * r) * std::pow(r, dim - 1); });
    }
    double hamiltonian() const {
        boost::math::quadrature::exp_sinh<double> q;
        auto lap = [&](double r) { return (4 * r * r - 2 - 2.0 * (dim - 1)) * std::exp(-r * r); };
        const double grad = q.integrate([&](double r) { return lap(r) * lap(r) * std::pow(r, dim - 1); });
        const double pot = q.integrate(
            [&](double r) { return std::exp(-(2 * sigma + 2) * r * r) * std::pow(r, dim - 1); });
        return grad - pot / (sigma + 1);
    }
};

ComplexField gaussian(const RadialGrid& g) {
    return ComplexField::sample(g, [](double r) { return cd{std::exp(-r * r)}; });
}

TEST(RadialGrid, HalfIntegerNodes) {
    const auto g = bnls::make_grid(4, 1.0, 1);
    const double expect[4] = {0.125, 0.375, 0.625, 0.875};
    for (int n = 0; n < 4; ++n) EXPECT_DOUBLE_EQ(g.node(n), expect[n]);
}

TEST(RadialGrid, SpacingAndFirstNode) {
    const auto g = bnls::make_grid(8, 2.0, 2);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.25);
    EXPECT_DOUBLE_EQ(g.node(0), 0.125);
    EXPECT_LT(g.node(7), g.r_max());
}

TEST(RadialGrid, RejectsDegenerateInput) {
    EXPECT_THROW(bnls::make_grid(0, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(bnls::make_grid(16, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(bnls::make_grid(16, -2.0, 1), std::invalid_argument);
    EXPECT_THROW(bnls::make_grid(16, 1.0, 0), std::invalid_argument);
}

class BilaplacianTest : public ::testing::TestWithParam<StencilOrder> {};

TEST_P(BilaplacianTest, QuarticGivesTwentyFourInOneDimension) {
    const auto g = bnls::make_grid(64, 4.0, 1);
    const auto f = ComplexField::sample(g, [](double r) { return cd{std::pow(r, 4)}; });
    const auto b = bnls::radial_bilaplacian(f, GetParam());
    const int k = bnls::stencil_half_width(GetParam());
    for (int n = 0; n < g.size() - k; ++n) EXPECT_NEAR(b[n].real(), 24.0, 1e-7) << "node " << n;
}

TEST_P(BilaplacianTest, AnnihilatesConstants) {
    for (int d = 1; d <= 4; ++d) {
        const auto g = bnls::make_grid(40, 3.0, d);
        const auto f = ComplexField::sample(g, [](double) { return cd{2.5, -1.0}; });
        const auto b = bnls::radial_bilaplacian(f, GetParam());
        for (int n = 0; n < g.size(); ++n) EXPECT_NEAR(std::abs(b[n]), 0.0, 1e-8) << "d=" << d;
    }
}

TEST_P(BilaplacianTest, AnnihilatesRhoSquaredInThreeDimensions) {
    const auto g = bnls::make_grid(40, 3.0, 3);
    const auto f = ComplexField::sample(g, [](double r) { return cd{r * r}; });
    const auto b = bnls::radial_bilaplacian(f, GetParam());
    const int k = bnls::stencil_half_width(GetParam());
    for (int n = 0; n < g.size() - k; ++n) EXPECT_NEAR(std::abs(b[n]), 0.0, 1e-7) << "node " << n;
}

TEST_P(BilaplacianTest, RejectsGridSmallerThanStencil) {
    const auto g = bnls::make_grid(4, 1.0, 1);
    EXPECT_THROW(bnls::radial_bilaplacian(ComplexField(g), GetParam()), std::invalid_argument);
}

INSTANTIATE_TEST_SUITE_P(Orders, BilaplacianTest, ::testing::Values(StencilOrder::kSecond, StencilOrder::kFourth));

TEST(Bilaplacian, FourthOrderConvergesOnSmoothFunction) {
    // d = 2, f = exp(-r^2): Delta^2 f = (16 r^4 - 64 r^2 + 32) exp(-r^2).
    auto err = [](int n) {
        const auto g = bnls::make_grid(n, 6.0, 2);
        const auto b = bnls::radial_bilaplacian(gaussian(g), StencilOrder::kFourth);
        double e = 0.0;
        for (int i = 0; i < n / 2; ++i) {
            const double r = g.node(i);
            e = std::max(e, std::abs(b[i].real() - (16 * std::pow(r, 4) - 64 * r * r + 32) * std::exp(-r * r)));
        }
        return e;
    };
    const double order = std::log2(err(200) / err(400));
    EXPECT_GT(order, 3.8);
}

TEST(Functionals, ZeroField) {
    const auto g = bnls::make_grid(32, 4.0, 2);
    const auto f = bnls::functionals(ComplexField(g), 3.0);
    EXPECT_EQ(f.power, 0.0);
    EXPECT_EQ(f.hamiltonian, 0.0);
    EXPECT_EQ(f.sup_norm, 0.0);
}

TEST(Functionals, GaussianPowerMatchesQuadrature) {
    const auto g = bnls::make_grid(4000, 8.0, 1);
    const auto f = bnls::functionals(gaussian(g), 6.0);
    const double oracle = GaussianOracle{1, 6.0}.power();
    EXPECT_NEAR(oracle, std::sqrt(2 * std::numbers::pi) / 4, 1e-12);
    EXPECT_NEAR(f.power, oracle, 1e-6);
    EXPECT_NEAR(f.lp_norms.at(2.0) * f.lp_norms.at(2.0), f.power, 1e-14);
}

TEST(Functionals, GaussianHamiltonianMatchesQuadrature) {
    const auto g = bnls::make_grid(4000, 8.0, 1);
    const auto f = bnls::functionals(gaussian(g), 6.0);
    const double oracle = GaussianOracle{1, 6.0}.hamiltonian();
    EXPECT_NEAR(f.hamiltonian, oracle, 1e-5 * std::abs(oracle));
}

TEST(Functionals, SecondOrderConvergenceInTwoDimensions) {
    const double oracle = GaussianOracle{2, 3.0}.hamiltonian();
    auto err = [&](int n) {
        return std::abs(bnls::functionals(gaussian(bnls::make_grid(n, 8.0, 2)), 3.0).hamiltonian - oracle);
    };
    const double order = std::log2(err(400) / err(800));
    EXPECT_GE(order, 1.9);
}

TEST(Functionals, PowerIsPhaseInvariant) {
    const auto g = bnls::make_grid(500, 6.0, 2);
    auto f = gaussian(g);
    const double p0 = bnls::functionals(f, 3.0).power;
    for (auto& v : f.values()) v *= std::polar(1.0, 0.7);
    EXPECT_LT(std::abs(bnls::functionals(f, 3.0).power - p0) / p0, 1e-13);
}

TEST(Interpolate, ReproducesCubicOnFinerGrid) {
    const auto coarse = bnls::make_grid(20, 2.0, 1);
    const auto fine = bnls::make_grid(40, 2.0, 1);
    const auto f = ComplexField::sample(coarse, [](double r) { return cd{r * r * r, -r}; });
    const auto out = bnls::interpolate(f, fine);
    for (int n = 0; n < fine.size(); ++n) {
        const double r = fine.node(n);
        EXPECT_NEAR(std::abs(out[n] - cd{r * r * r, -r}), 0.0, 1e-12);
    }
}

TEST(Interpolate, ConstantStaysConstant) {
    const auto src = bnls::make_grid(16, 1.0, 2);
    const auto dst = bnls::make_grid(33, 0.9, 2);
    const auto out = bnls::interpolate(ComplexField::sample(src, [](double) { return cd{1.0}; }), dst);
    for (int n = 0; n < dst.size(); ++n) EXPECT_NEAR(std::abs(out[n] - 1.0), 0.0, 1e-14);
}

TEST(Interpolate, FifthOrderErrorDecay) {
    auto err = [](int n) {
        const auto src = bnls::make_grid(n, 4.0, 1);
        const auto dst = bnls::make_grid(3 * n, 3.9, 1);
        const auto out = bnls::interpolate(gaussian(src), dst);
        double e = 0.0;
        for (int i = 0; i < dst.size(); ++i) e = std::max(e, std::abs(out[i] - std::exp(-dst.node(i) * dst.node(i))));
        return e;
    };
    const double ratio = err(100) / err(200);
    EXPECT_GT(ratio, 0.6 * 32.0);
}

TEST(Interpolate, RejectsExtrapolationAndDimensionMismatch) {
    const auto src = bnls::make_grid(16, 1.0, 1);
    EXPECT_THROW(bnls::interpolate(ComplexField(src), bnls::make_grid(16, 1.5, 1)), std::invalid_argument);
    EXPECT_THROW(bnls::interpolate(ComplexField(src), bnls::make_grid(16, 1.0, 2)), std::invalid_argument);
}

TEST(ValueAtOrigin, ExactForEvenQuadratic) {
    auto f = [](double r) { return cd{1.5 - 0.3 * r * r, 0.2 * r * r}; };
    EXPECT_NEAR(std::abs(bnls::value_at_origin(0.05, f(0.05), 0.15, f(0.15)) - cd{1.5, 0.0}), 0.0, 1e-14);
}

}  // namespace
