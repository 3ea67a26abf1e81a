#include "bnls/radial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bnls/fd_weights.hpp"

namespace bnls {

namespace {

constexpr int kMinPoints = 4;

double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

}  // namespace

RadialGrid::RadialGrid(int n_points, double r_max, int dim)
    : n_points_(n_points), r_max_(r_max), spacing_(r_max / n_points), dim_(dim) {
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw std::invalid_argument("RadialGrid: r_max must be positive and finite");
    if (n_points < kMinPoints)
        throw std::invalid_argument("RadialGrid: need at least " + std::to_string(kMinPoints) +
                                    " points, got " + std::to_string(n_points));
    if (dim < 1) throw std::invalid_argument("RadialGrid: dimension must be >= 1");
}

std::vector<double> RadialGrid::nodes() const {
    std::vector<double> r(n_points_);
    for (int n = 0; n < n_points_; ++n) r[n] = node(n);
    return r;
}

double RadialGrid::weight(int n) const { return ipow(node(n), dim_ - 1) * spacing_; }

RadialGrid make_grid(int n_points, double r_max, int dim) { return RadialGrid(n_points, r_max, dim); }

ComplexField::ComplexField(RadialGrid grid) : grid_(grid), values_(grid.size()) {}

ComplexField::ComplexField(RadialGrid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.size())
        throw std::invalid_argument("ComplexField: sample count does not match grid");
}

bool ComplexField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

std::vector<double> bilaplacian_row(const RadialGrid& grid, int n, StencilOrder order) {
    const int k = stencil_half_width(order);
    const double h = grid.spacing();
    const double rho = grid.node(n);
    const double dm1 = grid.dim() - 1.0;
    const double dm3 = grid.dim() - 3.0;
    const auto w1 = centered_weights(k, 1);
    const auto w2 = centered_weights(k, 2);
    const auto w3 = centered_weights(k, 3);
    const auto w4 = centered_weights(k, 4);
    const double c4 = 1.0 / ipow(h, 4);
    const double c3 = 2.0 * dm1 / rho / ipow(h, 3);
    const double c2 = dm1 * dm3 / (rho * rho) / (h * h);
    const double c1 = -dm1 * dm3 / (rho * rho * rho) / h;
    std::vector<double> row(2 * k + 1);
    for (int j = 0; j < 2 * k + 1; ++j) row[j] = c4 * w4[j] + c3 * w3[j] + c2 * w2[j] + c1 * w1[j];
    return row;
}

std::vector<double> first_derivative_row(const RadialGrid& grid, StencilOrder order) {
    auto w = centered_weights(stencil_half_width(order), 1);
    for (double& c : w) c /= grid.spacing();
    return w;
}

ComplexField radial_bilaplacian(const ComplexField& f, StencilOrder order) {
    const RadialGrid& grid = f.grid();
    const int k = stencil_half_width(order);
    const int n_pts = grid.size();
    if (n_pts < 2 * k + 1)
        throw std::invalid_argument("radial_bilaplacian: grid smaller than the stencil");
    ComplexField out(grid);
    for (int n = 0; n < n_pts - k; ++n) {
        const auto row = bilaplacian_row(grid, n, order);
        cplx acc = 0.0;
        for (int j = -k; j <= k; ++j) {
            const int m = n + j < 0 ? -(n + j) - 1 : n + j;
            acc += row[j + k] * f[m];
        }
        out[n] = acc;
    }
    return out;
}

std::vector<cplx> radial_laplacian(const ComplexField& f, const cplx* far_ghost) {
    const RadialGrid& grid = f.grid();
    const int n_pts = grid.size();
    const double h = grid.spacing();
    const double dm1 = grid.dim() - 1.0;
    const cplx ghost = far_ghost ? *far_ghost
                                 : 4.0 * f[n_pts - 1] - 6.0 * f[n_pts - 2] + 4.0 * f[n_pts - 3] -
                                       f[n_pts - 4];
    std::vector<cplx> lap(n_pts);
    for (int n = 0; n < n_pts; ++n) {
        const cplx left = n == 0 ? f[0] : f[n - 1];
        const cplx right = n == n_pts - 1 ? ghost : f[n + 1];
        lap[n] = (right - 2.0 * f[n] + left) / (h * h) + dm1 / grid.node(n) * (right - left) / (2.0 * h);
    }
    return lap;
}

FunctionalValues functionals(const ComplexField& f, double sigma, const cplx* far_ghost) {
    if (!(sigma > 0.0)) throw std::invalid_argument("functionals: sigma must be positive");
    const RadialGrid& grid = f.grid();
    const auto lap = radial_laplacian(f, far_ghost);
    double power = 0.0, grad = 0.0, pot = 0.0, sup = 0.0;
    for (int n = 0; n < grid.size(); ++n) {
        const double w = grid.weight(n);
        const double a2 = std::norm(f[n]);
        power += w * a2;
        grad += w * std::norm(lap[n]);
        pot += w * std::pow(a2, sigma + 1.0);
        sup = std::max(sup, std::sqrt(a2));
    }
    FunctionalValues out;
    out.power = power;
    out.gradient_part = grad;
    out.potential_part = pot / (sigma + 1.0);
    out.hamiltonian = grad - out.potential_part;
    out.sup_norm = sup;
    out.lp_norms[2.0] = std::sqrt(power);
    out.lp_norms[2.0 * sigma + 2.0] = std::pow(pot, 1.0 / (2.0 * sigma + 2.0));
    return out;
}

cplx inner_product(const ComplexField& f, const ComplexField& g) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("inner_product: grids differ");
    cplx acc = 0.0;
    for (int n = 0; n < f.size(); ++n) acc += f.grid().weight(n) * std::conj(f[n]) * g[n];
    return acc;
}

double l2_norm(const ComplexField& f) { return std::sqrt(inner_product(f, f).real()); }

cplx sample_quartic(std::span<const double> x, std::span<const cplx> y, double at) {
    const int n = static_cast<int>(x.size());
    if (n < 5 || static_cast<int>(y.size()) != n)
        throw std::invalid_argument("sample_quartic: need at least 5 matching samples");
    const int hi = static_cast<int>(std::upper_bound(x.begin(), x.end(), at) - x.begin());
    const int start = std::clamp(hi - 3, 0, n - 5);
    cplx acc = 0.0;
    for (int i = start; i < start + 5; ++i) {
        double li = 1.0;
        for (int j = start; j < start + 5; ++j)
            if (j != i) li *= (at - x[j]) / (x[i] - x[j]);
        acc += li * y[i];
    }
    return acc;
}

ComplexField interpolate(const ComplexField& f, const RadialGrid& target) {
    const RadialGrid& src = f.grid();
    if (target.dim() != src.dim()) throw std::invalid_argument("interpolate: dimension mismatch");
    if (target.r_max() > src.r_max() * (1.0 + 1e-12))
        throw std::invalid_argument("interpolate: target extends past the source domain");
    const auto xs = src.nodes();
    ComplexField out(target);
    for (int n = 0; n < target.size(); ++n) out[n] = sample_quartic(xs, f.values(), target.node(n));
    return out;
}

cplx value_at_origin(double r0, cplx f0, double r1, cplx f1) {
    return (r1 * r1 * f0 - r0 * r0 * f1) / (r1 * r1 - r0 * r0);
}

}  // namespace bnls
