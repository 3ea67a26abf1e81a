#pragma once

#include <complex>
#include <map>
#include <span>
#include <vector>

namespace bnls {

using cplx = std::complex<double>;

/// Spatial accuracy of the centered stencils (5-point or 7-point).
enum class StencilOrder { kSecond = 2, kFourth = 4 };

/// Number of neighbours on each side used by a stencil of the given order.
constexpr int stencil_half_width(StencilOrder order) {
    return order == StencilOrder::kSecond ? 2 : 3;
}

/// Half-integer radial mesh: rho_n = (n + 1/2) h, h = r_max / n_points.
///
/// There is no node at the coordinate singularity; node 0 sits at h/2 and the
/// last node at r_max - h/2. Integrals use the radial measure rho^{d-1} drho
/// without the angular surface constant, evaluated with the midpoint rule.
class RadialGrid {
public:
    RadialGrid(int n_points, double r_max, int dim);

    int size() const { return n_points_; }
    double r_max() const { return r_max_; }
    double spacing() const { return spacing_; }
    int dim() const { return dim_; }

    double node(int n) const { return (n + 0.5) * spacing_; }
    std::vector<double> nodes() const;
    /// Midpoint quadrature weight rho_n^{d-1} h.
    double weight(int n) const;

    friend bool operator==(const RadialGrid&, const RadialGrid&) = default;

private:
    int n_points_;
    double r_max_;
    double spacing_;
    int dim_;
};

/// Validating factory. Throws std::invalid_argument for nonpositive r_max,
/// dim < 1, or fewer than 4 points.
RadialGrid make_grid(int n_points, double r_max, int dim);

/// Complex samples of a radial function on a RadialGrid.
class ComplexField {
public:
    explicit ComplexField(RadialGrid grid);
    ComplexField(RadialGrid grid, std::vector<cplx> values);

    template <class F>
    static ComplexField sample(const RadialGrid& grid, F&& f) {
        std::vector<cplx> v(grid.size());
        for (int n = 0; n < grid.size(); ++n) v[n] = f(grid.node(n));
        return ComplexField(grid, std::move(v));
    }

    const RadialGrid& grid() const { return grid_; }
    std::span<const cplx> values() const { return values_; }
    std::span<cplx> values() { return values_; }
    int size() const { return grid_.size(); }
    cplx operator[](int n) const { return values_[n]; }
    cplx& operator[](int n) { return values_[n]; }

    bool all_finite() const;

private:
    RadialGrid grid_;
    std::vector<cplx> values_;
};

struct FunctionalValues {
    double power = 0.0;
    double hamiltonian = 0.0;
    double sup_norm = 0.0;
    /// ||f||_p for p in {2, 2 sigma + 2}.
    std::map<double, double> lp_norms;
    /// ||Delta f||_2^2 and (sigma+1)^{-1} ||f||_{2sigma+2}^{2sigma+2}, the two
    /// parts of the Hamiltonian.
    double gradient_part = 0.0;
    double potential_part = 0.0;
};

/// Centered bilaplacian weights at node n over offsets -k..k (k from `order`):
/// d^4 + 2(d-1)/rho d^3 + (d-1)(d-3)/rho^2 d^2 - (d-1)(d-3)/rho^3 d.
std::vector<double> bilaplacian_row(const RadialGrid& grid, int n, StencilOrder order);

/// Centered first-derivative weights over offsets -k..k, already divided by h.
std::vector<double> first_derivative_row(const RadialGrid& grid, StencilOrder order);

/// Applies the radial bilaplacian. Rows near the origin use even-symmetry
/// ghosts; the last `stencil_half_width(order)` rows need a far-boundary
/// closure and are returned as zero.
ComplexField radial_bilaplacian(const ComplexField& f, StencilOrder order = StencilOrder::kSecond);

/// Second-order radial Laplacian f'' + (d-1)/rho f' with even ghosts at the
/// origin. `far_ghost` is the value one node past the end; when absent it is
/// extrapolated with a cubic through the last four nodes.
std::vector<cplx> radial_laplacian(const ComplexField& f, const cplx* far_ghost = nullptr);

/// Power, Hamiltonian and norms, H = ||Delta f||_2^2 - (sigma+1)^{-1} ||f||^{2sigma+2}_{2sigma+2}.
FunctionalValues functionals(const ComplexField& f, double sigma, const cplx* far_ghost = nullptr);

/// <f, g> = sum conj(f_n) g_n rho_n^{d-1} h.
cplx inner_product(const ComplexField& f, const ComplexField& g);
double l2_norm(const ComplexField& f);

/// Quartic (5-point) Lagrange interpolation of sorted samples at `at`.
/// Uses the 5 nodes nearest to `at`, one-sided near the ends.
cplx sample_quartic(std::span<const double> x, std::span<const cplx> y, double at);

/// Resamples onto `target` with the quartic rule; exact for polynomials of
/// degree <= 4. Throws std::invalid_argument when target extends past the
/// source domain or the dimensions differ.
ComplexField interpolate(const ComplexField& f, const RadialGrid& target);

/// Even-symmetric quadratic extrapolation of the samples at rho=0 from the
/// first two nodes (f'(0) = 0).
cplx value_at_origin(double r0, cplx f0, double r1, cplx f1);

}  // namespace bnls
