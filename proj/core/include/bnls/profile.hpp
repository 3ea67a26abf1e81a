#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bnls/banded.hpp"
#include "bnls/radial.hpp"
#include "bnls/wkb.hpp"

namespace bnls {

/// Parameters of the profile equation
///   -nu S + i kappa^4/4 (2/sigma S + rho S') - Delta^2 S + |S|^{2 sigma} S = 0.
struct ProfileParams {
    double sigma = 6.0;
    int dim = 1;
    double kappa = 1.0;
    double nu = 1.0;
};

/// Discretization of the linear part L on the half-integer grid.
///
/// Rows 0..k-1 fold the even-symmetry ghosts S_{-j-1} = S_j. The last k rows
/// fold the far closure: for kappa > 0 the WKB fit to branches {1, 4}; for
/// kappa = 0 (standing waves) a fit to the two decaying exponentials of
/// -nu - Delta^2. The LU factorization is computed once and reused.
class OperatorMatrix {
public:
    OperatorMatrix(const RadialGrid& grid, ProfileParams params, StencilOrder order);

    const RadialGrid& grid() const { return grid_; }
    const ProfileParams& params() const { return params_; }
    StencilOrder order() const { return order_; }
    const BandedMatrix& matrix() const { return matrix_; }
    const ClosureMatrix& closure() const { return closure_; }

    /// (M S)_n, the discrete L[S] including both closures.
    std::vector<cplx> apply(std::span<const cplx> s) const;
    /// Solves M x = b in place.
    void solve(std::span<cplx> b) const { lu_->solve(b); }
    /// Ghost values past the far boundary implied by the closure.
    std::vector<cplx> far_ghosts(std::span<const cplx> s) const;

private:
    RadialGrid grid_;
    ProfileParams params_;
    StencilOrder order_;
    ClosureMatrix closure_;
    BandedMatrix matrix_;
    std::shared_ptr<const BandedLu> lu_;
};

/// Validates parameters and builds the operator. kappa = 0 requires nu > 0.
OperatorMatrix assemble_operator(const RadialGrid& grid, double sigma, double kappa, double nu,
                                 StencilOrder order = StencilOrder::kFourth);

/// Closure for the standing-wave operator -nu - Delta^2 (kappa = 0).
ClosureMatrix decaying_closure(const RadialGrid& grid, double nu, int n_ghosts);

struct SlsrConfig {
    int max_iters = 2000;
    /// Tolerance on ||S + L^{-1}(|S|^{2 sigma} S)|| / ||S||.
    double residual_tol = 1e-8;
    double step_tol = 1e-10;
    /// Stop once the step change has not improved for this many iterations.
    int stall_iters = 30;
    /// Gaussian a exp(-rho^2) unless an explicit starting field is given.
    double gaussian_amplitude = 1.5;
    std::optional<ComplexField> initial_guess;
};

struct ProfileSolution {
    ComplexField s;
    ProfileParams params;
    StencilOrder order = StencilOrder::kFourth;
    /// Fixed-point residual ||S + L^{-1} N(S)|| / ||S|| in the radial L2 norm.
    double residual = 0.0;
    /// Raw ||L S + N(S)|| / ||S||. Bounded below by roughly eps * h^-4.
    double operator_residual = 0.0;
    double hamiltonian = 0.0;
    /// |S(0)|, even quadratic extrapolation from the first two nodes.
    double on_axis = 0.0;
    /// arg<S, -L^{-1} N(S)>: the rotation the map applies to the limit. Zero
    /// only at a true eigenpair; away from it SLSR settles on a rotating
    /// relative fixed point with residual ~ |phase_drift|.
    double phase_drift = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// One normalized fixed-point update
///   S+ = -( -<S,S> / Re<S, L^{-1} N(S)> )^{1 + 1/(2 sigma)} L^{-1} N(S),  N(S) = |S|^{2 sigma} S.
/// Throws NumericalError for a zero field or a vanishing denominator.
ComplexField slsr_step(const OperatorMatrix& m, const ComplexField& s);

/// The un-normalized map S+ = -L^{-1} N(S).
ComplexField slsr_step_unnormalized(const OperatorMatrix& m, const ComplexField& s);

/// Iterates slsr_step to a fixed point. Gauge: S(0) real and positive.
/// Stops on residual <= residual_tol, step change <= step_tol or a stalled
/// step change, and returns the last iterate; converged reports the residual test.
ProfileSolution solve_profile(const OperatorMatrix& m, const SlsrConfig& cfg = {});
ProfileSolution solve_profile(const RadialGrid& grid, double sigma, double kappa, double nu,
                              const SlsrConfig& cfg = {}, StencilOrder order = StencilOrder::kFourth);

struct KappaSearchOptions {
    double lo = 0.5;
    double hi = 2.0;
    /// Target accuracy on | |S(0)| - 1 |.
    double tolerance = 1e-4;
    /// Probes used to march across [lo, hi] looking for the first sign change.
    int scan_points = 16;
    /// Extra sweeps past hi, each with doubled step.
    int max_expansions = 2;
    int max_iters = 40;
};

struct KappaSearchResult {
    double kappa = 0.0;
    ProfileSolution solution;
    /// (kappa, |S(0)|) pairs evaluated during the search.
    std::vector<std::pair<double, double>> scanned;
};

/// Finds kappa with |S(0)| = 1 for fixed nu: marches across [lo, hi] to the
/// first sign change of kappa -> |S(0)| - 1 and refines with TOMS 748.
/// Throws NumericalError if no sign change is found; the message lists the
/// scanned map.
KappaSearchResult kappa_search(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg = {},
                               const KappaSearchOptions& opts = {},
                               StencilOrder order = StencilOrder::kFourth);

/// Finds the eigenvalue kappa at which the SLSR limit is a true solution
/// (phase_drift = 0) for fixed nu, by a TOMS 748 search on kappa -> phase_drift.
/// |S(0)| of the result is whatever the eigenpair dictates.
KappaSearchResult eigen_search(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg = {},
                               const KappaSearchOptions& opts = {},
                               StencilOrder order = StencilOrder::kFourth);

struct HamiltonianDefect {
    double defect = 0.0;
    bool degenerate = false;
};

/// |H[S]| / (||Delta S||^2 + (sigma+1)^{-1} ||S||^{2 sigma + 2}_{2 sigma + 2}).
HamiltonianDefect verify_zero_hamiltonian(const ProfileSolution& sol);

/// Solves the nu = 1 twin at kappa / nu^{1/4} on the grid scaled by nu^{1/4}
/// and returns max |S(rho) - nu^{1/(2 sigma)} S~(nu^{1/4} rho)| / max |S|.
double check_rescaling(const ProfileSolution& sol, const SlsrConfig& cfg = {});

struct FarFieldFit {
    double amplitude = 0.0;
    double exponent = 0.0;
};

/// Log-log least squares of |S| against rho over [lo, hi] * R_max.
FarFieldFit far_field_fit(const ProfileSolution& sol, double lo = 0.5, double hi = 0.9);

/// Same fit on arbitrary samples restricted to [rho_lo, rho_hi].
FarFieldFit power_law_fit(std::span<const double> rho, std::span<const cplx> values, double rho_lo,
                          double rho_hi);

/// Largest increase of |S| between consecutive nodes, relative to max |S|.
/// Zero for a monotonically decreasing modulus.
double monotonicity_violation(const ComplexField& s);

/// Standing wave R with -nu R - Delta^2 R + |R|^{2 sigma} R = 0 (kappa = 0).
ProfileSolution solve_standing_wave(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg = {},
                                    StencilOrder order = StencilOrder::kFourth);

}  // namespace bnls
