#pragma once

#include <array>
#include <complex>
#include <vector>

#include "bnls/radial.hpp"

namespace bnls {

/// True for sigma*d > 4 and (d <= 4 or sigma < 4/(d-4)).
bool is_admissible(double sigma, int dim);

/// Throws AdmissibilityError when (sigma, dim) is outside the supercritical range.
void require_admissible(double sigma, int dim);

struct WkbParams {
    double sigma;
    int dim;
    double kappa;
    double nu;
    /// Smallest rho at which the asymptotic branches are trusted.
    double rho_min = 10.0;

    /// Validates admissibility and kappa > 0.
    static WkbParams make(double sigma, int dim, double kappa, double nu, double rho_min = 10.0);
};

/// Large-rho branches of the linearized profile equation.
///   1: rho^{-2/sigma - 4 i nu / kappa^4}                (algebraic)
///   2: algebraic decay with fast phase exp(-i c (kappa rho)^{4/3})
///   3: exponentially growing (never used in closures)
///   4: exponentially decaying
enum class Branch { k1 = 1, k2 = 2, k3 = 3, k4 = 4 };

struct DecayExponents {
    double alg1;    // 2/sigma
    double alg2;    // (2/(3 sigma)) (sigma d - 1)
    double gamma0;  // (2/3)(d - 2 - 2/sigma)
    double gamma1;  // 4 + 2/sigma
    double l2_growth;  // d - 4/sigma, growth rate of the truncated L2 norm
};

DecayExponents decay_exponents(double sigma, int dim);

/// Branch written as exp(w(rho)) with w = a rho^{4/3} + b log(rho).
/// Branch 1 has a = 0.
struct BranchExponent {
    std::complex<double> a;
    std::complex<double> b;
};

BranchExponent branch_exponent(const WkbParams& p, Branch branch);

/// log of the unit-coefficient branch value; evaluated without exponentiating
/// so branch 4 can be used far past the underflow threshold.
std::complex<double> log_branch(const WkbParams& p, Branch branch, double rho);

/// Unit-coefficient branch value. Throws std::domain_error below p.rho_min.
std::complex<double> branch_value(const WkbParams& p, Branch branch, double rho);

/// Logarithmic derivative u = w' and its first three derivatives at rho.
std::array<std::complex<double>, 4> branch_log_derivatives(const WkbParams& p, Branch branch, double rho);

/// S^(k)/S for k = 0..4, from the logarithmic derivatives.
std::array<std::complex<double>, 5> branch_derivative_ratios(const WkbParams& p, Branch branch, double rho);

/// Residual of the linearized profile equation
///   -nu S + i kappa^4/4 (2/sigma S + rho S') - Delta_rho^2 S
/// divided by |S|, evaluated from the closed-form derivatives.
double branch_relative_residual(const WkbParams& p, Branch branch, double rho);

/// Far-boundary ghost closure. Row g maps (S_{N-2}, S_{N-1}) to the ghost
/// value S_{N+g}, assuming S = c1 S_{B,1} + c4 S_{B,4} on the last nodes.
struct ClosureMatrix {
    std::vector<std::array<std::complex<double>, 2>> rows;

    std::complex<double> ghost(int g, std::complex<double> s_prev, std::complex<double> s_last) const {
        return rows[g][0] * s_prev + rows[g][1] * s_last;
    }
};

/// Closure with `n_ghosts` ghost nodes beyond the grid end (2 for the 5-point
/// stencil, 3 for the 7-point one). Throws NumericalError when the 2x2 fit is
/// numerically singular.
ClosureMatrix closure_matrix(const WkbParams& p, const RadialGrid& grid, int n_ghosts = 2);

/// Closure for a 2x2 fit against two arbitrary branches given by their
/// log-values at the fitted nodes and at the ghosts.
ClosureMatrix closure_from_log_branches(std::array<std::complex<double>, 2> log_a_fit,
                                        std::array<std::complex<double>, 2> log_b_fit,
                                        const std::vector<std::complex<double>>& log_a_ghost,
                                        const std::vector<std::complex<double>>& log_b_ghost);

}  // namespace bnls
