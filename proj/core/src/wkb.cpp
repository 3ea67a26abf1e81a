#include "bnls/wkb.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bnls/errors.hpp"

namespace bnls {

namespace {

using cd = std::complex<double>;

// Cube roots of i; w0' cubed equals i kappa^4 rho / 4.
cd cube_root_of_i(Branch b) {
    const double s3 = std::numbers::sqrt3;
    switch (b) {
        case Branch::k2: return {0.0, -1.0};
        case Branch::k3: return {s3 / 2.0, 0.5};
        case Branch::k4: return {-s3 / 2.0, 0.5};
        default: break;
    }
    throw std::invalid_argument("cube_root_of_i: branch 1 has no rho^{4/3} part");
}

}  // namespace

bool is_admissible(double sigma, int dim) {
    if (!(sigma > 0.0) || dim < 1) return false;
    if (!(sigma * dim > 4.0)) return false;
    return dim <= 4 || sigma < 4.0 / (dim - 4.0);
}

void require_admissible(double sigma, int dim) {
    if (!is_admissible(sigma, dim)) {
        std::ostringstream os;
        os << "(sigma=" << sigma << ", d=" << dim
           << ") is outside the L2-supercritical, H2-subcritical range: need 4/d < sigma";
        if (dim > 4) os << " < 4/(d-4)";
        os << " (sigma*d = " << sigma * dim << ")";
        throw AdmissibilityError(os.str());
    }
}

WkbParams WkbParams::make(double sigma, int dim, double kappa, double nu, double rho_min) {
    require_admissible(sigma, dim);
    if (!(kappa > 0.0)) throw std::invalid_argument("WkbParams: kappa must be positive");
    if (!std::isfinite(nu)) throw std::invalid_argument("WkbParams: nu must be finite");
    return WkbParams{sigma, dim, kappa, nu, rho_min};
}

DecayExponents decay_exponents(double sigma, int dim) {
    require_admissible(sigma, dim);
    DecayExponents e{};
    e.alg1 = 2.0 / sigma;
    e.alg2 = 2.0 / (3.0 * sigma) * (sigma * dim - 1.0);
    e.gamma0 = 2.0 / 3.0 * (dim - 2.0 - 2.0 / sigma);
    e.gamma1 = 4.0 + 2.0 / sigma;
    e.l2_growth = dim - 4.0 / sigma;
    return e;
}

BranchExponent branch_exponent(const WkbParams& p, Branch branch) {
    const double k4 = std::pow(p.kappa, 4);
    if (branch == Branch::k1) return {cd{}, cd{-2.0 / p.sigma, -4.0 * p.nu / k4}};
    const double alg2 = 2.0 / (3.0 * p.sigma) * (p.sigma * p.dim - 1.0);
    const double amp = 3.0 / (4.0 * std::cbrt(4.0)) * std::pow(p.kappa, 4.0 / 3.0);
    return {amp * cube_root_of_i(branch), cd{-alg2, 4.0 * p.nu / (3.0 * k4)}};
}

std::complex<double> log_branch(const WkbParams& p, Branch branch, double rho) {
    const auto e = branch_exponent(p, branch);
    return e.a * std::pow(rho, 4.0 / 3.0) + e.b * std::log(rho);
}

std::complex<double> branch_value(const WkbParams& p, Branch branch, double rho) {
    if (rho < p.rho_min) {
        std::ostringstream os;
        os << "branch_value: rho=" << rho << " is below the asymptotic validity floor " << p.rho_min;
        throw std::domain_error(os.str());
    }
    return std::exp(log_branch(p, branch, rho));
}

std::array<std::complex<double>, 4> branch_log_derivatives(const WkbParams& p, Branch branch, double rho) {
    const auto [a, b] = branch_exponent(p, branch);
    const double r13 = std::cbrt(rho);
    return {
        4.0 / 3.0 * a * r13 + b / rho,
        4.0 / 9.0 * a / (r13 * r13) - b / (rho * rho),
        -8.0 / 27.0 * a / (rho * r13 * r13) + 2.0 * b / (rho * rho * rho),
        40.0 / 81.0 * a / (rho * rho * r13 * r13) - 6.0 * b / (rho * rho * rho * rho),
    };
}

std::array<std::complex<double>, 5> branch_derivative_ratios(const WkbParams& p, Branch branch, double rho) {
    const auto [u, u1, u2, u3] = branch_log_derivatives(p, branch, rho);
    return {
        cd{1.0},
        u,
        u1 + u * u,
        u2 + 3.0 * u * u1 + u * u * u,
        u3 + 4.0 * u * u2 + 3.0 * u1 * u1 + 6.0 * u * u * u1 + u * u * u * u,
    };
}

double branch_relative_residual(const WkbParams& p, Branch branch, double rho) {
    const auto d = branch_derivative_ratios(p, branch, rho);
    const double dm1 = p.dim - 1.0;
    const double dm3 = p.dim - 3.0;
    const double k4 = std::pow(p.kappa, 4);
    const cd bilap = d[4] + 2.0 * dm1 / rho * d[3] + dm1 * dm3 / (rho * rho) * d[2] -
                     dm1 * dm3 / (rho * rho * rho) * d[1];
    const cd res = -p.nu + cd{0.0, k4 / 4.0} * (2.0 / p.sigma + rho * d[1]) - bilap;
    return std::abs(res);
}

ClosureMatrix closure_from_log_branches(std::array<cd, 2> log_a_fit, std::array<cd, 2> log_b_fit,
                                        const std::vector<cd>& log_a_ghost,
                                        const std::vector<cd>& log_b_ghost) {
    // Both branches are scaled by their value at the last fitted node, so the
    // fit matrix is [[a0, b0], [1, 1]] with O(1) entries.
    const cd a0 = std::exp(log_a_fit[0] - log_a_fit[1]);
    const cd b0 = std::exp(log_b_fit[0] - log_b_fit[1]);
    const cd det = a0 - b0;
    const double scale = std::max({std::abs(a0), std::abs(b0), 1.0});
    if (!(std::abs(det) > 1e-13 * scale) || !std::isfinite(std::abs(det)))
        throw NumericalError("closure matrix: branch fit is singular at the far boundary");
    ClosureMatrix m;
    for (std::size_t g = 0; g < log_a_ghost.size(); ++g) {
        const cd ag = std::exp(log_a_ghost[g] - log_a_fit[1]);
        const cd bg = std::exp(log_b_ghost[g] - log_b_fit[1]);
        m.rows.push_back({(ag - bg) / det, (bg * a0 - ag * b0) / det});
    }
    return m;
}

ClosureMatrix closure_matrix(const WkbParams& p, const RadialGrid& grid, int n_ghosts) {
    const int n = grid.size();
    const double rho_fit0 = grid.node(n - 2);
    if (rho_fit0 < p.rho_min) {
        std::ostringstream os;
        os << "closure_matrix: far boundary rho=" << rho_fit0 << " is below the WKB validity floor "
           << p.rho_min;
        throw std::domain_error(os.str());
    }
    std::array<cd, 2> l1{log_branch(p, Branch::k1, grid.node(n - 2)), log_branch(p, Branch::k1, grid.node(n - 1))};
    std::array<cd, 2> l4{log_branch(p, Branch::k4, grid.node(n - 2)), log_branch(p, Branch::k4, grid.node(n - 1))};
    std::vector<cd> g1, g4;
    for (int g = 0; g < n_ghosts; ++g) {
        const double rho = grid.node(n + g);
        g1.push_back(log_branch(p, Branch::k1, rho));
        g4.push_back(log_branch(p, Branch::k4, rho));
    }
    return closure_from_log_branches(l1, l4, g1, g4);
}

}  // namespace bnls
