#include "bnls/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

#include "bnls/errors.hpp"

namespace bnls {

namespace {

using cd = std::complex<double>;

std::vector<cd> nonlinearity(std::span<const cd> s, double sigma) {
    std::vector<cd> out(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) out[n] = std::pow(std::norm(s[n]), sigma) * s[n];
    return out;
}

cd weighted_dot(const RadialGrid& g, std::span<const cd> a, std::span<const cd> b) {
    cd acc = 0.0;
    for (int n = 0; n < g.size(); ++n) acc += g.weight(n) * std::conj(a[n]) * b[n];
    return acc;
}

double weighted_norm(const RadialGrid& g, std::span<const cd> a) {
    return std::sqrt(weighted_dot(g, a, a).real());
}

cd origin_value(const ComplexField& s) {
    const auto& g = s.grid();
    return value_at_origin(g.node(0), s[0], g.node(1), s[1]);
}

void fix_gauge(ComplexField& s) {
    const cd s0 = origin_value(s);
    if (std::abs(s0) == 0.0) return;
    const cd rot = std::conj(s0) / std::abs(s0);
    for (auto& v : s.values()) v *= rot;
}

struct Iterate {
    ComplexField next;
    double residual;    // ||S + L^{-1} N(S)|| / ||S||
    double normalizer;  // -<S,S> / Re<S, L^{-1} N(S)>
    double drift;       // arg <S, -L^{-1} N(S)>
};

Iterate slsr_iterate(const OperatorMatrix& m, const ComplexField& s) {
    const RadialGrid& g = m.grid();
    const double sigma = m.params().sigma;
    auto y = nonlinearity(s.values(), sigma);
    m.solve(y);
    const double ss = weighted_dot(g, s.values(), s.values()).real();
    if (!(ss > 0.0)) throw NumericalError("SLSR: iterate vanished identically");
    const cd sy = weighted_dot(g, s.values(), y);
    const double denom = sy.real();
    if (!(std::abs(denom) > 1e-300) || !std::isfinite(denom))
        throw NumericalError("SLSR: Re<S, L^{-1} N(S)> vanished; iterate orthogonal to its image");
    const double normalizer = -ss / denom;
    if (!(normalizer > 0.0))
        throw NumericalError("SLSR: normalization factor is not positive (Re<S, L^{-1}N(S)> > 0)");
    std::vector<cd> diff(s.size());
    for (int n = 0; n < s.size(); ++n) diff[n] = s[n] + y[n];
    const double residual = weighted_norm(g, diff) / std::sqrt(ss);
    const double scale = std::pow(normalizer, 1.0 + 1.0 / (2.0 * sigma));
    ComplexField next(g);
    for (int n = 0; n < s.size(); ++n) next[n] = -scale * y[n];
    return {std::move(next), residual, normalizer, std::arg(-sy)};
}

void finalize(ProfileSolution& sol, const OperatorMatrix& m) {
    const RadialGrid& g = m.grid();
    const auto& s = sol.s;
    auto r = m.apply(s.values());
    const auto nl = nonlinearity(s.values(), m.params().sigma);
    for (int n = 0; n < s.size(); ++n) r[n] += nl[n];
    sol.operator_residual = weighted_norm(g, r) / l2_norm(s);
    const auto ghosts = m.far_ghosts(s.values());
    sol.hamiltonian = functionals(s, m.params().sigma, &ghosts[0]).hamiltonian;
    sol.on_axis = std::abs(origin_value(s));
}

}  // namespace

ClosureMatrix decaying_closure(const RadialGrid& grid, double nu, int n_ghosts) {
    if (!(nu > 0.0)) throw std::invalid_argument("decaying closure needs nu > 0");
    const double mu = std::pow(nu, 0.25);
    const cd lam_a = std::polar(mu, 0.75 * std::numbers::pi);
    const cd lam_b = std::polar(mu, -0.75 * std::numbers::pi);
    const double alg = 0.5 * (grid.dim() - 1);
    const int n = grid.size();
    auto log_a = [&](double r) { return lam_a * r - alg * std::log(r); };
    auto log_b = [&](double r) { return lam_b * r - alg * std::log(r); };
    std::vector<cd> ga, gb;
    for (int g = 0; g < n_ghosts; ++g) {
        ga.push_back(log_a(grid.node(n + g)));
        gb.push_back(log_b(grid.node(n + g)));
    }
    return closure_from_log_branches({log_a(grid.node(n - 2)), log_a(grid.node(n - 1))},
                                     {log_b(grid.node(n - 2)), log_b(grid.node(n - 1))}, ga, gb);
}

OperatorMatrix::OperatorMatrix(const RadialGrid& grid, ProfileParams params, StencilOrder order)
    : grid_(grid), params_(params), order_(order),
      matrix_(grid.size(), stencil_half_width(order), stencil_half_width(order)) {
    const int k = stencil_half_width(order);
    const int n_pts = grid.size();
    if (n_pts < 4 * k) throw std::invalid_argument("assemble_operator: grid too small for the stencil");
    closure_ = params.kappa > 0.0
                   ? closure_matrix(WkbParams::make(params.sigma, params.dim, params.kappa, params.nu), grid, k)
                   : decaying_closure(grid, params.nu, k);

    const double k4 = std::pow(params.kappa, 4);
    const cd diag{-params.nu, k4 / (2.0 * params.sigma)};
    const cd drift{0.0, k4 / 4.0};
    const auto d1 = first_derivative_row(grid, order);
    for (int n = 0; n < n_pts; ++n) {
        const auto bil = bilaplacian_row(grid, n, order);
        for (int j = -k; j <= k; ++j) {
            cd c = drift * grid.node(n) * d1[j + k] - bil[j + k];
            if (j == 0) c += diag;
            const int col = n + j;
            if (col < 0) {
                matrix_.at(n, -col - 1) += c;
            } else if (col >= n_pts) {
                const auto& row = closure_.rows[col - n_pts];
                matrix_.at(n, n_pts - 2) += c * row[0];
                matrix_.at(n, n_pts - 1) += c * row[1];
            } else {
                matrix_.at(n, col) += c;
            }
        }
    }
    lu_ = std::make_shared<const BandedLu>(matrix_);
}

std::vector<cplx> OperatorMatrix::apply(std::span<const cplx> s) const {
    std::vector<cplx> out(s.size());
    matrix_.multiply(s, out);
    return out;
}

std::vector<cplx> OperatorMatrix::far_ghosts(std::span<const cplx> s) const {
    const int n = static_cast<int>(s.size());
    std::vector<cplx> g(closure_.rows.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = closure_.ghost(static_cast<int>(i), s[n - 2], s[n - 1]);
    return g;
}

OperatorMatrix assemble_operator(const RadialGrid& grid, double sigma, double kappa, double nu,
                                 StencilOrder order) {
    require_admissible(sigma, grid.dim());
    if (kappa < 0.0 || !std::isfinite(kappa)) throw std::invalid_argument("assemble_operator: kappa must be >= 0");
    if (kappa == 0.0 && !(nu > 0.0))
        throw std::invalid_argument("assemble_operator: the standing-wave operator needs nu > 0");
    if (kappa > 0.0 && nu == 0.0)
        throw std::invalid_argument("assemble_operator: nu must be nonzero when kappa > 0");
    return OperatorMatrix(grid, ProfileParams{sigma, grid.dim(), kappa, nu}, order);
}

ComplexField slsr_step(const OperatorMatrix& m, const ComplexField& s) { return slsr_iterate(m, s).next; }

ComplexField slsr_step_unnormalized(const OperatorMatrix& m, const ComplexField& s) {
    auto y = nonlinearity(s.values(), m.params().sigma);
    m.solve(y);
    for (auto& v : y) v = -v;
    return ComplexField(m.grid(), std::move(y));
}

ProfileSolution solve_profile(const OperatorMatrix& m, const SlsrConfig& cfg) {
    if (cfg.max_iters < 1 || !(cfg.residual_tol > 0.0) || !(cfg.step_tol > 0.0))
        throw std::invalid_argument("SlsrConfig: tolerances must be positive and max_iters >= 1");
    const RadialGrid& g = m.grid();
    ComplexField s = cfg.initial_guess ? interpolate(*cfg.initial_guess, g)
                                       : ComplexField::sample(g, [a = cfg.gaussian_amplitude](double r) {
                                             return cd{a * std::exp(-r * r)};
                                         });
    fix_gauge(s);

    ProfileSolution out{s, m.params(), m.order()};
    double min_change = std::numeric_limits<double>::infinity();
    int min_change_at = 0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        auto step = slsr_iterate(m, s);
        if (!step.next.all_finite()) throw NumericalError("SLSR: iterate became non-finite");
        fix_gauge(step.next);
        std::vector<cd> diff(s.size());
        for (int n = 0; n < s.size(); ++n) diff[n] = step.next[n] - s[n];
        const double change = weighted_norm(g, diff) / l2_norm(s);
        out.residual = step.residual;
        out.phase_drift = step.drift;
        out.iterations = it;
        if (change < min_change) {
            min_change = change;
            min_change_at = it;
        }
        // A step change stuck above step_tol at the round-off floor of the
        // solve counts as a plateau.
        const bool stalled = it - min_change_at >= cfg.stall_iters;
        if (step.residual <= cfg.residual_tol || change <= cfg.step_tol || stalled) break;
        s = std::move(step.next);
    }
    out.s = std::move(s);
    out.converged = out.residual <= cfg.residual_tol;
    finalize(out, m);
    return out;
}

ProfileSolution solve_profile(const RadialGrid& grid, double sigma, double kappa, double nu, const SlsrConfig& cfg,
                              StencilOrder order) {
    return solve_profile(assemble_operator(grid, sigma, kappa, nu, order), cfg);
}

ProfileSolution solve_standing_wave(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg,
                                    StencilOrder order) {
    return solve_profile(assemble_operator(grid, sigma, 0.0, nu, order), cfg);
}

namespace {

// Bracketed TOMS 748 search on kappa -> target(solution). Every probe warm
// starts from the previous profile.
template <class Target>
KappaSearchResult search_kappa(const char* what, const RadialGrid& grid, double sigma, double nu,
                               const SlsrConfig& cfg, const KappaSearchOptions& opts, StencilOrder order,
                               Target target, bool require_converged) {
    if (!(opts.lo > 0.0) || !(opts.hi > opts.lo)) throw std::invalid_argument(std::string(what) + ": bad bracket");
    std::vector<std::pair<double, double>> scanned;
    SlsrConfig local = cfg;
    std::optional<ProfileSolution> best;
    double best_f = std::numeric_limits<double>::infinity();

    auto probe = [&](double kappa) {
        const auto attempt = [&]() {
            try {
                return solve_profile(grid, sigma, kappa, nu, local, order);
            } catch (const NumericalError&) {
                if (!local.initial_guess) throw;
                // A warm start from a distant kappa can leave the basin; retry cold.
                local.initial_guess.reset();
                return solve_profile(grid, sigma, kappa, nu, local, order);
            }
        };
        auto sol = attempt();
        if (require_converged && !sol.converged) {
            std::ostringstream os;
            os << what << ": SLSR did not converge at kappa=" << kappa << " (residual " << sol.residual << ")";
            throw NumericalError(os.str());
        }
        scanned.emplace_back(kappa, sol.on_axis);
        local.initial_guess = sol.s;
        const double f = target(sol);
        if (std::abs(f) < best_f) {
            best_f = std::abs(f);
            best = std::move(sol);
        }
        return f;
    };

    // March upward from lo in small warm-started steps and stop at the first
    // sign change; the target is not monotone over wide brackets.
    const int n_scan = std::max(2, opts.scan_points);
    double step = (opts.hi - opts.lo) / (n_scan - 1);
    double lo = opts.lo, flo = probe(lo);
    double hi = lo, fhi = flo;
    for (int e = 0, i = 1; flo * fhi > 0.0; ++i) {
        if (i >= n_scan) {
            if (e++ >= opts.max_expansions) break;
            i = 0;
        }
        lo = hi;
        flo = fhi;
        hi = lo + step;
        fhi = probe(hi);
        if (i == 0) step *= 2.0;
    }
    if (flo * fhi > 0.0) {
        std::ostringstream os;
        os << what << ": no sign change; scanned (kappa, |S(0)|):";
        for (auto [k, a] : scanned) os << " (" << k << ", " << a << ")";
        throw NumericalError(os.str());
    }

    std::uintmax_t iters = opts.max_iters;
    auto stop = [&](double a, double b) { return std::abs(b - a) < 1e-10 * std::abs(a) || best_f < 1e-2 * opts.tolerance; };
    boost::math::tools::toms748_solve(probe, lo, hi, flo, fhi, stop, iters);
    if (best_f >= opts.tolerance) {
        std::ostringstream os;
        os << what << ": root search ended with mismatch " << best_f;
        throw NumericalError(os.str());
    }
    const double kappa = best->params.kappa;
    return KappaSearchResult{kappa, std::move(*best), std::move(scanned)};
}

}  // namespace

KappaSearchResult kappa_search(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg,
                               const KappaSearchOptions& opts, StencilOrder order) {
    // Away from the eigenvalue SLSR settles on a rotating limit, so each
    // probe is accepted on its step criterion alone.
    return search_kappa("kappa_search", grid, sigma, nu, cfg, opts, order,
                        [](const ProfileSolution& s) { return s.on_axis - 1.0; }, false);
}

KappaSearchResult eigen_search(const RadialGrid& grid, double sigma, double nu, const SlsrConfig& cfg,
                               const KappaSearchOptions& opts, StencilOrder order) {
    return search_kappa("eigen_search", grid, sigma, nu, cfg, opts, order,
                        [](const ProfileSolution& s) { return s.phase_drift; }, false);
}

HamiltonianDefect verify_zero_hamiltonian(const ProfileSolution& sol) {
    const double sigma = sol.params.sigma;
    // Same far ghost as the solver used.
    const int k = stencil_half_width(sol.order);
    std::optional<cd> ghost;
    if (sol.s.size() >= 4 * k) {
        const auto m = OperatorMatrix(sol.s.grid(), sol.params, sol.order);
        ghost = m.far_ghosts(sol.s.values())[0];
    }
    const auto f = functionals(sol.s, sigma, ghost ? &*ghost : nullptr);
    const double scale = f.gradient_part + f.potential_part;
    if (!(scale > 0.0)) return {0.0, true};
    return {std::abs(f.hamiltonian) / scale, false};
}

double check_rescaling(const ProfileSolution& sol, const SlsrConfig& cfg) {
    const auto& p = sol.params;
    if (!(p.nu > 0.0)) throw std::invalid_argument("check_rescaling: requires nu > 0");
    if (p.nu == 1.0) return 0.0;
    const double q = std::pow(p.nu, 0.25);
    const RadialGrid& g = sol.s.grid();
    const RadialGrid twin_grid(g.size(), g.r_max() * q, g.dim());
    SlsrConfig twin_cfg = cfg;
    twin_cfg.initial_guess.reset();
    const auto twin = solve_profile(twin_grid, p.sigma, p.kappa / q, 1.0, twin_cfg, sol.order);
    const double amp = std::pow(p.nu, 1.0 / (2.0 * p.sigma));
    double num = 0.0, den = 0.0;
    for (int n = 0; n < g.size(); ++n) {
        num = std::max(num, std::abs(sol.s[n] - amp * twin.s[n]));
        den = std::max(den, std::abs(sol.s[n]));
    }
    return num / den;
}

FarFieldFit power_law_fit(std::span<const double> rho, std::span<const cplx> values, double rho_lo, double rho_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t n = 0; n < rho.size(); ++n) {
        if (rho[n] < rho_lo || rho[n] > rho_hi) continue;
        const double a = std::abs(values[n]);
        if (!(a > 1e-300)) throw NumericalError("far_field_fit: window contains zero samples");
        const double x = std::log(rho[n]), y = std::log(a);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) throw NumericalError("far_field_fit: fewer than two samples in the window");
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / cnt;
    return {std::exp(icpt), slope};
}

FarFieldFit far_field_fit(const ProfileSolution& sol, double lo, double hi) {
    const auto& g = sol.s.grid();
    const auto rho = g.nodes();
    return power_law_fit(rho, sol.s.values(), lo * g.r_max(), hi * g.r_max());
}

double monotonicity_violation(const ComplexField& s) {
    double sup = 0.0, worst = 0.0;
    for (int n = 0; n < s.size(); ++n) sup = std::max(sup, std::abs(s[n]));
    for (int n = 1; n < s.size(); ++n) worst = std::max(worst, std::abs(s[n]) - std::abs(s[n - 1]));
    return sup > 0.0 ? worst / sup : 0.0;
}

}  // namespace bnls
