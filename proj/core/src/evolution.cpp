#include "bnls/evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bnls/wkb.hpp"

namespace bnls {

namespace {

// Local spacing law s(r); g' = c s(g). Two wells at +-focus keep s even and smooth:
//   1/s^2 = (1/(h0^2 + beta^2 (r-f)^2) + 1/(h0^2 + beta^2 (r+f)^2)) / 2 + 1/h_max^2.
struct Spacing {
    double h0sq = 0.0, beta, focus, inv_hmax2;
    bool uniform;
    double h;

    explicit Spacing(const GradedGridSpec& spec)
        : beta(spec.stretch), focus(spec.focus), inv_hmax2(1.0 / (spec.h_max * spec.h_max)),
          uniform(spec.h_min >= spec.h_max), h(spec.h_max) {
        if (uniform) return;
        // h0 so that s(focus) = h_min; the left side is decreasing in h0^2.
        const double q = 1.0 / (spec.h_min * spec.h_min) - inv_hmax2;
        const double far = 4.0 * beta * beta * focus * focus;
        auto excess = [&](double x) { return 0.5 / x + 0.5 / (x + far) - q; };
        double lo = 0.5 / q, hi = 1.0 / q;
        for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-15; ++it) {
            const double mid = std::sqrt(lo * hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        h0sq = std::sqrt(lo * hi);
    }

    double operator()(double r) const {
        if (uniform) return h;
        const double a = r - focus, b = r + focus;
        return 1.0 / std::sqrt(0.5 / (h0sq + beta * beta * a * a) + 0.5 / (h0sq + beta * beta * b * b) + inv_hmax2);
    }
};

double ipow(double x, int k) {
    double y = 1.0;
    for (int i = 0; i < k; ++i) y *= x;
    return y;
}

void check_finite(std::span<const cplx> f, const char* what) {
    for (const auto& v : f)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericalError(std::string(what) + ": non-finite value in the field");
}

// Mean of F'(s) = s^sigma over [b, a]: the discrete-gradient potential.
double potential(double a, double b, double sigma) {
    const double scale = std::max(a, b);
    if (scale == 0.0) return 0.0;
    if (std::abs(a - b) > 1e-4 * scale)
        return (std::pow(a, sigma + 1.0) - std::pow(b, sigma + 1.0)) / ((sigma + 1.0) * (a - b));
    static constexpr std::array<double, 4> x{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                             0.8611363115940526};
    static constexpr std::array<double, 4> w{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                             0.3478548451374538};
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += w[k] * std::pow(0.5 * (a + b) + 0.5 * (a - b) * x[k], sigma);
    return 0.5 * v;
}

// Tridiagonal W^{-1} K: sub, diag, super.
struct Tridiag {
    std::vector<double> lo, di, up;
};

Tridiag laplacian_rows(const GradedGrid& grid) {
    const int m = grid.size();
    const auto& w = grid.weights();
    const auto& a = grid.faces();
    Tridiag t{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    for (int n = 0; n < m; ++n) {
        const double left = n > 0 ? a[n - 1] : 0.0;
        const double right = n + 1 < m ? a[n] : 2.0 * a[n];
        t.lo[n] = left / w[n];
        t.up[n] = n + 1 < m ? a[n] / w[n] : 0.0;
        t.di[n] = -(left + right) / w[n];
    }
    return t;
}

}  // namespace

GradedGrid::GradedGrid(const GradedGridSpec& spec) : spec_(spec) {
    if (!(spec.h_min > 0.0) || !(spec.h_max > 0.0) || !(spec.r_max > 0.0) || spec.dim < 1)
        throw std::invalid_argument("GradedGrid: spacings and r_max must be positive, dim >= 1");
    if (!(spec.focus >= 0.0) || !(spec.focus < spec.r_max))
        throw std::invalid_argument("GradedGrid: focus must lie in [0, r_max)");
    if (spec.h_min < spec.h_max && !(spec.stretch > 0.0))
        throw std::invalid_argument("GradedGrid: a graded mesh needs stretch > 0");
    if (spec.h_min > spec.h_max) spec_.h_min = spec.h_max;
    const Spacing s(spec_);

    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    auto inv = [&](double r) { return 1.0 / s(r); };
    const double extent = s.uniform ? spec_.r_max / s.h
                                    : gk.integrate(inv, 0.0, spec_.focus, 20, 1e-14) +
                                          gk.integrate(inv, spec_.focus, spec_.r_max, 20, 1e-14);
    const int m = static_cast<int>(std::ceil(extent - 1e-9));
    if (m < 4) throw std::invalid_argument("GradedGrid: fewer than 4 nodes");
    const double c = extent / m;
    h_origin_ = c * s(spec_.focus);

    // g on the half-integer lattice xi = k/2, integrated with RK4.
    std::vector<double> g(2 * m + 1);
    g[0] = 0.0;
    constexpr int substeps = 4;
    const double dxi = 0.5 / substeps;
    double r = 0.0;
    for (int k = 1; k <= 2 * m; ++k) {
        for (int j = 0; j < substeps; ++j) {
            const double k1 = c * s(r);
            const double k2 = c * s(r + 0.5 * dxi * k1);
            const double k3 = c * s(r + 0.5 * dxi * k2);
            const double k4 = c * s(r + dxi * k3);
            r += dxi / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        g[k] = r;
    }
    g[2 * m] = spec_.r_max;

    const int dm1 = spec_.dim - 1;
    nodes_.resize(m);
    weights_.resize(m);
    faces_.resize(m);
    for (int n = 0; n < m; ++n) {
        const double rn = g[2 * n + 1];
        nodes_[n] = rn;
        // Midpoint weights equal the cell volumes on uniform meshes for d <= 2 and
        // keep the d = 1 quadrature spectrally accurate; beyond that the exact
        // volumes are needed for consistency next to the origin.
        weights_[n] = spec_.dim <= 2 ? ipow(rn, dm1) * c * s(rn)
                                     : (ipow(g[2 * n + 2], spec_.dim) - ipow(g[2 * n], spec_.dim)) / spec_.dim;
        const double rf = g[2 * n + 2];
        faces_[n] = ipow(rf, dm1) / (c * s(rf));
    }
}

std::vector<cplx> graded_laplacian(const GradedGrid& grid, std::span<const cplx> f) {
    const int m = grid.size();
    if (static_cast<int>(f.size()) != m) throw std::invalid_argument("graded_laplacian: size mismatch");
    const auto& w = grid.weights();
    const auto& a = grid.faces();
    std::vector<cplx> out(m);
    for (int n = 0; n < m; ++n) {
        const cplx right = n + 1 < m ? a[n] * (f[n + 1] - f[n]) : a[n] * (-2.0 * f[n]);
        const cplx left = n > 0 ? a[n - 1] * (f[n] - f[n - 1]) : cplx{};
        out[n] = (right - left) / w[n];
    }
    return out;
}

double graded_power(const GradedGrid& grid, std::span<const cplx> f) {
    double p = 0.0;
    for (int n = 0; n < grid.size(); ++n) p += grid.weights()[n] * std::norm(f[n]);
    return p;
}

double graded_laplacian_norm2(const GradedGrid& grid, std::span<const cplx> f) {
    return graded_power(grid, graded_laplacian(grid, f));
}

double graded_hamiltonian(const GradedGrid& grid, std::span<const cplx> f, double sigma) {
    double pot = 0.0;
    for (int n = 0; n < grid.size(); ++n) pot += grid.weights()[n] * std::pow(std::norm(f[n]), sigma + 1.0);
    return graded_laplacian_norm2(grid, f) - pot / (sigma + 1.0);
}

std::vector<cplx> resample(const GradedGrid& from, std::span<const cplx> f, const GradedGrid& to) {
    if (from.dim() != to.dim()) throw std::invalid_argument("resample: dimension mismatch");
    if (to.r_max() > from.r_max() * (1.0 + 1e-12))
        throw std::invalid_argument("resample: target extends past the source domain");
    const int m = from.size();
    constexpr int mirror = 4;
    std::vector<double> x;
    std::vector<cplx> y;
    x.reserve(m + 2 * mirror);
    y.reserve(m + 2 * mirror);
    for (int j = mirror - 1; j >= 0; --j) {
        x.push_back(-from.node(j));
        y.push_back(f[j]);
    }
    for (int n = 0; n < m; ++n) {
        x.push_back(from.node(n));
        y.push_back(f[n]);
    }
    const double edge = from.r_max();
    for (int j = 0; j < mirror; ++j) {
        x.push_back(2.0 * edge - from.node(m - 1 - j));
        y.push_back(-f[m - 1 - j]);
    }
    std::vector<cplx> out(to.size());
    for (int n = 0; n < to.size(); ++n) out[n] = sample_quartic(x, y, to.node(n));
    return out;
}

cplx origin_value(const GradedGrid& grid, std::span<const cplx> psi) {
    return value_at_origin(grid.node(0), psi[0], grid.node(1), psi[1]);
}

Peak locate_peak(const GradedGrid& grid, std::span<const cplx> psi) { return locate_peak(grid.nodes(), psi); }

Peak locate_peak(std::span<const double> r, std::span<const cplx> psi) {
    const int m = static_cast<int>(r.size());
    if (m < 3 || psi.size() != r.size()) throw std::invalid_argument("locate_peak: need >= 3 matching samples");
    int best = 0;
    for (int n = 1; n < m; ++n)
        if (std::abs(psi[n]) > std::abs(psi[best])) best = n;
    if (best == 0) {
        const cplx c0 = value_at_origin(r[0], psi[0], r[1], psi[1]);
        if (std::abs(c0) >= std::abs(psi[0])) return {0.0, c0};
        return {r[0], psi[0]};
    }
    if (best == m - 1) return {r[best], psi[best]};
    const double x0 = r[best - 1], x1 = r[best], x2 = r[best + 1];
    const double y0 = std::abs(psi[best - 1]), y1 = std::abs(psi[best]), y2 = std::abs(psi[best + 1]);
    // Vertex of the parabola through the three samples.
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    const double at = std::clamp(den != 0.0 ? x1 - 0.5 * num / den : x1, x0, x2);
    const cplx v = sample_quartic(r, psi, at);
    return std::abs(v) >= y1 ? Peak{at, v} : Peak{x1, psi[best]};
}

double focusing_length(const GradedGrid& grid, std::span<const cplx> psi, double sigma) {
    const double peak = std::abs(locate_peak(grid, psi).value);
    if (peak == 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(peak, -0.5 * sigma);
}

CrankNicolsonStepper::CrankNicolsonStepper(const GradedGrid& grid, double sigma, bool nonlinear)
    : grid_(grid), sigma_(sigma), nonlinear_(nonlinear), bilap_(grid.size(), 2, 2) {
    if (!(sigma > 0.0)) throw std::invalid_argument("CrankNicolsonStepper: sigma must be positive");
    const int m = grid.size();
    const Tridiag t = laplacian_rows(grid);
    auto entry = [&](int i, int j) -> double {
        if (j == i - 1) return t.lo[i];
        if (j == i) return t.di[i];
        if (j == i + 1) return t.up[i];
        return 0.0;
    };
    for (int i = 0; i < m; ++i)
        for (int j = std::max(0, i - 2); j <= std::min(m - 1, i + 2); ++j) {
            double v = 0.0;
            for (int k = std::max(0, i - 1); k <= std::min(m - 1, i + 1); ++k) v += entry(i, k) * entry(k, j);
            bilap_.at(i, j) = v;
        }
}

void CrankNicolsonStepper::factor(double dt) {
    if (dt == factored_dt_ && lu_) return;
    const int m = grid_.size();
    BandedMatrix a(m, 2, 2);
    const cplx half{0.0, 0.5 * dt};
    for (int i = 0; i < m; ++i)
        for (int j = std::max(0, i - 2); j <= std::min(m - 1, i + 2); ++j)
            a.at(i, j) = half * std::as_const(bilap_).at(i, j) + (i == j ? 1.0 : 0.0);
    lu_.emplace(a);
    factored_dt_ = dt;
}

void CrankNicolsonStepper::step(std::vector<cplx>& psi, double dt, const std::vector<cplx>* previous) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const int m = grid_.size();
    if (static_cast<int>(psi.size()) != m) throw std::invalid_argument("step: size mismatch");
    factor(dt);

    std::vector<cplx> rhs0(m);
    bilap_.multiply(psi, rhs0);
    const cplx half{0.0, 0.5 * dt};
    for (int n = 0; n < m; ++n) rhs0[n] = psi[n] - half * rhs0[n];

    std::vector<cplx> next(m);
    if (!nonlinear_) {
        next = rhs0;
        lu_->solve(next);
        last_iters_ = 1;
        check_finite(next, "step");
        psi.swap(next);
        return;
    }

    if (previous && static_cast<int>(previous->size()) == m)
        for (int n = 0; n < m; ++n) next[n] = 2.0 * psi[n] - (*previous)[n];
    else
        next = psi;

    std::vector<double> b(m);
    for (int n = 0; n < m; ++n) b[n] = std::norm(psi[n]);
    std::vector<cplx> work(m);
    double last_change = std::numeric_limits<double>::infinity();
    const cplx idt{0.0, dt};
    for (int it = 1;; ++it) {
        for (int n = 0; n < m; ++n) {
            const double v = potential(std::norm(next[n]), b[n], sigma_);
            work[n] = rhs0[n] + idt * v * 0.5 * (next[n] + psi[n]);
        }
        lu_->solve(work);
        double change = 0.0, scale = 0.0;
        for (int n = 0; n < m; ++n) {
            change = std::max(change, std::abs(work[n] - next[n]));
            scale = std::max(scale, std::abs(work[n]));
        }
        next.swap(work);
        check_finite(next, "step");
        const double rel = scale > 0.0 ? change / scale : 0.0;
        last_iters_ = it;
        // Stop at the tolerance, or once round-off stops the contraction.
        if (rel <= tolerance) break;
        if (rel < 1e-11 && rel >= 0.5 * last_change) break;
        if (it >= max_iterations) {
            if (rel < 1e-10) break;
            std::ostringstream os;
            os << "step: nonlinear iteration did not converge (relative change " << rel << ", dt=" << dt << ")";
            throw NumericalError(os.str());
        }
        last_change = rel;
    }
    psi.swap(next);
}

EvolutionState make_state(const GradedGridSpec& spec, const std::function<cplx(double)>& psi0, double sigma) {
    GradedGrid grid(spec);
    std::vector<cplx> psi(grid.size());
    for (int n = 0; n < grid.size(); ++n) psi[n] = psi0(grid.node(n));
    check_finite(psi, "make_state");
    const double l = focusing_length(grid, psi, sigma);
    return EvolutionState{std::move(grid), std::move(psi), 0.0, 0, l};
}

double core_half_width(const GradedGrid& grid, std::span<const cplx> psi) {
    const Peak pk = locate_peak(grid, psi);
    const double top = std::abs(pk.value);
    if (top == 0.0) return grid.r_max();
    const double half = 0.5 * top;
    const int m = grid.size();
    const auto& r = grid.nodes();
    const int first_out = static_cast<int>(std::upper_bound(r.begin(), r.end(), pk.r) - r.begin());
    double width = grid.r_max();
    double prev_r = pk.r, prev_a = top;
    for (int n = first_out; n < m; ++n) {
        const double a = std::abs(psi[n]);
        if (a <= half) {
            width = prev_r + (prev_a - half) / (prev_a - a) * (r[n] - prev_r) - pk.r;
            break;
        }
        prev_r = r[n];
        prev_a = a;
    }
    prev_r = pk.r;
    prev_a = top;
    for (int n = first_out - 1; n >= 0; --n) {
        const double a = std::abs(psi[n]);
        if (r[n] >= pk.r) continue;
        if (a <= half) {
            width = std::min(width, pk.r - (prev_r - (prev_a - half) / (prev_a - a) * (prev_r - r[n])));
            break;
        }
        prev_r = r[n];
        prev_a = a;
    }
    return width;
}

std::optional<RefinementEvent> maybe_refine(EvolutionState& state, const RefinementPolicy& policy, double sigma) {
    if (policy.points_across_core < 1 || policy.refine_factor < 2)
        throw std::invalid_argument("maybe_refine: need points_across_core >= 1 and refine_factor >= 2");
    const GradedGrid& grid = state.grid;
    const Peak pk = locate_peak(grid, state.psi);
    const double width = core_half_width(grid, state.psi);
    const double focus = pk.r < width ? 0.0 : pk.r;

    // Local spacing at the peak.
    const auto& r = grid.nodes();
    const int at = std::clamp(static_cast<int>(std::lower_bound(r.begin(), r.end(), pk.r) - r.begin()), 1,
                              grid.size() - 1);
    const double h_local = pk.r == 0.0 ? grid.h_min() : r[at] - r[at - 1];

    const bool refine = width / h_local < policy.points_across_core;
    const bool move = std::abs(focus - grid.spec().focus) > 0.25 * width;
    if (!refine && !move) return std::nullopt;
    if (refine && state.refinement_level >= policy.max_level) {
        std::ostringstream os;
        os << "maybe_refine: refinement ceiling (level " << policy.max_level << ") reached at t=" << state.t;
        throw RefinementCeiling(os.str());
    }
    RefinementEvent ev;
    ev.t = state.t;
    ev.refined = refine;
    ev.power_before = graded_power(grid, state.psi);
    ev.hamiltonian_before = graded_hamiltonian(grid, state.psi, sigma);

    GradedGridSpec spec = grid.spec();
    spec.focus = focus;
    spec.h_min = refine ? h_local / policy.refine_factor : grid.h_min();
    GradedGrid next(spec);
    std::vector<cplx> psi = resample(grid, state.psi, next);
    check_finite(psi, "maybe_refine");

    state.grid = std::move(next);
    state.psi = std::move(psi);
    if (refine) state.refinement_level += 1;
    state.focusing = focusing_length(state.grid, state.psi, sigma);

    ev.level = state.refinement_level;
    ev.focus = focus;
    ev.h_min = state.grid.h_min();
    ev.nodes = state.grid.size();
    ev.power_after = graded_power(state.grid, state.psi);
    ev.hamiltonian_after = graded_hamiltonian(state.grid, state.psi, sigma);
    return ev;
}

void CollapseDiagnostics::derive() {
    const std::size_t n = t.size();
    remaining.assign(n, 0.0);
    l3_lt.assign(n, 0.0);
    l4_tau_t.assign(n, 0.0);
    for (std::size_t i = n; i-- > 1;) remaining[i - 1] = remaining[i] + dt[i];
    if (n < 3) return;
    std::vector<double> l4(n);
    for (std::size_t i = 0; i < n; ++i) l4[i] = std::pow(focusing[i], 4);
    auto deriv = [&](const std::vector<double>& f, std::size_t i) {
        const std::size_t i0 = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
        // Abscissae relative to sample i0, built from the step sizes.
        const double x0 = 0.0, x1 = dt[i0 + 1], x2 = dt[i0 + 1] + dt[i0 + 2];
        const double x = i == i0 ? x0 : (i == i0 + 1 ? x1 : x2);
        const double d0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        const double d1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        const double d2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        return d0 * f[i0] + d1 * f[i0 + 1] + d2 * f[i0 + 2];
    };
    for (std::size_t i = 0; i < n; ++i) {
        l3_lt[i] = 0.25 * deriv(l4, i);
        l4_tau_t[i] = l4[i] * deriv(tau, i);
    }
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::kTargetReached: return "target_reached";
        case StopReason::kTimeLimit: return "time_limit";
        case StopReason::kRefinementCeiling: return "refinement_ceiling";
        case StopReason::kStepLimit: return "step_limit";
    }
    return "unknown";
}

CollapseRun run_collapse(const std::function<cplx(double)>& psi0, double sigma, const CollapseConfig& cfg) {
    if (!cfg.allow_inadmissible) require_admissible(sigma, cfg.grid.dim);
    if (!(cfg.dt_coefficient > 0.0) || !(cfg.dt_max > 0.0) || !(cfg.target_focusing > 0.0))
        throw std::invalid_argument("run_collapse: dt_coefficient, dt_max and target_focusing must be positive");

    EvolutionState state = make_state(cfg.grid, psi0, sigma);
    if (!std::isfinite(state.focusing)) throw std::invalid_argument("run_collapse: initial field is zero");
    CollapseRun run{{}, {}, {}, StopReason::kStepLimit, 0, 0.0, 0.0, 0.0, 0.0, false, false, state};
    auto& diag = run.diagnostics;

    std::vector<double> levels = cfg.snapshot_levels;
    std::sort(levels.begin(), levels.end());
    std::size_t next_level = 0;

    auto stepper = std::make_unique<CrankNicolsonStepper>(state.grid, sigma);
    std::vector<cplx> previous;
    double tau_unwrapped = std::arg(locate_peak(state.grid, state.psi).value);
    double tau_raw = tau_unwrapped;
    const double p0 = graded_power(state.grid, state.psi);
    double p_ref = p0;
    double h_ref = graded_hamiltonian(state.grid, state.psi, sigma);
    const double lap0 = graded_laplacian_norm2(state.grid, state.psi);
    double lap_ref = lap0;
    double last_dt = 0.0;

    auto record = [&] {
        const cplx c0 = locate_peak(state.grid, state.psi).value;
        const double raw = std::arg(c0);
        double jump = raw - tau_raw;
        jump -= 2.0 * std::numbers::pi * std::round(jump / (2.0 * std::numbers::pi));
        tau_unwrapped += jump;
        tau_raw = raw;
        double sup = std::abs(c0);
        for (const auto& v : state.psi) sup = std::max(sup, std::abs(v));
        const double p = graded_power(state.grid, state.psi);
        const double lap = graded_laplacian_norm2(state.grid, state.psi);
        double pot = 0.0;
        for (int n = 0; n < state.grid.size(); ++n)
            pot += state.grid.weights()[n] * std::pow(std::norm(state.psi[n]), sigma + 1.0);
        const double h = lap - pot / (sigma + 1.0);
        diag.t.push_back(state.t);
        diag.dt.push_back(last_dt);
        diag.focusing.push_back(state.focusing);
        diag.tau.push_back(tau_unwrapped);
        diag.power.push_back(p);
        diag.hamiltonian.push_back(h);
        diag.sup_norm.push_back(sup);
        diag.laplacian_norm2.push_back(lap);
        run.power_drift_between_refinements =
            std::max(run.power_drift_between_refinements, std::abs(p - p_ref) / p_ref);
        run.hamiltonian_drift = std::max(run.hamiltonian_drift, std::abs(h - h_ref) / lap0);
        run.hamiltonian_drift_local = std::max(run.hamiltonian_drift_local, std::abs(h - h_ref) / lap_ref);
        // Tail monitor at 0.9 r_max.
        const auto& r = state.grid.nodes();
        const auto it = std::lower_bound(r.begin(), r.end(), 0.9 * state.grid.r_max());
        if (it != r.end() && std::abs(state.psi[it - r.begin()]) > cfg.tail_warning * sup) run.tail_warning = true;
    };
    auto snapshot = [&](double level) {
        Snapshot s;
        s.t = state.t;
        s.focusing = state.focusing;
        s.level = level;
        s.center = locate_peak(state.grid, state.psi).r;
        s.dim = state.grid.dim();
        s.sigma = sigma;
        s.r_max = state.grid.r_max();
        s.radii = state.grid.nodes();
        s.psi = state.psi;
        run.snapshots.push_back(std::move(s));
    };

    record();
    run.stop = StopReason::kStepLimit;
    for (long k = 0; k < cfg.max_steps; ++k) {
        const double inv_l = 1.0 / state.focusing;
        while (next_level < levels.size() && inv_l >= levels[next_level]) snapshot(levels[next_level++]);
        if (inv_l >= cfg.target_focusing) {
            run.stop = StopReason::kTargetReached;
            break;
        }
        if (cfg.t_end > 0.0 && state.t >= cfg.t_end * (1.0 - 1e-14)) {
            run.stop = StopReason::kTimeLimit;
            break;
        }
        try {
            if (auto ev = maybe_refine(state, cfg.refinement, sigma)) {
                run.refinements.push_back(*ev);
                stepper = std::make_unique<CrankNicolsonStepper>(state.grid, sigma);
                previous.clear();
                p_ref = ev->power_after;
                h_ref = ev->hamiltonian_after;
                lap_ref = graded_laplacian_norm2(state.grid, state.psi);
            }
        } catch (const RefinementCeiling&) {
            run.stop = StopReason::kRefinementCeiling;
            break;
        }
        double dt = std::min(cfg.dt_coefficient * std::pow(state.focusing, 4), cfg.dt_max);
        if (cfg.t_end > 0.0) dt = std::min(dt, cfg.t_end - state.t);
        std::vector<cplx> current = state.psi;
        stepper->step(state.psi, dt, previous.empty() ? nullptr : &previous);
        previous = std::move(current);
        state.t += dt;
        last_dt = dt;
        state.focusing = focusing_length(state.grid, state.psi, sigma);
        ++run.steps;
        record();
    }

    run.power_drift_total = std::abs(diag.power.back() - p0) / p0;
    run.power_flagged = run.power_drift_between_refinements > cfg.power_drift_flag;
    diag.derive();
    run.final_state = std::move(state);
    return run;
}

}  // namespace bnls
