#include "bnls/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace bnls {

namespace {

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

struct LineFit {
    double intercept = 0.0, slope = 0.0, rss = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    LineFit f;
    f.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    f.intercept = (sy - f.slope * sx) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.rss += r * r;
    }
    return f;
}

double max_focusing(const CollapseDiagnostics& diag) {
    double f = 0.0;
    for (double l : diag.focusing) f = std::max(f, 1.0 / l);
    return f;
}

void require_derived(const CollapseDiagnostics& diag) {
    if (diag.size() < 3) throw std::invalid_argument("analysis: need at least three diagnostic samples");
    if (diag.l3_lt.size() != diag.size() || diag.remaining.size() != diag.size())
        throw std::invalid_argument("analysis: diagnostics have not been derived");
}

// Windowed limit of series(i) over the last decades of focusing.
LimitEstimate settle(const CollapseDiagnostics& diag, const LimitOptions& opts, const char* name,
                     const std::function<double(std::size_t)>& series) {
    require_derived(diag);
    const double top = max_focusing(diag);
    if (top < opts.min_focusing) {
        std::ostringstream os;
        os << name << ": the run reached 1/L = " << top << ", below the required " << opts.min_focusing;
        throw std::invalid_argument(os.str());
    }
    const double lo = top / std::pow(10.0, opts.window_decades);
    const int bins = std::max(2, opts.bins);
    std::vector<std::vector<double>> binned(bins);
    std::size_t samples = 0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double f = 1.0 / diag.focusing[i];
        if (f < lo) continue;
        const double v = series(i);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << name << ": series is undefined at 1/L = " << f;
            throw NonSettlingError(os.str(), std::numeric_limits<double>::quiet_NaN(), v);
        }
        const int b = std::min(bins - 1, static_cast<int>(bins * std::log(f / lo) / std::log(top / lo)));
        binned[b].push_back(v);
        ++samples;
    }
    std::vector<double> centre, level;
    for (int b = 0; b < bins; ++b) {
        if (binned[b].empty()) continue;
        centre.push_back(std::log(lo) + (b + 0.5) / bins * std::log(top / lo));
        level.push_back(median(binned[b]));
    }
    if (level.size() < 3) {
        std::ostringstream os;
        os << name << ": too few samples in the focusing window [" << lo << ", " << top << "]";
        throw std::invalid_argument(os.str());
    }
    LimitEstimate est;
    est.value = level.back();
    est.focusing_lo = lo;
    est.focusing_hi = top;
    est.samples = samples;
    const auto [mn, mx] = std::minmax_element(level.begin(), level.end());
    est.spread = (*mx - *mn) / std::abs(est.value);
    // Trend of the bin-to-bin increments: negative while the series settles.
    std::vector<double> x, y;
    for (std::size_t k = 0; k + 1 < level.size(); ++k) {
        const double step = std::abs(level[k + 1] - level[k]);
        if (step > 0.0) {
            x.push_back(0.5 * (centre[k] + centre[k + 1]));
            y.push_back(std::log(step));
        }
    }
    est.trend_slope = x.size() >= 2 ? fit_line(x, y).slope : 0.0;
    if (est.trend_slope >= 0.0 && est.spread > opts.flat_tolerance) {
        std::ostringstream os;
        os << name << ": series does not settle over 1/L in [" << lo << ", " << top
           << "] (trend slope " << est.trend_slope << ", spread " << est.spread << ", last " << est.value << ")";
        throw NonSettlingError(os.str(), est.trend_slope, est.value);
    }
    return est;
}

}  // namespace

LimitEstimate extract_kappa(const CollapseDiagnostics& diag, const LimitOptions& opts) {
    return settle(diag, opts, "extract_kappa", [&](std::size_t i) {
        const double q = -4.0 * diag.l3_lt[i];
        return q > 0.0 ? std::pow(q, 0.25) : std::numeric_limits<double>::quiet_NaN();
    });
}

LimitEstimate extract_nu(const CollapseDiagnostics& diag, const LimitOptions& opts) {
    require_derived(diag);
    for (std::size_t i = 1; i < diag.size(); ++i)
        if (std::abs(diag.tau[i] - diag.tau[i - 1]) > 0.9 * std::numbers::pi) {
            std::ostringstream os;
            os << "extract_nu: phase jumps by " << diag.tau[i] - diag.tau[i - 1] << " between samples " << i - 1
               << " and " << i << "; sampling is too coarse to unwrap";
            throw NumericalError(os.str());
        }
    return settle(diag, opts, "extract_nu", [&](std::size_t i) { return diag.l4_tau_t[i]; });
}

RateFit fit_blowup_rate(const CollapseDiagnostics& diag, const RateFitOptions& opts) {
    require_derived(diag);
    const double top = opts.focusing_hi > 0.0 ? opts.focusing_hi : max_focusing(diag);
    std::vector<double> s, logl;
    std::vector<std::size_t> idx;
    double f_lo = std::numeric_limits<double>::infinity(), f_hi = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double f = 1.0 / diag.focusing[i];
        if (f < opts.focusing_lo || f > top) continue;
        s.push_back(diag.remaining[i]);
        logl.push_back(std::log(diag.focusing[i]));
        idx.push_back(i);
        f_lo = std::min(f_lo, f);
        f_hi = std::max(f_hi, f);
    }
    if (s.size() < 8 || std::log10(f_hi / f_lo) < opts.min_decades - 0.01) {
        std::ostringstream os;
        os << "fit_blowup_rate: the window covers 1/L in [" << f_lo << ", " << f_hi << "], fewer than "
           << opts.min_decades << " decades";
        throw NumericalError(os.str());
    }

    std::vector<double> x(s.size());
    auto rss = [&](double log_delta) {
        const double delta = std::exp(log_delta);
        for (std::size_t k = 0; k < s.size(); ++k) x[k] = std::log(s[k] + delta);
        return fit_line(x, logl).rss;
    };
    // T_c - t_last is of order L_last^4 / kappa^4.
    const double guess = 4.0 * logl.back();
    const double lo = guess - 16.0, hi = guess + 16.0;
    const auto [best, value] = boost::math::tools::brent_find_minima(rss, lo, hi, 50);
    (void)value;
    if (best - lo < 1e-3 || hi - best < 1e-3)
        throw NumericalError("fit_blowup_rate: collapse time is pinned to its search bound; fit is ill-conditioned");

    const double delta = std::exp(best);
    for (std::size_t k = 0; k < s.size(); ++k) x[k] = std::log(s[k] + delta);
    const LineFit line = fit_line(x, logl);

    RateFit fit;
    fit.p = line.slope;
    fit.kappa = std::exp(line.intercept);
    fit.tc_after_last = delta;
    fit.t_c = diag.t.back() + delta;
    fit.focusing_lo = f_lo;
    fit.focusing_hi = f_hi;
    fit.samples = s.size();
    fit.rms_log_residual = std::sqrt(line.rss / static_cast<double>(s.size()));
    double kmin = std::numeric_limits<double>::infinity(), kmax = 0.0, ksum = 0.0;
    for (std::size_t i : idx) {
        const double k = std::pow(std::max(0.0, -4.0 * diag.l3_lt[i]), 0.25);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
        ksum += k;
    }
    fit.kappa_series_spread = (kmax - kmin) / (ksum / static_cast<double>(idx.size()));
    return fit;
}

cplx RescaledProfile::at(double r) const {
    if (rho.empty() || r < 0.0 || r > rho.back()) throw std::invalid_argument("RescaledProfile::at: rho outside the sampled range");
    return sample_quartic(rho, values, r);
}

RescaledProfile rescale_snapshot(const Snapshot& snap, double sigma) {
    if (snap.radii.size() != snap.psi.size() || snap.radii.size() < 3)
        throw std::invalid_argument("rescale_snapshot: malformed snapshot");
    const Peak pk = locate_peak(snap.radii, snap.psi);
    const double top = std::abs(pk.value);
    if (!(top > 0.0)) throw std::invalid_argument("rescale_snapshot: snapshot is zero");
    RescaledProfile out;
    out.focusing = std::pow(top, -0.5 * sigma);
    const double scale = 1.0 / top;  // L^{2/sigma}
    out.rho.push_back(0.0);
    out.values.push_back(pk.value * scale);
    for (std::size_t n = 0; n < snap.radii.size(); ++n) {
        if (snap.radii[n] <= pk.r) continue;
        out.rho.push_back((snap.radii[n] - pk.r) / out.focusing);
        out.values.push_back(snap.psi[n] * scale);
    }
    return out;
}

namespace {

template <class Ref>
double modulus_distance(const RescaledProfile& a, double b_range, double rho_max, Ref&& b_at) {
    const double hi = std::min({rho_max, a.rho.empty() ? 0.0 : a.rho.back(), b_range});
    if (!(hi > 0.0)) throw std::invalid_argument("profile comparison: the rho ranges do not overlap");
    double d = 0.0;
    for (std::size_t n = 0; n < a.rho.size() && a.rho[n] <= hi; ++n)
        d = std::max(d, std::abs(std::abs(a.values[n]) - std::abs(b_at(a.rho[n]))));
    return d;
}

}  // namespace

double compare_to_profile(const RescaledProfile& rescaled, const ProfileSolution& sol, double rho_max) {
    const auto& g = sol.s.grid();
    const auto nodes = g.nodes();
    const auto v = sol.s.values();
    return modulus_distance(rescaled, g.r_max(), rho_max, [&](double r) {
        return r == 0.0 ? value_at_origin(nodes[0], v[0], nodes[1], v[1]) : sample_quartic(nodes, v, r);
    });
}

double compare_profiles(const RescaledProfile& a, const RescaledProfile& b, double rho_max) {
    return modulus_distance(a, b.rho.empty() ? 0.0 : b.rho.back(), rho_max, [&](double r) { return b.at(r); });
}

double bifurcation_radius(const RescaledProfile& a, const RescaledProfile& b, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("bifurcation_radius: threshold must be positive");
    const double hi = std::min(a.rho.back(), b.rho.back());
    for (std::size_t n = 1; n < a.rho.size() && a.rho[n] <= hi; ++n) {
        const double bb = std::abs(b.at(a.rho[n]));
        if (std::abs(std::abs(a.values[n]) - bb) > threshold * bb) return a.rho[n];
    }
    std::ostringstream os;
    os << "bifurcation_radius: profiles never separate by " << threshold << " on rho in [0, " << hi << "]";
    throw NumericalError(os.str());
}

FarFieldFit far_field_exponent(const RescaledProfile& profile, double rho_lo, double rho_hi) {
    return power_law_fit(profile.rho, profile.values, rho_lo, rho_hi);
}

UniversalityReport universality_check(const std::vector<UniversalityRun>& runs, const LimitOptions& opts) {
    if (runs.size() < 2) throw std::invalid_argument("universality_check: need at least two runs");
    for (const auto& r : runs)
        if (r.sigma != runs.front().sigma || r.dim != runs.front().dim)
            throw std::invalid_argument("universality_check: runs differ in (sigma, d)");
    UniversalityReport rep;
    for (const auto& r : runs) rep.rows.push_back({r.label, extract_kappa(r.diagnostics, opts), extract_nu(r.diagnostics, opts)});
    auto spread = [&](auto&& get) {
        double worst = 0.0;
        for (std::size_t i = 0; i < rep.rows.size(); ++i)
            for (std::size_t j = i + 1; j < rep.rows.size(); ++j) {
                const double a = get(rep.rows[i]), b = get(rep.rows[j]);
                worst = std::max(worst, std::abs(a - b) / (0.5 * std::abs(a + b)));
            }
        return worst;
    };
    rep.kappa_spread = spread([](const UniversalityRow& r) { return r.kappa.value; });
    rep.nu_spread = spread([](const UniversalityRow& r) { return r.nu.value; });
    return rep;
}

}  // namespace bnls
