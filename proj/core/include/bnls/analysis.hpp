#pragma once

#include <string>
#include <vector>

#include "bnls/errors.hpp"
#include "bnls/evolution.hpp"
#include "bnls/profile.hpp"

namespace bnls {

/// Raised when a diagnostic series does not settle over its window.
class NonSettlingError : public NumericalError {
public:
    NonSettlingError(const std::string& what, double trend, double last)
        : NumericalError(what), trend_slope(trend), last_value(last) {}
    double trend_slope;
    double last_value;
};

/// Limit of a diagnostic series over the last decade of focusing.
struct LimitEstimate {
    double value = 0.0;
    /// Log-log slope, against 1/L, of the change between consecutive
    /// log-spaced bins of the series; negative while the series settles.
    double trend_slope = 0.0;
    /// Relative spread (max - min) / |value| of the binned series.
    double spread = 0.0;
    double focusing_lo = 0.0, focusing_hi = 0.0;
    std::size_t samples = 0;
};

struct LimitOptions {
    /// Window [F / decades_back, F] in 1/L, F the largest focusing reached.
    double window_decades = 1.0;
    /// Smallest 1/L the run must have reached.
    double min_focusing = 1e3;
    /// A series whose binned relative spread is below this is accepted
    /// regardless of trend (it has settled to its noise floor).
    double flat_tolerance = 2e-3;
    int bins = 8;
};

/// kappa = (-4 lim L^3 L_t)^{1/4}. Throws std::invalid_argument when the run
/// is too short and NonSettlingError when the series keeps drifting.
LimitEstimate extract_kappa(const CollapseDiagnostics& diag, const LimitOptions& opts = {});

/// nu = lim L^4 dtau/dt. Also throws NumericalError when the unwrapped phase
/// jumps by more than 0.9 pi between samples.
LimitEstimate extract_nu(const CollapseDiagnostics& diag, const LimitOptions& opts = {});

/// log L = log A + p log(T_c - t), fitted jointly in (A, p, T_c).
struct RateFit {
    double p = 0.0;
    /// Prefactor A; equals kappa when p = 1/4.
    double kappa = 0.0;
    /// T_c minus the last sample time; T_c itself is t.back() + this.
    double tc_after_last = 0.0;
    double t_c = 0.0;
    double focusing_lo = 0.0, focusing_hi = 0.0;
    double rms_log_residual = 0.0;
    /// Relative spread of (-4 L^3 L_t)^{1/4} over the window: the T_c-free check.
    double kappa_series_spread = 0.0;
    std::size_t samples = 0;
};

struct RateFitOptions {
    /// Window in 1/L; hi <= 0 means the largest focusing reached.
    double focusing_lo = 10.0;
    double focusing_hi = 0.0;
    double min_decades = 2.0;
};

/// Variable projection: for fixed T_c the fit is linear in (log A, p), and
/// T_c is found by a bounded minimization of the residual. Times to collapse
/// come from the accumulated step sizes. Throws NumericalError for a window
/// shorter than min_decades or a T_c pinned to its search bound.
RateFit fit_blowup_rate(const CollapseDiagnostics& diag, const RateFitOptions& opts = {});

/// L^{2/sigma} psi(center + rho L), sampled at the snapshot nodes outward from
/// the peak. rho = 0 carries the peak value, so |values[0]| = 1.
struct RescaledProfile {
    std::vector<double> rho;
    std::vector<cplx> values;
    double focusing = 1.0;

    /// Quartic interpolation; rho must lie inside the sampled range.
    cplx at(double r) const;
};

RescaledProfile rescale_snapshot(const Snapshot& snap, double sigma);

/// max | |a(rho)| - |b(rho)| | over rho in [0, rho_max] and the overlap of
/// both ranges. Throws std::invalid_argument when the ranges do not overlap.
double compare_to_profile(const RescaledProfile& rescaled, const ProfileSolution& sol, double rho_max = 10.0);

/// Same comparison between two rescaled profiles.
double compare_profiles(const RescaledProfile& a, const RescaledProfile& b, double rho_max = 10.0);

/// Smallest rho > 0 on a's nodes where | |a| - |b| | / |b| exceeds the
/// threshold. Throws NumericalError when the profiles never separate.
double bifurcation_radius(const RescaledProfile& a, const RescaledProfile& b, double threshold = 0.05);

/// Log-log fit of |profile| over [rho_lo, rho_hi].
FarFieldFit far_field_exponent(const RescaledProfile& profile, double rho_lo, double rho_hi);

struct UniversalityRun {
    std::string label;
    double sigma = 0.0;
    int dim = 1;
    CollapseDiagnostics diagnostics;
};

struct UniversalityRow {
    std::string label;
    LimitEstimate kappa, nu;
};

struct UniversalityReport {
    std::vector<UniversalityRow> rows;
    /// Largest pairwise |a - b| / mean over the runs.
    double kappa_spread = 0.0;
    double nu_spread = 0.0;
};

/// Compares kappa and nu across runs of the same (sigma, d). Throws
/// std::invalid_argument for fewer than two runs or mismatched parameters.
UniversalityReport universality_check(const std::vector<UniversalityRun>& runs, const LimitOptions& opts = {});

}  // namespace bnls
