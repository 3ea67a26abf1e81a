#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnls/banded.hpp"
#include "bnls/errors.hpp"
#include "bnls/radial.hpp"

namespace bnls {

/// Raised by maybe_refine once the policy's level ceiling is reached.
class RefinementCeiling : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Spacing law of the graded evolution mesh: h_min at the focus radius,
/// growing roughly geometrically away from it (relative growth `stretch` per
/// node) and saturating at h_max.
struct GradedGridSpec {
    double h_min = 0.025;
    double h_max = 0.025;
    double stretch = 0.025;
    double r_max = 20.0;
    int dim = 1;
    /// Where the mesh is finest; 0 for a core at the origin.
    double focus = 0.0;
};

/// Cell-centred mapped mesh r_n = g(n + 1/2) on [0, r_max], with g odd, g' > 0
/// and g(M) = r_max. Node 0 mirrors to -r_0, so even ghosts at the origin are
/// exact; the outer face sits at r_max.
class GradedGrid {
public:
    explicit GradedGrid(const GradedGridSpec& spec);

    const GradedGridSpec& spec() const { return spec_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    int dim() const { return spec_.dim; }
    double r_max() const { return spec_.r_max; }
    /// Spacing at the focus radius; at most spec().h_min.
    double h_min() const { return h_origin_; }

    double node(int n) const { return nodes_[n]; }
    const std::vector<double>& nodes() const { return nodes_; }
    /// Quadrature weight r_n^{d-1} g'(n + 1/2) for d <= 2, the exact cell
    /// volume (g(n+1)^d - g(n)^d) / d otherwise.
    const std::vector<double>& weights() const { return weights_; }
    /// Face conductance g(n+1)^{d-1} / g'(n+1) between nodes n and n+1;
    /// the last entry belongs to the outer face.
    const std::vector<double>& faces() const { return faces_; }

private:
    GradedGridSpec spec_;
    double h_origin_ = 0.0;
    std::vector<double> nodes_, weights_, faces_;
};

/// Conservative mapped Laplacian with even symmetry at the origin and
/// psi = 0 on the outer face (ghost -psi_{M-1}). Self-adjoint in the
/// weighted inner product sum w_n conj(f_n) g_n.
std::vector<cplx> graded_laplacian(const GradedGrid& grid, std::span<const cplx> f);

/// Sum w_n |f_n|^2.
double graded_power(const GradedGrid& grid, std::span<const cplx> f);
/// ||Delta_h f||^2 - (sigma+1)^{-1} sum w_n |f_n|^{2 sigma + 2}; exactly conserved by the stepper.
double graded_hamiltonian(const GradedGrid& grid, std::span<const cplx> f, double sigma);
/// ||Delta_h f||^2 alone.
double graded_laplacian_norm2(const GradedGrid& grid, std::span<const cplx> f);

/// Quartic resampling between graded grids; even mirror at the origin and
/// odd mirror across the outer face.
std::vector<cplx> resample(const GradedGrid& from, std::span<const cplx> f, const GradedGrid& to);

struct EvolutionState {
    GradedGrid grid;
    std::vector<cplx> psi;
    double t = 0.0;
    int refinement_level = 0;
    /// L = ||psi||_inf^{-sigma/2}.
    double focusing = 1.0;
};

/// Even quadratic extrapolation of psi to r = 0 from the first two nodes.
cplx origin_value(const GradedGrid& grid, std::span<const cplx> psi);

/// Location and value of the maximum of |psi|. A maximum at the first node is
/// reported at r = 0 with the origin extrapolation; elsewhere the radius comes
/// from a parabola through the three nodes around the largest sample and the
/// value from quartic interpolation there.
struct Peak {
    double r = 0.0;
    cplx value{};
};
Peak locate_peak(const GradedGrid& grid, std::span<const cplx> psi);
/// Same on bare samples (radii sorted, at least three).
Peak locate_peak(std::span<const double> radii, std::span<const cplx> psi);

/// L = ||psi||_inf^{-sigma/2} with the sup norm taken from locate_peak.
double focusing_length(const GradedGrid& grid, std::span<const cplx> psi, double sigma);

/// Crank-Nicolson stepper for i psi_t = Delta^2 psi - |psi|^{2 sigma} psi.
///
/// The nonlinearity enters as the real potential
///   V = (F(|psi+|^2) - F(|psi|^2)) / (|psi+|^2 - |psi|^2),  F(s) = s^{sigma+1}/(sigma+1),
/// solved by fixed-point iteration; the discrete power and Hamiltonian are
/// conserved up to the iteration tolerance and round-off.
class CrankNicolsonStepper {
public:
    CrankNicolsonStepper(const GradedGrid& grid, double sigma, bool nonlinear = true);

    /// Advances psi by dt in place. `previous`, when given, is the state one
    /// step earlier and seeds the iteration by linear extrapolation.
    /// Throws NumericalError when the iteration fails or values go non-finite.
    void step(std::vector<cplx>& psi, double dt, const std::vector<cplx>* previous = nullptr);

    /// Fixed-point iterations used by the last step.
    int last_iterations() const { return last_iters_; }
    double tolerance = 1e-14;
    int max_iterations = 60;

private:
    void factor(double dt);

    const GradedGrid& grid_;
    double sigma_;
    bool nonlinear_;
    BandedMatrix bilap_;  // Delta_h^2, pentadiagonal
    double factored_dt_ = -1.0;
    std::optional<BandedLu> lu_;
    int last_iters_ = 0;
};

/// Samples psi0 on the graded grid at t = 0.
EvolutionState make_state(const GradedGridSpec& spec, const std::function<cplx(double)>& psi0, double sigma);

struct RefinementPolicy {
    /// Refine when the core half-width at half-maximum spans fewer than this many h_min.
    int points_across_core = 32;
    int refine_factor = 2;
    int max_level = 40;
};

/// A mesh rebuild: a refinement (h_min divided by the refine factor) or a
/// move of the focus radius to follow an off-centre peak, or both.
struct RefinementEvent {
    double t = 0.0;
    int level = 0;
    bool refined = true;
    double focus = 0.0;
    double h_min = 0.0;
    int nodes = 0;
    double power_before = 0.0, power_after = 0.0;
    double hamiltonian_before = 0.0, hamiltonian_after = 0.0;
};

/// Half-width at half-maximum of |psi| around its peak: the smaller of the
/// inner and outer distances at which |psi| falls to half the peak (linear
/// interpolation between nodes). The inner side is skipped when |psi| stays
/// above half all the way to the origin.
double core_half_width(const GradedGrid& grid, std::span<const cplx> psi);

/// Rebuilds the mesh when the core spans fewer than points_across_core local
/// spacings (h_min shrinks by refine_factor), or when the peak has moved more
/// than a quarter core width from the focus radius. A peak within one core
/// width of the origin is treated as centred. Returns the event, or nothing
/// if the state was left unchanged. Throws RefinementCeiling when a
/// refinement would pass max_level.
std::optional<RefinementEvent> maybe_refine(EvolutionState& state, const RefinementPolicy& policy, double sigma);

struct CollapseConfig {
    double target_focusing = 1e4;  // stop once 1/L reaches this
    double dt_coefficient = 1e-3;  // dt = c L^4
    double dt_max = 1e-3;
    GradedGridSpec grid{};
    RefinementPolicy refinement{};
    std::vector<double> snapshot_levels{1e1, 1e2, 1e3, 1e4};
    long max_steps = 2'000'000;
    double power_drift_flag = 1e-6;
    /// Warn when |psi| at 0.9 r_max exceeds this fraction of the peak.
    double tail_warning = 1e-8;
    /// Run without the admissibility gate (subcritical control runs).
    bool allow_inadmissible = false;
    /// Stop at this time even if the target focusing was not reached (0: no limit).
    double t_end = 0.0;
};

/// Recorded once per step.
///
/// Near collapse dt = c L^4 drops below the resolution of t itself, so the
/// step sizes are kept separately: `dt[i]` is the step that produced sample
/// i and `remaining[i]` the time still to run until the last sample.
/// Derivatives and time-to-collapse fits use these, never differences of t.
struct CollapseDiagnostics {
    std::vector<double> t, dt, focusing, tau, power, hamiltonian, sup_norm, laplacian_norm2;
    /// Derived once the run ends.
    std::vector<double> remaining, l3_lt, l4_tau_t;

    std::size_t size() const { return t.size(); }
    /// Fills remaining, l3_lt = (1/4) d(L^4)/dt and l4_tau_t = L^4 dtau/dt
    /// (three-point nonuniform differences).
    void derive();
};

struct Snapshot {
    double t = 0.0;
    double focusing = 1.0;
    double level = 0.0;  // the decade 1/L that triggered it
    /// Peak radius; rescaled coordinates are measured from here.
    double center = 0.0;
    int dim = 1;
    double sigma = 0.0;
    double r_max = 0.0;
    std::vector<double> radii;
    std::vector<cplx> psi;
};

enum class StopReason { kTargetReached, kTimeLimit, kRefinementCeiling, kStepLimit };
std::string to_string(StopReason r);

struct CollapseRun {
    CollapseDiagnostics diagnostics;
    std::vector<Snapshot> snapshots;
    std::vector<RefinementEvent> refinements;
    StopReason stop = StopReason::kStepLimit;
    long steps = 0;
    /// Largest |P(t) - P(t0)| / P(t0) over stretches between refinements.
    double power_drift_between_refinements = 0.0;
    /// |P_end - P_0| / P_0 including refinement transfers.
    double power_drift_total = 0.0;
    /// Largest |H(t) - H(t0)| over stretches between refinements, divided by
    /// ||Delta psi||^2 at t = 0 and, in the local variant, at the stretch start.
    double hamiltonian_drift = 0.0;
    double hamiltonian_drift_local = 0.0;
    bool power_flagged = false;
    bool tail_warning = false;
    EvolutionState final_state;
};

/// Evolves psi0 until 1/L reaches the target, with dt = c L^4 and graded-mesh
/// refinement of the core. Requires admissible (sigma, dim) unless the config
/// allows otherwise. Throws NumericalError on non-finite values.
CollapseRun run_collapse(const std::function<cplx(double)>& psi0, double sigma, const CollapseConfig& cfg);

}  // namespace bnls
