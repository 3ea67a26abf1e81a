#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bnls/analysis.hpp"
#include "bnls/config.hpp"
#include "bnls/evolution.hpp"
#include "bnls/profile.hpp"

namespace bnls {

namespace fs = std::filesystem;

/// A pipeline stage failed; `what()` leads with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause, bool numerical)
        : std::runtime_error(stage + ": " + cause), stage(std::move(stage)), numerical(numerical) {}
    std::string stage;
    /// True for NumericalError causes, false for configuration or I/O.
    bool numerical;
};

/// Output root: the BNLS_OUTPUT_ROOT environment variable if set, else ".".
fs::path output_root();

/// Resolves a relative output directory against output_root().
fs::path resolve_output(const fs::path& dir);

/// Writes manifest.json into `dir`: resolved configuration, versions,
/// wall-clock seconds, exit status and SHA-256 of every other file below
/// `dir`. Wall-clock and status live only here, so reruns of the same
/// configuration give identical output checksums.
void write_manifest(const fs::path& dir, const std::string& resolved_config, double wall_seconds, int exit_status);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const fs::path& path);

// Diagnostics CSV: t,L,L3Lt,tau,L4taut,P,H,supnorm,dt,lap2. The step size
// column carries the resolution t loses near collapse.
void write_diagnostics_csv(const fs::path& path, const CollapseDiagnostics& d);
CollapseDiagnostics read_diagnostics_csv(const fs::path& path);

struct ProfileReport {
    double kappa = 0.0;
    double nu = 0.0;
    double residual = 0.0;
    double operator_residual = 0.0;
    double hamiltonian_defect = 0.0;
    double far_field_exponent = 0.0;
    double on_axis = 0.0;
    int iterations = 0;
    bool converged = false;
};

ProfileReport summarize(const ProfileSolution& sol);

/// profile mode: solve (or kappa-search) and write profile.bin, profile.csv,
/// report.json and the manifest into `out`.
ProfileReport run_profile(const RunConfig& cfg, const fs::path& out);

/// evolve mode: diagnostics.csv, snapshots/focus_<level>.{bin,csv},
/// refinements.csv, run.json and the manifest.
CollapseRun run_evolve(const RunConfig& cfg, const fs::path& out);

/// Standing wave (kappa = 0) rescaled to |R(0)| = 1, for profile
/// discrimination. Solved at nu = 1 and mapped with the exact nu-scaling.
RescaledProfile standing_wave_reference(double sigma, int dim, double r_max = 40.0, int n_points = 8000);

struct AnalysisReport {
    LimitEstimate kappa, nu;
    RateFit rate;
    std::vector<double> levels;
    /// Bifurcation radius between consecutive snapshot levels, in the rescaled
    /// coordinate of the earlier level, and r_c = rho L of that level.
    std::vector<double> bifurcation_rho, bifurcation_rc;
    /// Log-log slope of bifurcation_rho against 1/L (1 for a fixed r_c).
    double bifurcation_slope = 0.0;
    double r_c = 0.0;
    double far_field_exponent = 0.0;
    /// Sup distance of the last two rescaled snapshots on rho in [0, 10].
    double self_similarity_distance = 0.0;
    std::optional<double> profile_distance;
    std::optional<double> standing_wave_distance;
};

struct AnalysisOptions {
    LimitOptions limits{};
    RateFitOptions rate{};
    double bifurcation_threshold = 0.05;
    double far_rho_lo = 20.0, far_rho_hi = 300.0;
    bool standing_wave = false;
};

/// Pure analysis of one collapse run.
AnalysisReport analyze_run(const CollapseDiagnostics& diag, const std::vector<Snapshot>& snapshots, double sigma,
                           const ProfileSolution* profile = nullptr, const AnalysisOptions& opts = {});

/// analyze mode: reads a run directory (and optionally a profile directory),
/// writes analysis.json, rescaled_<level>.csv and a manifest into `out`.
AnalysisReport run_analyze(const fs::path& run_dir, const std::optional<fs::path>& profile_dir, const fs::path& out,
                           const AnalysisOptions& opts = {});

struct Observable {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    /// |value - reference| <= tolerance passes, or value <= tolerance when
    /// `upper_bound` is set (reference is then informational).
    double tolerance = 0.0;
    bool upper_bound = false;
    bool pass = false;
};

struct ReproduceReport {
    std::string case_id;
    std::vector<Observable> observables;
    bool all_pass() const;
};

/// Known case ids: d1s6 and d2s3.
std::vector<std::string> reproduce_cases();

/// Runs evolve, analyze, kappa_search at the extracted nu and the
/// comparisons, writing stage outputs and reproduce.json under `out`.
/// Throws std::invalid_argument listing the cases for an unknown id and
/// StageError for a failing stage.
ReproduceReport reproduce(const std::string& case_id, const fs::path& out);

/// Replaces or adds `section.key = value` entries in configuration text.
std::string override_config(std::string_view text, const std::vector<std::pair<std::string, std::string>>& overrides);

/// Cartesian sweep: one run per combination of the axis values, each in
/// out/<key>=<value>[,<key>=<value>...]. Returns the run directories.
std::vector<fs::path> sweep(std::string_view base_config,
                            const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                            const fs::path& out);

/// Runs a parsed configuration in its own mode, writing to `out`.
void run_config(const RunConfig& cfg, const fs::path& out);

}  // namespace bnls
