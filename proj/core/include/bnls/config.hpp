#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bnls/evolution.hpp"
#include "bnls/profile.hpp"
#include "bnls/radial.hpp"

namespace bnls {

/// Configuration problem at a 1-based line and column (0 when not tied to
/// a position, e.g. a missing key).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& what, int line, int column);
    int line;
    int column;
    /// The message without its position prefix.
    std::string reason;
};

enum class RunMode { kProfile, kEvolve, kAnalyze, kReproduce };
std::string to_string(RunMode m);

struct RunConfig {
    RunMode mode = RunMode::kProfile;

    // [physics]
    double sigma = 6.0;
    int dim = 1;
    std::optional<double> nu;
    std::optional<double> kappa;
    bool auto_kappa = false;

    // [numerics]
    double r_max = 160.0;
    int n_points = 32000;
    StencilOrder order = StencilOrder::kFourth;
    int max_iters = 2000;
    double residual_tol = 1e-8;
    double step_tol = 1e-10;
    double dt_coefficient = 1e-3;
    double dt_max = 1e-3;
    double stretch = 0.025;
    int points_across_core = 32;
    int refine_factor = 2;
    int max_level = 40;
    double target_focusing = 1e4;
    long max_steps = 2'000'000;

    // [ic]
    std::string ic;

    // [io]
    std::string out;
    /// Snapshots at every power of ten in 1/L from here up to the target.
    double snapshot_from = 10.0;
    std::string run_dir;
    std::string profile_dir;

    // [reproduce]
    std::string case_id;

    /// Decade levels snapshot_from, 10 snapshot_from, ... <= target_focusing.
    std::vector<double> snapshot_levels() const;
    SlsrConfig slsr() const;
    /// Evolution settings with a uniform starting mesh h = r_max / n_points.
    CollapseConfig collapse() const;
};

/// Parses the sectioned key = value grammar:
///
///   # comment
///   mode = evolve
///   [physics]
///   sigma = 6
///
/// Keys before the first section header belong to the top level. Defaults
/// depend on the mode (profile: r_max 160, 32000 points; evolve: r_max 20,
/// 1600 points). Rejects unknown and duplicate keys, type mismatches,
/// inadmissible (sigma, d) and missing mode-specific keys.
RunConfig parse_config(std::string_view text);

/// Resolved configuration in the same grammar; parse_config(to_text(c))
/// reproduces c.
std::string to_text(const RunConfig& c);

}  // namespace bnls
