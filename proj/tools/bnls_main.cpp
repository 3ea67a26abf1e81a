#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bnls/config.hpp"
#include "bnls/errors.hpp"
#include "bnls/expression.hpp"
#include "bnls/pipeline.hpp"
#include "bnls/snapshot_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kAcceptanceMismatch = 4;

using Overrides = std::vector<std::pair<std::string, std::string>>;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Flags on top of an optional config file; the result goes through the
// same parser, so flag values get the same validation as file values.
bnls::RunConfig build_config(const std::string& mode, const std::string& config_file, const Overrides& flags) {
    std::string text = config_file.empty() ? "mode = " + mode + "\n" : read_file(config_file);
    text = bnls::override_config(text, flags);
    bnls::RunConfig cfg;
    try {
        cfg = bnls::parse_config(text);
    } catch (const bnls::ConfigError& e) {
        // Positions in generated text mean nothing to the user.
        if (config_file.empty()) throw bnls::ConfigError(e.reason, 0, 0);
        throw;
    }
    if (bnls::to_string(cfg.mode) != mode)
        throw bnls::ConfigError("config file is for mode '" + bnls::to_string(cfg.mode) + "', not '" + mode + "'", 0, 0);
    return cfg;
}

template <class T>
void flag(Overrides& o, const std::string& key, const std::optional<T>& v) {
    if (v) o.emplace_back(key, fmt::format("{}", *v));
}

std::filesystem::path out_dir(const std::string& flag_value, const bnls::RunConfig& cfg, const std::string& fallback) {
    const std::string dir = !flag_value.empty() ? flag_value : !cfg.out.empty() ? cfg.out : fallback;
    return bnls::resolve_output(dir);
}

void print_observables(const bnls::ReproduceReport& r) {
    fmt::print("case {}\n", r.case_id);
    for (const auto& o : r.observables) {
        if (o.upper_bound)
            fmt::print("  {:<26} {:>12.6g}  <= {:<10.4g}          {}\n", o.name, o.value, o.tolerance,
                       o.pass ? "pass" : "FAIL");
        else
            fmt::print("  {:<26} {:>12.6g}  ref {:<10.6g} +- {:<8.3g} {}\n", o.name, o.value, o.reference, o.tolerance,
                       o.pass ? "pass" : "FAIL");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supercritical biharmonic NLS collapse: profiles, evolution and analysis"};
    app.require_subcommand(1);

    // profile
    auto* profile = app.add_subcommand("profile", "Solve for the self-similar profile S");
    std::string profile_config, profile_out;
    std::optional<double> p_sigma, p_nu, p_kappa, p_rmax;
    std::optional<int> p_dim, p_npoints, p_order;
    bool p_auto = false;
    profile->add_option("--config", profile_config, "Configuration file")->check(CLI::ExistingFile);
    profile->add_option("--sigma", p_sigma, "Nonlinearity exponent");
    profile->add_option("--dim", p_dim, "Spatial dimension");
    profile->add_option("--nu", p_nu, "Phase rate nu");
    auto* kappa_opt = profile->add_option("--kappa", p_kappa, "Fixed kappa");
    profile->add_flag("--auto-kappa", p_auto, "Search kappa so that |S(0)| = 1")->excludes(kappa_opt);
    profile->add_option("--rmax", p_rmax, "Outer radius");
    profile->add_option("--npoints", p_npoints, "Number of grid points");
    profile->add_option("--order", p_order, "Stencil order (2 or 4)");
    profile->add_option("--out", profile_out, "Output directory");

    // evolve
    auto* evolve = app.add_subcommand("evolve", "Evolve initial data towards collapse");
    std::string evolve_config, evolve_out;
    std::optional<double> e_sigma, e_target, e_rmax;
    std::optional<int> e_dim, e_npoints;
    std::optional<std::string> e_ic;
    evolve->add_option("--config", evolve_config, "Configuration file")->check(CLI::ExistingFile);
    evolve->add_option("--sigma", e_sigma, "Nonlinearity exponent");
    evolve->add_option("--dim", e_dim, "Spatial dimension");
    evolve->add_option("--ic", e_ic, "Initial data, e.g. \"1.6*exp(-x^2)\"");
    evolve->add_option("--target-focusing", e_target, "Stop once 1/L reaches this");
    evolve->add_option("--rmax", e_rmax, "Outer radius");
    evolve->add_option("--npoints", e_npoints, "Initial number of grid points");
    evolve->add_option("--out", evolve_out, "Output directory");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Extract kappa, nu, p and profile comparisons from a run");
    std::string run_dir, profile_dir, analyze_out;
    double threshold = 0.05;
    analyze->add_option("run-dir", run_dir, "Directory written by evolve")->required()->check(CLI::ExistingDirectory);
    analyze->add_option("--profile", profile_dir, "Directory written by profile")->check(CLI::ExistingDirectory);
    analyze->add_option("--threshold", threshold, "Relative threshold for bifurcation radii")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--out", analyze_out, "Output directory (default <run-dir>/analysis)");

    // reproduce
    auto* repro = app.add_subcommand("reproduce", "End-to-end run of a reference case against published values");
    std::string case_id, repro_out;
    repro->add_option("case", case_id, "Case id (d1s6 or d2s3)")->required();
    repro->add_option("--out", repro_out, "Output directory (default reproduce/<case>)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep over a base configuration");
    std::string sweep_config, sweep_out = "sweep";
    std::vector<std::string> axes;
    sweep->add_option("--config", sweep_config, "Base configuration file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--set", axes, "section.key=v1,v2,... (repeatable)")->required();
    sweep->add_option("--out", sweep_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (profile->parsed()) {
            Overrides o;
            flag(o, "physics.sigma", p_sigma);
            flag(o, "physics.dim", p_dim);
            flag(o, "physics.nu", p_nu);
            flag(o, "physics.kappa", p_kappa);
            if (p_auto) o.emplace_back("physics.auto_kappa", "true");
            flag(o, "numerics.r_max", p_rmax);
            flag(o, "numerics.n_points", p_npoints);
            flag(o, "numerics.order", p_order);
            const auto cfg = build_config("profile", profile_config, o);
            const auto out = out_dir(profile_out, cfg, "profile");
            const auto r = bnls::run_profile(cfg, out);
            fmt::print("kappa {:.6f}  nu {:.6f}  |S(0)| {:.6f}  residual {:.3e}  H defect {:.3e}  far exponent {:.4f}\n",
                       r.kappa, r.nu, r.on_axis, r.residual, r.hamiltonian_defect, r.far_field_exponent);
            fmt::print("wrote {}\n", out.string());
        } else if (evolve->parsed()) {
            Overrides o;
            flag(o, "physics.sigma", e_sigma);
            flag(o, "physics.dim", e_dim);
            flag(o, "ic.psi0", e_ic);
            flag(o, "numerics.target_focusing", e_target);
            flag(o, "numerics.r_max", e_rmax);
            flag(o, "numerics.n_points", e_npoints);
            const auto cfg = build_config("evolve", evolve_config, o);
            const auto out = out_dir(evolve_out, cfg, "evolve");
            const auto run = bnls::run_evolve(cfg, out);
            fmt::print("stop {}  steps {}  1/L {:.4g}  refinements {}  power drift {:.2e}\n", bnls::to_string(run.stop),
                       run.steps, 1.0 / run.diagnostics.focusing.back(), run.refinements.size(),
                       run.power_drift_total);
            fmt::print("wrote {}\n", out.string());
        } else if (analyze->parsed()) {
            bnls::AnalysisOptions opts;
            opts.bifurcation_threshold = threshold;
            const auto out = analyze_out.empty() ? std::filesystem::path(run_dir) / "analysis"
                                                 : bnls::resolve_output(analyze_out);
            const auto r = bnls::run_analyze(
                run_dir, profile_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(profile_dir), out,
                opts);
            fmt::print("kappa {:.5f}  nu {:.5f}  p {:.5f}  r_c {:.4f}  far exponent {:.4f}\n", r.kappa.value,
                       r.nu.value, r.rate.p, r.r_c, r.far_field_exponent);
            if (r.profile_distance) fmt::print("distance to profile {:.3e}\n", *r.profile_distance);
            fmt::print("wrote {}\n", out.string());
        } else if (repro->parsed()) {
            const auto out = bnls::resolve_output(repro_out.empty() ? "reproduce/" + case_id : repro_out);
            const auto r = bnls::reproduce(case_id, out);
            print_observables(r);
            fmt::print("wrote {}\n", (out / "reproduce.json").string());
            return r.all_pass() ? kOk : kAcceptanceMismatch;
        } else if (sweep->parsed()) {
            std::vector<std::pair<std::string, std::vector<std::string>>> parsed;
            for (const auto& a : axes) {
                const auto eq = a.find('=');
                if (eq == std::string::npos || eq == 0) throw bnls::ConfigError("--set expects key=v1,v2,...: " + a, 0, 0);
                std::vector<std::string> values;
                std::stringstream ss(a.substr(eq + 1));
                for (std::string v; std::getline(ss, v, ',');) values.push_back(v);
                parsed.emplace_back(a.substr(0, eq), values);
            }
            const auto dirs = bnls::sweep(read_file(sweep_config), parsed, bnls::resolve_output(sweep_out));
            for (const auto& d : dirs) fmt::print("wrote {}\n", d.string());
        }
    } catch (const bnls::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.numerical ? kNumericalFailure : kConfigError;
    } catch (const bnls::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        // ConfigError, ExpressionError, AdmissibilityError, bad paths.
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const bnls::FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
