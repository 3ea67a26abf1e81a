#include "bnls/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "bnls/errors.hpp"
#include "bnls/expression.hpp"
#include "bnls/snapshot_io.hpp"

#ifndef BNLS_VERSION
#define BNLS_VERSION "0.0.0"
#endif

namespace bnls {

using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    return json::parse(in);
}

std::string level_name(double level) { return fmt::format("{:.0f}", level); }

std::vector<fs::path> files_below(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

// Runs one stage, mapping failures to StageError.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const NumericalError& e) {
        throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(name, e.what(), false);
    }
}

}  // namespace

fs::path output_root() {
    const char* root = std::getenv("BNLS_OUTPUT_ROOT");
    return root && *root ? fs::path(root) : fs::path(".");
}

fs::path resolve_output(const fs::path& dir) { return dir.is_absolute() ? dir : output_root() / dir; }

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

void write_manifest(const fs::path& dir, const std::string& resolved_config, double wall_seconds, int exit_status) {
    json outputs = json::object();
    for (const auto& f : files_below(dir)) {
        // Manifests carry wall-clock time; leaving them out keeps the
        // checksums reproducible when directories nest.
        if (f.filename() == "manifest.json") continue;
        outputs[fs::relative(f, dir).generic_string()] = sha256_file(f);
    }
    json m;
    m["config"] = resolved_config;
    m["versions"] = {{"bnls", BNLS_VERSION}, {"field_format", kFieldFormatRadii}};
    m["wall_clock_seconds"] = wall_seconds;
    m["exit_status"] = exit_status;
    m["outputs"] = outputs;
    write_json(dir / "manifest.json", m);
}

void write_diagnostics_csv(const fs::path& path, const CollapseDiagnostics& d) {
    auto out = fmt::output_file(path.string());
    out.print("t,L,L3Lt,tau,L4taut,P,H,supnorm,dt,lap2\n");
    for (std::size_t i = 0; i < d.size(); ++i)
        out.print("{},{},{},{},{},{},{},{},{},{}\n", d.t[i], d.focusing[i], d.l3_lt[i], d.tau[i], d.l4_tau_t[i],
                  d.power[i], d.hamiltonian[i], d.sup_norm[i], d.dt[i], d.laplacian_norm2[i]);
}

CollapseDiagnostics read_diagnostics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,L,L3Lt,tau,L4taut,P,H,supnorm,dt", 0) != 0)
        throw FormatError(path.string() + ": unexpected diagnostics header");
    CollapseDiagnostics d;
    std::vector<double>* cols[] = {&d.t, &d.focusing, &d.l3_lt, &d.tau, &d.l4_tau_t, &d.power,
                                   &d.hamiltonian, &d.sup_norm, &d.dt, &d.laplacian_norm2};
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t c = 0; c < std::size(cols); ++c) {
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || (next != end && *next != ','))
                throw FormatError(fmt::format("{}: line {}, column {}: bad number", path.string(), line_no, c + 1));
            cols[c]->push_back(v);
            p = next == end ? end : next + 1;
        }
    }
    // Recomputed from the exact columns; identical to what was written.
    d.derive();
    return d;
}

ProfileReport summarize(const ProfileSolution& sol) {
    ProfileReport r;
    r.kappa = sol.params.kappa;
    r.nu = sol.params.nu;
    r.residual = sol.residual;
    r.operator_residual = sol.operator_residual;
    r.hamiltonian_defect = verify_zero_hamiltonian(sol).defect;
    r.far_field_exponent = far_field_fit(sol).exponent;
    r.on_axis = sol.on_axis;
    r.iterations = sol.iterations;
    r.converged = sol.converged;
    return r;
}

ProfileReport run_profile(const RunConfig& cfg, const fs::path& out) {
    const auto t0 = Clock::now();
    if (!cfg.nu) throw ConfigError("profile mode needs 'physics.nu'", 0, 0);
    const auto grid = make_grid(cfg.n_points, cfg.r_max, cfg.dim);
    ProfileSolution sol = cfg.auto_kappa
                              ? kappa_search(grid, cfg.sigma, *cfg.nu, cfg.slsr(), {}, cfg.order).solution
                              : solve_profile(grid, cfg.sigma, cfg.kappa.value(), *cfg.nu, cfg.slsr(), cfg.order);
    const ProfileReport rep = summarize(sol);

    fs::create_directories(out);
    write_field(out / "profile.bin", sol.s, cfg.sigma);
    write_csv(out / "profile.csv", grid.nodes(), sol.s.values());
    json j;
    j["sigma"] = cfg.sigma;
    j["dim"] = cfg.dim;
    j["order"] = static_cast<int>(cfg.order);
    j["kappa"] = rep.kappa;
    j["nu"] = rep.nu;
    j["residual"] = rep.residual;
    j["operator_residual"] = rep.operator_residual;
    j["hamiltonian_defect"] = rep.hamiltonian_defect;
    j["far_field_exponent"] = rep.far_field_exponent;
    j["on_axis"] = rep.on_axis;
    j["phase_drift"] = sol.phase_drift;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    write_json(out / "report.json", j);
    write_manifest(out, to_text(cfg), seconds_since(t0), 0);
    return rep;
}

CollapseRun run_evolve(const RunConfig& cfg, const fs::path& out) {
    const auto t0 = Clock::now();
    const auto expr = RadialExpression::parse(cfg.ic);
    const CollapseRun run = run_collapse([&expr](double r) { return cplx(expr(r)); }, cfg.sigma, cfg.collapse());

    fs::create_directories(out / "snapshots");
    write_diagnostics_csv(out / "diagnostics.csv", run.diagnostics);
    json snaps = json::array();
    for (const auto& s : run.snapshots) {
        const auto stem = out / "snapshots" / ("focus_" + level_name(s.level));
        write_snapshot(stem.string() + ".bin", s);
        write_csv(stem.string() + ".csv", s.radii, s.psi);
        snaps.push_back({{"level", s.level}, {"focusing", s.focusing}, {"t", s.t}, {"center", s.center},
                         {"file", "snapshots/" + stem.filename().string() + ".bin"}});
    }
    {
        auto f = fmt::output_file((out / "refinements.csv").string());
        f.print("t,level,refined,focus,h_min,nodes,P_before,P_after,H_before,H_after\n");
        for (const auto& e : run.refinements)
            f.print("{},{},{},{},{},{},{},{},{},{}\n", e.t, e.level, e.refined ? 1 : 0, e.focus, e.h_min, e.nodes,
                    e.power_before, e.power_after, e.hamiltonian_before, e.hamiltonian_after);
    }
    json j;
    j["sigma"] = cfg.sigma;
    j["dim"] = cfg.dim;
    j["ic"] = cfg.ic;
    j["scheme"] = "Crank-Nicolson, discrete-gradient nonlinearity, graded cell-centred mesh, second order";
    j["stop"] = to_string(run.stop);
    j["steps"] = run.steps;
    j["final_focusing"] = run.diagnostics.size() ? 1.0 / run.diagnostics.focusing.back() : 0.0;
    j["refinements"] = run.refinements.size();
    j["power_drift_between_refinements"] = run.power_drift_between_refinements;
    j["power_drift_total"] = run.power_drift_total;
    j["hamiltonian_drift"] = run.hamiltonian_drift;
    j["hamiltonian_drift_local"] = run.hamiltonian_drift_local;
    j["power_flagged"] = run.power_flagged;
    j["tail_warning"] = run.tail_warning;
    j["snapshots"] = snaps;
    write_json(out / "run.json", j);
    write_manifest(out, to_text(cfg), seconds_since(t0), 0);
    return run;
}

RescaledProfile standing_wave_reference(double sigma, int dim, double r_max, int n_points) {
    const auto grid = make_grid(n_points, r_max, dim);
    const auto sol = solve_standing_wave(grid, sigma, 1.0);
    // R_nu(rho) = nu^{1/(2 sigma)} R_1(nu^{1/4} rho) with |R_nu(0)| = 1.
    const auto v = sol.s.values();
    const auto nodes = grid.nodes();
    const cplx at0 = value_at_origin(nodes[0], v[0], nodes[1], v[1]);
    const double a0 = std::abs(at0);
    const double stretch = std::pow(a0, sigma / 2.0);
    RescaledProfile out;
    out.rho.push_back(0.0);
    out.values.push_back(at0 / a0);
    for (int n = 0; n < grid.size(); ++n) {
        out.rho.push_back(nodes[n] * stretch);
        out.values.push_back(v[n] / a0);
    }
    return out;
}

AnalysisReport analyze_run(const CollapseDiagnostics& diag, const std::vector<Snapshot>& snapshots, double sigma,
                           const ProfileSolution* profile, const AnalysisOptions& opts) {
    AnalysisReport rep;
    rep.kappa = extract_kappa(diag, opts.limits);
    rep.nu = extract_nu(diag, opts.limits);
    rep.rate = fit_blowup_rate(diag, opts.rate);

    std::vector<RescaledProfile> rescaled;
    for (const auto& s : snapshots) {
        rescaled.push_back(rescale_snapshot(s, sigma));
        rep.levels.push_back(s.level);
    }
    // A pair that never separates is recorded as NaN and left out of the fit.
    std::vector<double> xs, ys, rcs;
    for (std::size_t i = 0; i + 1 < rescaled.size(); ++i) {
        double rho = std::numeric_limits<double>::quiet_NaN();
        try {
            rho = bifurcation_radius(rescaled[i], rescaled[i + 1], opts.bifurcation_threshold);
            xs.push_back(std::log(1.0 / rescaled[i].focusing));
            ys.push_back(std::log(rho));
            rcs.push_back(rho * rescaled[i].focusing);
        } catch (const NumericalError&) {
        }
        rep.bifurcation_rho.push_back(rho);
        rep.bifurcation_rc.push_back(rho * rescaled[i].focusing);
    }
    if (xs.size() >= 2) {
        // Least squares of log rho against log(1/L) of the earlier level.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        rep.bifurcation_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        std::nth_element(rcs.begin(), rcs.begin() + rcs.size() / 2, rcs.end());
        rep.r_c = rcs[rcs.size() / 2];
    }
    if (!rescaled.empty()) {
        const auto& last = rescaled.back();
        if (last.rho.back() > opts.far_rho_hi)
            rep.far_field_exponent = far_field_exponent(last, opts.far_rho_lo, opts.far_rho_hi).exponent;
        if (rescaled.size() >= 2) rep.self_similarity_distance = compare_profiles(rescaled[rescaled.size() - 2], last);
        if (profile) rep.profile_distance = compare_to_profile(last, *profile);
        if (opts.standing_wave)
            rep.standing_wave_distance = compare_profiles(last, standing_wave_reference(sigma, snapshots.back().dim));
    }
    return rep;
}

namespace {

json to_json(const LimitEstimate& e) {
    return {{"value", e.value},       {"trend_slope", e.trend_slope}, {"spread", e.spread},
            {"focusing_lo", e.focusing_lo}, {"focusing_hi", e.focusing_hi}, {"samples", e.samples}};
}

json to_json(const AnalysisReport& r) {
    json j;
    j["kappa"] = to_json(r.kappa);
    j["nu"] = to_json(r.nu);
    j["p"] = r.rate.p;
    j["kappa_fit"] = r.rate.kappa;
    j["t_c"] = r.rate.t_c;
    j["tc_after_last"] = r.rate.tc_after_last;
    j["rate_fit_rms"] = r.rate.rms_log_residual;
    j["levels"] = r.levels;
    j["bifurcation_rho"] = r.bifurcation_rho;
    j["bifurcation_rc"] = r.bifurcation_rc;
    j["bifurcation_slope"] = r.bifurcation_slope;
    j["r_c"] = r.r_c;
    j["far_field_exponent"] = r.far_field_exponent;
    j["self_similarity_distance"] = r.self_similarity_distance;
    if (r.profile_distance) j["profile_distance"] = *r.profile_distance;
    if (r.standing_wave_distance) j["standing_wave_distance"] = *r.standing_wave_distance;
    return j;
}

std::vector<Snapshot> read_snapshots(const fs::path& run_dir) {
    std::vector<Snapshot> snaps;
    for (const auto& f : files_below(run_dir / "snapshots"))
        if (f.extension() == ".bin") snaps.push_back(read_snapshot(f));
    std::sort(snaps.begin(), snaps.end(), [](const Snapshot& a, const Snapshot& b) { return a.level < b.level; });
    return snaps;
}

ProfileSolution read_profile(const fs::path& dir) {
    const auto file = read_field(dir / "profile.bin");
    const auto rep = read_json(dir / "report.json");
    ProfileSolution sol{file.field, {}, static_cast<StencilOrder>(rep.at("order").get<int>())};
    sol.params.sigma = rep.at("sigma").get<double>();
    sol.params.dim = rep.at("dim").get<int>();
    sol.params.kappa = rep.at("kappa").get<double>();
    sol.params.nu = rep.at("nu").get<double>();
    return sol;
}

}  // namespace

AnalysisReport run_analyze(const fs::path& run_dir, const std::optional<fs::path>& profile_dir, const fs::path& out,
                           const AnalysisOptions& opts) {
    const auto t0 = Clock::now();
    const auto run = read_json(run_dir / "run.json");
    const double sigma = run.at("sigma").get<double>();
    const auto diag = read_diagnostics_csv(run_dir / "diagnostics.csv");
    const auto snaps = read_snapshots(run_dir);
    std::optional<ProfileSolution> profile;
    if (profile_dir) profile = read_profile(*profile_dir);
    const auto rep = analyze_run(diag, snaps, sigma, profile ? &*profile : nullptr, opts);

    fs::create_directories(out);
    json j = to_json(rep);
    j["run_dir"] = run_dir.filename().string();
    write_json(out / "analysis.json", j);
    for (const auto& s : snaps) {
        const auto r = rescale_snapshot(s, sigma);
        write_csv(out / ("rescaled_" + level_name(s.level) + ".csv"), r.rho, r.values);
    }
    std::string cfg = fmt::format("mode = analyze\n\n[io]\nrun_dir = {}\n", run_dir.generic_string());
    if (profile_dir) cfg += fmt::format("profile_dir = {}\n", profile_dir->generic_string());
    write_manifest(out, cfg, seconds_since(t0), 0);
    return rep;
}

bool ReproduceReport::all_pass() const {
    return std::all_of(observables.begin(), observables.end(), [](const Observable& o) { return o.pass; });
}

namespace {

struct CaseSpec {
    std::string id;
    double sigma;
    int dim;
    std::string ic;
    double kappa, nu, p, kappa_profile, nu_profile, r_c;
    bool gate_drift;
};

const std::vector<CaseSpec>& cases() {
    static const std::vector<CaseSpec> c{
        {"d1s6", 6.0, 1, "1.6*exp(-x^2)", 1.037, 0.362, 0.2502, 1.007, 0.36187, 0.36, true},
        {"d2s3", 3.0, 2, "3*exp(-r^2)", 0.909, 0.228, 0.2504, 0.894, 0.22826, 0.6, false},
    };
    return c;
}

Observable within(std::string name, double value, double reference, double tolerance) {
    return {std::move(name), value, reference, tolerance, false, std::abs(value - reference) <= tolerance};
}

Observable below(std::string name, double value, double bound) {
    return {std::move(name), value, 0.0, bound, true, value <= bound};
}

}  // namespace

std::vector<std::string> reproduce_cases() {
    std::vector<std::string> ids;
    for (const auto& c : cases()) ids.push_back(c.id);
    return ids;
}

ReproduceReport reproduce(const std::string& case_id, const fs::path& out) {
    const auto t0 = Clock::now();
    const auto it = std::find_if(cases().begin(), cases().end(), [&](const CaseSpec& c) { return c.id == case_id; });
    if (it == cases().end()) {
        std::string known;
        for (const auto& id : reproduce_cases()) known += (known.empty() ? "" : ", ") + id;
        throw std::invalid_argument("unknown case '" + case_id + "' (available: " + known + ")");
    }
    const CaseSpec& cs = *it;
    fs::create_directories(out);

    const auto evolve_cfg = parse_config(fmt::format(
        "mode = evolve\n[physics]\nsigma = {}\ndim = {}\n[ic]\npsi0 = {}\n", cs.sigma, cs.dim, cs.ic));
    const CollapseRun run = stage("evolve", [&] { return run_evolve(evolve_cfg, out / "evolve"); });

    // Limits first: the profile stage needs the extracted nu.
    const double nu = stage("analyze", [&] { return extract_nu(run.diagnostics).value; });
    const auto profile_cfg = parse_config(fmt::format(
        "mode = profile\n[physics]\nsigma = {}\ndim = {}\nnu = {}\nauto_kappa = true\n", cs.sigma, cs.dim, nu));
    const ProfileReport prof = stage("profile", [&] { return run_profile(profile_cfg, out / "profile"); });

    AnalysisOptions aopts;
    aopts.standing_wave = true;
    const AnalysisReport an =
        stage("analyze", [&] { return run_analyze(out / "evolve", out / "profile", out / "analysis", aopts); });

    ReproduceReport rep{cs.id, {}};
    auto& o = rep.observables;
    stage("compare", [&] {
        o.push_back(within("kappa_pde", an.kappa.value, cs.kappa, 0.03 * cs.kappa));
        o.push_back(within("nu", an.nu.value, cs.nu, 0.05 * cs.nu));
        o.push_back(within("p", an.rate.p, 0.25, 0.005));
        // Cross-validation: kappa_search at the extracted nu against the PDE.
        o.push_back(within("kappa_profile", prof.kappa, an.kappa.value, 0.04 * prof.kappa));
        o.push_back(within("r_c", an.r_c, cs.r_c, 0.2 * cs.r_c));
        o.push_back(within("bifurcation_slope", an.bifurcation_slope, 1.0, 0.1));
        o.push_back(within("far_field_exponent", an.far_field_exponent, -2.0 / cs.sigma, 0.03));
        o.push_back(below("self_similarity_distance", an.self_similarity_distance, 0.01));
        o.push_back(below("profile_distance", an.profile_distance.value(), 0.02));
        o.push_back(below("profile_discrimination", *an.profile_distance / *an.standing_wave_distance, 0.2));
        if (cs.gate_drift) {
            o.push_back(below("power_drift", run.power_drift_total, 1e-6));
            o.push_back(below("hamiltonian_drift", run.hamiltonian_drift, 1e-4));
        }
        return 0;
    });

    json j;
    j["case"] = cs.id;
    j["reference"] = {{"kappa_pde", cs.kappa},         {"nu", cs.nu},
                      {"p", cs.p},                     {"kappa_profile", cs.kappa_profile},
                      {"nu_profile", cs.nu_profile}, {"r_c", cs.r_c}};
    json obs = json::array();
    for (const auto& x : o) {
        json e{{"name", x.name}, {"value", x.value}};
        if (x.upper_bound) {
            e["bound"] = x.tolerance;
        } else {
            e["reference"] = x.reference;
            e["tolerance"] = x.tolerance;
        }
        e["pass"] = x.pass;
        obs.push_back(e);
    }
    j["observables"] = obs;
    j["hamiltonian_drift_local"] = run.hamiltonian_drift_local;
    j["all_pass"] = rep.all_pass();
    write_json(out / "reproduce.json", j);
    write_manifest(out, fmt::format("mode = reproduce\n\n[reproduce]\ncase = {}\n", cs.id), seconds_since(t0),
                   rep.all_pass() ? 0 : 4);
    return rep;
}

std::string override_config(std::string_view text, const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::vector<bool> used(overrides.size(), false);
    std::string out, section;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] == '[') {
            const auto close = line.find(']', first);
            section = line.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
        } else if (const auto eq = line.find('='); first != std::string::npos && eq != std::string::npos && line[first] != '#') {
            std::string key = line.substr(first, eq - first);
            key.erase(key.find_last_not_of(" \t") + 1);
            const std::string full = section.empty() ? key : section + "." + key;
            for (std::size_t i = 0; i < overrides.size(); ++i) {
                if (overrides[i].first == full) {
                    line = key + " = " + overrides[i].second;
                    used[i] = true;
                }
            }
        }
        out += line + "\n";
    }
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        if (used[i]) continue;
        const auto& [full, value] = overrides[i];
        const auto dot = full.find('.');
        if (dot == std::string::npos) {
            // Top-level keys must precede any section header.
            out = full + " = " + value + "\n" + out;
        } else {
            out += "[" + full.substr(0, dot) + "]\n" + full.substr(dot + 1) + " = " + value + "\n";
        }
    }
    return out;
}

std::vector<fs::path> sweep(std::string_view base_config,
                            const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                            const fs::path& out) {
    for (const auto& [key, values] : axes)
        if (values.empty()) throw std::invalid_argument("sweep axis '" + key + "' has no values");
    // Validate every combination before running any of them.
    std::vector<std::pair<RunConfig, fs::path>> runs;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
        std::vector<std::pair<std::string, std::string>> combo;
        std::string name;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            combo.emplace_back(axes[a].first, axes[a].second[idx[a]]);
            name += (name.empty() ? "" : ",") + axes[a].first + "=" + axes[a].second[idx[a]];
        }
        runs.emplace_back(parse_config(override_config(base_config, combo)), out / (name.empty() ? "base" : name));
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].second.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    std::vector<fs::path> dirs;
    for (const auto& [cfg, dir] : runs) {
        run_config(cfg, dir);
        dirs.push_back(dir);
    }
    return dirs;
}

void run_config(const RunConfig& cfg, const fs::path& out) {
    switch (cfg.mode) {
        case RunMode::kProfile: run_profile(cfg, out); break;
        case RunMode::kEvolve: run_evolve(cfg, out); break;
        case RunMode::kAnalyze:
            run_analyze(cfg.run_dir, cfg.profile_dir.empty() ? std::nullopt : std::optional<fs::path>(cfg.profile_dir),
                        out);
            break;
        case RunMode::kReproduce: reproduce(cfg.case_id, out); break;
    }
}

}  // namespace bnls
