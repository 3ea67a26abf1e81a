#include "bnls/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "bnls/errors.hpp"
#include "bnls/expression.hpp"
#include "bnls/wkb.hpp"

namespace bnls {

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::invalid_argument(line > 0 ? fmt::format("line {}, column {}: {}", line, column, what) : what),
      line(line),
      column(column),
      reason(what) {}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::kProfile: return "profile";
        case RunMode::kEvolve: return "evolve";
        case RunMode::kAnalyze: return "analyze";
        case RunMode::kReproduce: return "reproduce";
    }
    return "?";
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
    int key_column = 0;
    int value_column = 0;
};

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "mode",
        "physics.sigma", "physics.dim", "physics.nu", "physics.kappa", "physics.auto_kappa",
        "numerics.r_max", "numerics.n_points", "numerics.order", "numerics.max_iters",
        "numerics.residual_tol", "numerics.step_tol", "numerics.dt_coefficient", "numerics.dt_max",
        "numerics.stretch", "numerics.points_across_core", "numerics.refine_factor", "numerics.max_level",
        "numerics.target_focusing", "numerics.max_steps",
        "ic.psi0",
        "io.out", "io.snapshot_from", "io.run_dir", "io.profile_dir",
        "reproduce.case",
    };
    return keys;
}

std::string_view trim(std::string_view s, std::size_t& lead) {
    lead = 0;
    while (lead < s.size() && (s[lead] == ' ' || s[lead] == '\t')) ++lead;
    std::size_t end = s.size();
    while (end > lead && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
    return s.substr(lead, end - lead);
}

bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

std::map<std::string, Entry> tokenize(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::size_t lead = 0;
        const auto line = trim(raw, lead);
        if (line.empty()) continue;
        const int col0 = static_cast<int>(lead) + 1;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no, col0);
            std::size_t inner_lead = 0;
            const auto name = trim(line.substr(1, line.size() - 2), inner_lead);
            if (!valid_name(name)) throw ConfigError("malformed section name", line_no, col0 + 1);
            section = std::string(name);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, col0);
        std::size_t key_lead = 0, value_lead = 0;
        const auto key = trim(line.substr(0, eq), key_lead);
        auto value = trim(line.substr(eq + 1), value_lead);
        const int key_col = col0 + static_cast<int>(key_lead);
        const int value_col = col0 + static_cast<int>(eq + 1 + value_lead);
        if (!valid_name(key)) throw ConfigError("malformed key", line_no, key_col);
        if (value.empty()) throw ConfigError("missing value for '" + std::string(key) + "'", line_no, value_col);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

        const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
        if (!known_keys().contains(full)) throw ConfigError("unknown key '" + full + "'", line_no, key_col);
        if (const auto it = entries.find(full); it != entries.end())
            throw ConfigError(fmt::format("duplicate key '{}' (first set on line {})", full, it->second.line), line_no,
                              key_col);
        entries.emplace(full, Entry{std::string(value), line_no, key_col, value_col});
    }
    return entries;
}

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> e) : entries_(std::move(e)) {}

    const Entry* find(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void real(const std::string& key, double& out) const {
        if (const auto* e = find(key)) out = parse_real(key, *e);
    }
    void real(const std::string& key, std::optional<double>& out) const {
        if (const auto* e = find(key)) out = parse_real(key, *e);
    }
    template <class Int>
    void integer(const std::string& key, Int& out) const {
        const auto* e = find(key);
        if (!e) return;
        Int v{};
        const auto [end, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
        if (ec != std::errc() || end != e->value.data() + e->value.size())
            throw ConfigError("'" + key + "' expects an integer, got '" + e->value + "'", e->line, e->value_column);
        out = v;
    }
    void boolean(const std::string& key, bool& out) const {
        const auto* e = find(key);
        if (!e) return;
        if (e->value == "true") out = true;
        else if (e->value == "false") out = false;
        else throw ConfigError("'" + key + "' expects true or false, got '" + e->value + "'", e->line, e->value_column);
    }
    void string(const std::string& key, std::string& out) const {
        if (const auto* e = find(key)) out = e->value;
    }

    [[noreturn]] void fail_at(const std::string& key, const std::string& what) const {
        const auto* e = find(key);
        throw ConfigError(what, e ? e->line : 0, e ? e->value_column : 0);
    }

private:
    static double parse_real(const std::string& key, const Entry& e) {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
        if (ec != std::errc() || end != e.value.data() + e.value.size() || !std::isfinite(v))
            throw ConfigError("'" + key + "' expects a real number, got '" + e.value + "'", e.line, e.value_column);
        return v;
    }

    std::map<std::string, Entry> entries_;
};

void require_positive(const Reader& r, const std::string& key, double v) {
    if (!(v > 0.0)) r.fail_at(key, "'" + key + "' must be positive");
}

}  // namespace

std::vector<double> RunConfig::snapshot_levels() const {
    std::vector<double> levels;
    // Exact decimal powers rather than repeated multiplication.
    const int k0 = static_cast<int>(std::lround(std::log10(snapshot_from)));
    for (int k = k0;; ++k) {
        const double level = std::pow(10.0, k);
        if (level > target_focusing * (1.0 + 1e-12)) break;
        levels.push_back(level);
    }
    return levels;
}

SlsrConfig RunConfig::slsr() const {
    SlsrConfig s;
    s.max_iters = max_iters;
    s.residual_tol = residual_tol;
    s.step_tol = step_tol;
    return s;
}

CollapseConfig RunConfig::collapse() const {
    CollapseConfig c;
    c.target_focusing = target_focusing;
    c.dt_coefficient = dt_coefficient;
    c.dt_max = dt_max;
    const double h = r_max / n_points;
    c.grid = GradedGridSpec{h, h, stretch, r_max, dim, 0.0};
    c.refinement = RefinementPolicy{points_across_core, refine_factor, max_level};
    c.snapshot_levels = snapshot_levels();
    c.max_steps = max_steps;
    return c;
}

RunConfig parse_config(std::string_view text) {
    const Reader r(tokenize(text));
    RunConfig c;

    std::string mode;
    r.string("mode", mode);
    if (mode.empty()) throw ConfigError("missing key 'mode' (profile, evolve, analyze or reproduce)", 0, 0);
    if (mode == "profile") c.mode = RunMode::kProfile;
    else if (mode == "evolve") c.mode = RunMode::kEvolve;
    else if (mode == "analyze") c.mode = RunMode::kAnalyze;
    else if (mode == "reproduce") c.mode = RunMode::kReproduce;
    else r.fail_at("mode", "unknown mode '" + mode + "' (profile, evolve, analyze or reproduce)");

    if (c.mode == RunMode::kEvolve) {
        c.r_max = 20.0;
        c.n_points = 1600;
    }

    r.real("physics.sigma", c.sigma);
    r.integer("physics.dim", c.dim);
    r.real("physics.nu", c.nu);
    r.real("physics.kappa", c.kappa);
    r.boolean("physics.auto_kappa", c.auto_kappa);

    r.real("numerics.r_max", c.r_max);
    r.integer("numerics.n_points", c.n_points);
    int order = static_cast<int>(c.order);
    r.integer("numerics.order", order);
    if (order != 2 && order != 4) r.fail_at("numerics.order", "'numerics.order' must be 2 or 4");
    c.order = static_cast<StencilOrder>(order);
    r.integer("numerics.max_iters", c.max_iters);
    r.real("numerics.residual_tol", c.residual_tol);
    r.real("numerics.step_tol", c.step_tol);
    r.real("numerics.dt_coefficient", c.dt_coefficient);
    r.real("numerics.dt_max", c.dt_max);
    r.real("numerics.stretch", c.stretch);
    r.integer("numerics.points_across_core", c.points_across_core);
    r.integer("numerics.refine_factor", c.refine_factor);
    r.integer("numerics.max_level", c.max_level);
    r.real("numerics.target_focusing", c.target_focusing);
    r.integer("numerics.max_steps", c.max_steps);

    r.string("ic.psi0", c.ic);
    r.string("io.out", c.out);
    r.real("io.snapshot_from", c.snapshot_from);
    r.string("io.run_dir", c.run_dir);
    r.string("io.profile_dir", c.profile_dir);
    r.string("reproduce.case", c.case_id);

    for (const char* key : {"numerics.r_max", "numerics.residual_tol", "numerics.step_tol", "numerics.dt_coefficient",
                            "numerics.dt_max", "numerics.stretch", "numerics.target_focusing", "io.snapshot_from"}) {
        double v = 0.0;
        r.real(key, v);
        if (r.find(key)) require_positive(r, key, v);
    }
    if (c.n_points < 16) r.fail_at("numerics.n_points", "'numerics.n_points' must be at least 16");
    if (c.max_iters < 1) r.fail_at("numerics.max_iters", "'numerics.max_iters' must be positive");
    if (c.points_across_core < 4) r.fail_at("numerics.points_across_core", "'numerics.points_across_core' must be at least 4");
    if (c.refine_factor < 2) r.fail_at("numerics.refine_factor", "'numerics.refine_factor' must be at least 2");
    if (c.max_level < 0) r.fail_at("numerics.max_level", "'numerics.max_level' must be nonnegative");
    if (c.max_steps < 1) r.fail_at("numerics.max_steps", "'numerics.max_steps' must be positive");

    if (c.mode == RunMode::kProfile || c.mode == RunMode::kEvolve) {
        try {
            require_admissible(c.sigma, c.dim);
        } catch (const AdmissibilityError& e) {
            r.fail_at(r.find("physics.sigma") ? "physics.sigma" : "physics.dim", std::string("admissibility: ") + e.what());
        }
    }
    switch (c.mode) {
        case RunMode::kProfile:
            if (!c.nu) throw ConfigError("profile mode needs 'physics.nu'", 0, 0);
            if (!c.auto_kappa && !c.kappa) throw ConfigError("profile mode needs 'physics.kappa' or auto_kappa = true", 0, 0);
            if (c.auto_kappa && c.kappa) r.fail_at("physics.kappa", "'physics.kappa' conflicts with auto_kappa = true");
            break;
        case RunMode::kEvolve:
            if (c.ic.empty()) throw ConfigError("evolve mode needs 'ic.psi0'", 0, 0);
            try {
                RadialExpression::parse(c.ic);
            } catch (const ExpressionError& e) {
                const auto* entry = r.find("ic.psi0");
                throw ConfigError(std::string("ic.psi0: ") + e.what(), entry->line, entry->value_column + e.column - 1);
            }
            break;
        case RunMode::kAnalyze:
            if (c.run_dir.empty()) throw ConfigError("analyze mode needs 'io.run_dir'", 0, 0);
            break;
        case RunMode::kReproduce:
            if (c.case_id.empty()) throw ConfigError("reproduce mode needs 'reproduce.case'", 0, 0);
            break;
    }
    return c;
}

std::string to_text(const RunConfig& c) {
    std::string s = fmt::format("mode = {}\n\n[physics]\nsigma = {}\ndim = {}\n", to_string(c.mode), c.sigma, c.dim);
    if (c.nu) s += fmt::format("nu = {}\n", *c.nu);
    if (c.kappa) s += fmt::format("kappa = {}\n", *c.kappa);
    s += fmt::format("auto_kappa = {}\n", c.auto_kappa);
    s += fmt::format(
        "\n[numerics]\nr_max = {}\nn_points = {}\norder = {}\nmax_iters = {}\nresidual_tol = {}\nstep_tol = {}\n"
        "dt_coefficient = {}\ndt_max = {}\nstretch = {}\npoints_across_core = {}\nrefine_factor = {}\n"
        "max_level = {}\ntarget_focusing = {}\nmax_steps = {}\n",
        c.r_max, c.n_points, static_cast<int>(c.order), c.max_iters, c.residual_tol, c.step_tol, c.dt_coefficient,
        c.dt_max, c.stretch, c.points_across_core, c.refine_factor, c.max_level, c.target_focusing, c.max_steps);
    if (!c.ic.empty()) s += fmt::format("\n[ic]\npsi0 = {}\n", c.ic);
    s += fmt::format("\n[io]\nsnapshot_from = {}\n", c.snapshot_from);
    if (!c.out.empty()) s += fmt::format("out = {}\n", c.out);
    if (!c.run_dir.empty()) s += fmt::format("run_dir = {}\n", c.run_dir);
    if (!c.profile_dir.empty()) s += fmt::format("profile_dir = {}\n", c.profile_dir);
    if (!c.case_id.empty()) s += fmt::format("\n[reproduce]\ncase = {}\n", c.case_id);
    return s;
}

}  // namespace bnls
