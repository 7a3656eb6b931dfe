#pragma once

// Run configuration and its text form.
//
// One `key = value` per line; '#' starts a comment; blank lines are ignored. Unknown or
// repeated keys are errors. Vector-valued keys (n, length) take one whitespace-separated
// entry per axis. serialize() writes every key in canonical order, so
// parse(serialize(parse(text))) == parse(text).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vchr/errors.hpp"
#include "vchr/grid.hpp"
#include "vchr/initial_conditions.hpp"
#include "vchr/potential.hpp"
#include "vchr/snapshot.hpp"
#include "vchr/stepper.hpp"

namespace vchr {

struct OutputConfig {
    std::string energy_csv;   // empty: no CSV
    std::string snapshot_dir; // empty: no snapshots
    int every = 1;            // CSV row cadence, in steps
    int snapshot_every = 0;   // 0: final state only (when snapshot_dir is set)

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
    GridSpec grid = GridSpec::cube(2, 128, 1.0, BoundaryKind::Periodic);
    ModelParams model;
    SchemeConfig scheme;
    InitialCondition ic;
    std::optional<double> t_end;
    std::optional<int> n_steps;
    OutputConfig output;

    void validate() const {
        grid.validate();
        model.validate();
        scheme.validate();
        if (t_end.has_value() == n_steps.has_value()) throw UsageError("config: set exactly one of t_end / n_steps");
        if (n_steps && *n_steps < 1) throw UsageError("config: n_steps must be >= 1");
        if (t_end && !(*t_end > 0.0)) throw UsageError("config: t_end must be > 0");
        if (output.every < 1) throw UsageError("config: output_every must be >= 1");
        if (output.snapshot_every < 0) throw UsageError("config: snapshot_every must be >= 0");
        if (ic.kind == InitialKind::FromFile && ic.path.empty()) throw UsageError("config: ic = file needs ic_path");
        (void)steps();
    }

    /// Number of steps; t_end must be an integer multiple of dt (to 1e-9 relative).
    int steps() const {
        if (n_steps) return *n_steps;
        const double ratio = *t_end / scheme.dt;
        const long long n = std::llround(ratio);
        if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
            throw UsageError("config: t_end is not an integer multiple of dt");
        }
        return static_cast<int>(n);
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw UsageError("config: '" + key + "' expects a real number, got '" + v + "'");
    return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw UsageError("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw UsageError("config: '" + key + "' expects true|false, got '" + v + "'");
}

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("config: expected 'key = value'", lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw FormatError("config: empty key", lineno);
        if (!kv.emplace(key, value).second) throw FormatError("config: repeated key '" + key + "'", lineno);
    }

    static const std::set<std::string> known = {
        "dim",       "n",          "length",     "bc",          "eps",        "alpha",       "beta",
        "potential", "B",          "theta",      "sigma",       "scheme",     "dt",          "cg_tol",
        "cg_maxit",  "self_check", "ic",         "ic_phibar",   "ic_amplitude", "ic_path",   "rng_seed",
        "t_end",     "n_steps",    "energy_csv", "snapshot_dir", "output_every", "snapshot_every"};
    for (const auto& [k, v] : kv) {
        if (!known.count(k)) throw UsageError("config: unknown key '" + k + "'");
    }
    const auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    RunConfig c;
    const int dim = get("dim") ? detail::parse_int<int>("dim", *get("dim")) : 2;
    const BoundaryKind bc = get("bc") ? parse_boundary(*get("bc")) : BoundaryKind::Periodic;
    std::vector<int> n(dim, 128);
    std::vector<double> len(dim, 1.0);
    if (dim < 1 || dim > 3) throw UsageError("config: dim must be 1, 2 or 3");
    if (auto v = get("n")) {
        auto t = detail::split_ws(*v);
        if (t.size() == 1) t.assign(dim, t[0]);
        if (static_cast<int>(t.size()) != dim) throw UsageError("config: 'n' needs 1 or dim entries");
        for (int a = 0; a < dim; ++a) n[a] = detail::parse_int<int>("n", t[a]);
    }
    if (auto v = get("length")) {
        auto t = detail::split_ws(*v);
        if (t.size() == 1) t.assign(dim, t[0]);
        if (static_cast<int>(t.size()) != dim) throw UsageError("config: 'length' needs 1 or dim entries");
        for (int a = 0; a < dim; ++a) len[a] = detail::parse_real("length", t[a]);
    }
    c.grid = GridSpec::make(dim, n, len, bc);

    if (auto v = get("eps")) c.model.eps = detail::parse_real("eps", *v);
    if (auto v = get("alpha")) c.model.alpha = detail::parse_real("alpha", *v);
    if (auto v = get("beta")) c.model.beta = detail::parse_real("beta", *v);
    if (auto v = get("potential")) {
        c.model.potential.kind = parse_potential(*v);
        if (c.model.potential.kind == PotentialKind::FloryHuggins) c.model.potential.B = 1.0;
    }
    if (auto v = get("B")) c.model.potential.B = detail::parse_real("B", *v);
    if (auto v = get("theta")) c.model.potential.theta = detail::parse_real("theta", *v);
    if (auto v = get("sigma")) c.model.potential.sigma = detail::parse_real("sigma", *v);

    if (auto v = get("scheme")) c.scheme.scheme = parse_scheme(*v);
    if (auto v = get("dt")) c.scheme.dt = detail::parse_real("dt", *v);
    if (auto v = get("cg_tol")) c.scheme.cg_tol = detail::parse_real("cg_tol", *v);
    if (auto v = get("cg_maxit")) c.scheme.cg_maxit = detail::parse_int<int>("cg_maxit", *v);
    if (auto v = get("self_check")) c.scheme.self_check = detail::parse_bool("self_check", *v);

    if (auto v = get("ic")) c.ic.kind = parse_initial(*v);
    if (auto v = get("ic_phibar")) c.ic.phibar = detail::parse_real("ic_phibar", *v);
    if (auto v = get("ic_amplitude")) c.ic.amplitude = detail::parse_real("ic_amplitude", *v);
    if (auto v = get("ic_path")) c.ic.path = *v;
    if (auto v = get("rng_seed")) c.ic.seed = detail::parse_int<std::uint64_t>("rng_seed", *v);

    if (auto v = get("t_end")) c.t_end = detail::parse_real("t_end", *v);
    if (auto v = get("n_steps")) c.n_steps = detail::parse_int<int>("n_steps", *v);
    if (auto v = get("energy_csv")) c.output.energy_csv = *v;
    if (auto v = get("snapshot_dir")) c.output.snapshot_dir = *v;
    if (auto v = get("output_every")) c.output.every = detail::parse_int<int>("output_every", *v);
    if (auto v = get("snapshot_every")) c.output.snapshot_every = detail::parse_int<int>("snapshot_every", *v);

    c.validate();
    return c;
}

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    const auto line = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
    const auto real = [](double v) { return format_real(v); };
    line("dim", std::to_string(c.grid.dim));
    std::string n, len;
    for (int a = 0; a < c.grid.dim; ++a) {
        n += (a ? " " : "") + std::to_string(c.grid.n[a]);
        len += (a ? " " : "") + real(c.grid.length[a]);
    }
    line("n", n);
    line("length", len);
    line("bc", std::string(to_string(c.grid.bc)));
    line("eps", real(c.model.eps));
    line("alpha", real(c.model.alpha));
    line("beta", real(c.model.beta));
    line("potential", std::string(to_string(c.model.potential.kind)));
    line("B", real(c.model.potential.B));
    line("theta", real(c.model.potential.theta));
    line("sigma", real(c.model.potential.sigma));
    line("scheme", std::string(to_string(c.scheme.scheme)));
    line("dt", real(c.scheme.dt));
    line("cg_tol", real(c.scheme.cg_tol));
    line("cg_maxit", std::to_string(c.scheme.cg_maxit));
    line("self_check", c.scheme.self_check ? "true" : "false");
    line("ic", std::string(to_string(c.ic.kind)));
    line("ic_phibar", real(c.ic.phibar));
    line("ic_amplitude", real(c.ic.amplitude));
    if (!c.ic.path.empty()) line("ic_path", c.ic.path);
    line("rng_seed", std::to_string(c.ic.seed));
    if (c.t_end) line("t_end", real(*c.t_end));
    if (c.n_steps) line("n_steps", std::to_string(*c.n_steps));
    if (!c.output.energy_csv.empty()) line("energy_csv", c.output.energy_csv);
    if (!c.output.snapshot_dir.empty()) line("snapshot_dir", c.output.snapshot_dir);
    line("output_every", std::to_string(c.output.every));
    line("snapshot_every", std::to_string(c.output.snapshot_every));
    return os.str();
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

} // namespace vchr
