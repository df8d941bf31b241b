#pragma once

#include "arealab/arealaw.hpp"
#include "arealab/adiabatic.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace arealab {

using json = nlohmann::json;

/// Every recognised key with its default. A null default marks an optional number.
inline json default_config() {
    return json::parse(R"({
  "seed": 20240901,
  "lattice": {"dimension": 1, "extents": [12], "spacing": 1.0},
  "model": {"kind": "tfim", "J": 1.0, "g": 2.0, "M": 3, "delta": 1.0},
  "region": {"origin": null, "R0": 1.5, "r0": 2.0},
  "solver": {"tol": 1e-10, "degeneracy_rel": 1e-10, "krylov_max": 40, "memory_budget_mb": 640,
             "max_sites": 20, "dense_sites": 12},
  "sequence": {"N": 12, "l0": 2, "delta_floor": null, "overlap_policy": "abort",
               "saturation_tol": 1e-3, "plot": true},
  "lemma": {"n_first": 6, "n_last": 10, "grid_points": 41, "tol": 1e-7, "f_schedule": "default",
            "mu0_override": null, "delta_override": null, "l0": 2, "two_level_points": 21},
  "adiabatic": {"n_first": 5, "n_last": 6, "grid_points": 21, "generator": "filtered",
                "start_steps": 250, "max_steps": 4000, "fidelity_floor": 0.999999, "region": [0, 1]},
  "sie": {"instances": 200, "dims": [2, 2, 2, 2]},
  "bounds": {"D": null, "n0": null, "a0": null, "l0": 2, "k0": null, "R0": 800.0, "r0": 8.0,
             "g0": null, "c_e": null, "l_tilde": null},
  "counterexample": {"n_max": 5, "M": 3, "delta": 1.0}
})");
}

struct SolverSection {
    SolverOptions options;
    int           max_sites   = 20;
    int           dense_sites = 12;
};

struct SequenceSection {
    int                   N  = 12;
    int                   l0 = 2;
    std::optional<double> delta_floor;
    OverlapPolicy         overlap_policy = OverlapPolicy::Abort;
    double                saturation_tol = 1e-3;
    bool                  plot           = true;
};

struct LemmaSection {
    int                   n_first = 6, n_last = 10, grid_points = 41, l0 = 2, two_level_points = 21;
    double                tol    = 1e-7;
    bool                  zero_f = false;
    std::optional<double> mu0_override, delta_override;
};

struct AdiabaticSection {
    int              n_first = 5, n_last = 6, grid_points = 21, start_steps = 250, max_steps = 4000;
    GeneratorKind    generator = GeneratorKind::Filtered;
    double           fidelity_floor = 1 - 1e-6;
    std::vector<int> region;
};

struct SieSection {
    int                instances = 200;
    std::array<int, 4> dims{2, 2, 2, 2};
};

struct BoundsSection {
    std::optional<int>    D, k0;
    std::optional<double> n0, a0, g0, c_e, l_tilde;
    int                   l0 = 2;
    double                R0 = 800, r0 = 8;
};

struct CounterexampleSection {
    int    n_max = 5, M = 3;
    double delta = 1.0;
};

struct RunConfig {
    json                  effective; ///< defaults merged with the file and overrides
    std::string           hash;      ///< sha256 of the sorted effective config
    std::uint64_t         seed = 0;
    Lattice               lattice;
    ModelSpec             model;
    Coord                 origin;
    double                R0 = 0, r0 = 0;
    SolverSection         solver;
    SequenceSection       sequence;
    LemmaSection          lemma;
    AdiabaticSection      adiabatic;
    SieSection            sie;
    BoundsSection         bounds;
    CounterexampleSection counterexample;
};

namespace detail {

inline std::string type_name(const json &j) { return j.type_name(); }

/// Structural check against the defaults: unknown keys and type mismatches are reported
/// and removed so the remaining fields can still be validated.
inline void check_shape(json &given, const json &def, const std::string &path, std::vector<std::string> &errors) {
    std::vector<std::string> drop;
    for(auto &[k, v] : given.items()) {
        const std::string p   = path.empty() ? k : path + "." + k;
        const auto        bad = [&](const std::string &msg) {
            errors.push_back(p + ": " + msg);
            drop.push_back(k);
        };
        if(!def.contains(k)) {
            bad("unknown field");
            continue;
        }
        const json &d = def.at(k);
        if(d.is_object()) {
            if(v.is_object()) check_shape(v, d, p, errors);
            else bad("expected an object, got " + type_name(v));
        } else if(d.is_null()) {
            if(!(v.is_null() || v.is_number() || v.is_array())) bad("expected a number or null, got " + type_name(v));
        } else if(d.is_number()) {
            if(!v.is_number()) bad("expected a number, got " + type_name(v));
            else if(d.is_number_integer() && !v.is_number_integer()) bad("expected an integer");
        } else if(d.is_string() && !v.is_string()) bad("expected a string, got " + type_name(v));
        else if(d.is_boolean() && !v.is_boolean()) bad("expected a boolean, got " + type_name(v));
        else if(d.is_array() && !v.is_array()) bad("expected an array, got " + type_name(v));
    }
    for(const auto &k : drop) given.erase(k);
}

class Checker {
  public:
    explicit Checker(const json &root) : root_(root) {}

    const json &at(const std::string &dotted) const {
        const json *cur = &root_;
        std::size_t start = 0;
        while(true) {
            auto dot = dotted.find('.', start);
            cur      = &cur->at(dotted.substr(start, dot - start));
            if(dot == std::string::npos) return *cur;
            start = dot + 1;
        }
    }

    template<typename T>
    T get(const std::string &key) {
        try {
            return at(key).get<T>();
        } catch(const std::exception &) {
            fail(key, "has the wrong type");
            return T{};
        }
    }

    std::optional<double> opt_number(const std::string &key) {
        const json &v = at(key);
        if(v.is_null()) return std::nullopt;
        if(!v.is_number()) {
            fail(key, "expected a number or null");
            return std::nullopt;
        }
        return v.get<double>();
    }

    void expect(bool ok, const std::string &key, const std::string &msg) {
        if(!ok) fail(key, msg);
    }
    void fail(const std::string &key, const std::string &msg) { errors.push_back(key + ": " + msg); }

    std::vector<std::string> errors;

  private:
    const json &root_;
};

inline json parse_value(const std::string &text) {
    try {
        return json::parse(text);
    } catch(const json::parse_error &) {
        return json(text);
    }
}

} // namespace detail

/// Applies "a.b.c=value"; the value is read as JSON when it parses, else as a string.
inline void apply_override(json &cfg, const std::string &assignment) {
    auto eq = assignment.find('=');
    if(eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must have the form key.path=value");
    const std::string path = assignment.substr(0, eq);
    json             *cur  = &cfg;
    std::size_t       start = 0;
    while(true) {
        auto        dot = path.find('.', start);
        std::string key = path.substr(start, dot - start);
        if(key.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        if(dot == std::string::npos) {
            (*cur)[key] = detail::parse_value(assignment.substr(eq + 1));
            return;
        }
        if(!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
        cur   = &(*cur)[key];
        start = dot + 1;
    }
}

inline json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if(!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch(const json::parse_error &e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

/// Validates and resolves a configuration. All problems are collected and reported
/// together in one ConfigError.
inline RunConfig resolve_config(const json &user, const std::vector<std::string> &overrides = {}, std::optional<std::uint64_t> seed = {}) {
    json given = user.is_null() ? json::object() : user;
    for(const auto &o : overrides) apply_override(given, o);
    if(seed) given["seed"] = *seed;

    const json               def = default_config();
    std::vector<std::string> errors;
    if(!given.is_object()) throw ConfigError("invalid configuration:\n  config root must be an object");
    detail::check_shape(given, def, "", errors);
    json eff = def;
    eff.merge_patch(given);
    // merge_patch drops explicit nulls; restore the optional keys so the echo is complete.
    for(const auto &[sec, body] : def.items())
        if(body.is_object())
            for(const auto &[k, v] : body.items())
                if(!eff[sec].contains(k)) eff[sec][k] = v;

    RunConfig       rc;
    detail::Checker c(eff);
    c.errors = errors;
    rc.effective = eff;
    rc.hash      = sha256_hex(eff.dump());
    rc.seed      = c.get<std::uint64_t>("seed");

    // lattice
    const int              D       = c.get<int>("lattice.dimension");
    const auto             extents = c.get<std::vector<int>>("lattice.extents");
    const double           spacing = c.get<double>("lattice.spacing");
    c.expect(D >= 1 && D <= 3, "lattice.dimension", "must be 1, 2 or 3");
    c.expect(static_cast<int>(extents.size()) == D, "lattice.extents", "needs one entry per dimension");
    c.expect(std::all_of(extents.begin(), extents.end(), [](int e) { return e >= 1; }), "lattice.extents", "entries must be >= 1");
    c.expect(spacing > 0, "lattice.spacing", "must be positive");

    // model
    const auto kind = c.get<std::string>("model.kind");
    c.expect(kind == "tfim" || kind == "contrived", "model.kind", "must be 'tfim' or 'contrived'");
    const double J = c.get<double>("model.J"), g = c.get<double>("model.g");
    const int    M = c.get<int>("model.M");
    const double mdelta = c.get<double>("model.delta");
    if(kind == "contrived") {
        c.expect(M >= 2, "model.M", "must be >= 2");
        c.expect(mdelta > 0, "model.delta", "must be positive");
        c.expect(D == 1, "lattice.dimension", "the contrived model needs a chain");
    }

    // region
    c.expect(c.get<double>("region.R0") >= 0, "region.R0", "must be non-negative");
    c.expect(c.get<double>("region.r0") > 0, "region.r0", "must be positive");
    const json &origin = eff["region"]["origin"];
    if(!origin.is_null()) {
        if(!origin.is_array() || origin.size() != static_cast<std::size_t>(D)) c.fail("region.origin", "needs one coordinate per dimension or null");
        else
            for(const auto &x : origin)
                if(!x.is_number()) c.fail("region.origin", "coordinates must be numbers");
    }

    // solver
    rc.solver.options.tol            = c.get<double>("solver.tol");
    rc.solver.options.degeneracy_rel = c.get<double>("solver.degeneracy_rel");
    rc.solver.options.krylov_max     = c.get<int>("solver.krylov_max");
    rc.solver.options.memory_budget  = static_cast<std::int64_t>(c.get<int>("solver.memory_budget_mb")) << 20;
    rc.solver.options.seed           = rc.seed;
    rc.solver.max_sites              = c.get<int>("solver.max_sites");
    rc.solver.dense_sites            = c.get<int>("solver.dense_sites");
    c.expect(rc.solver.options.tol > 0 && rc.solver.options.tol < 1e-3, "solver.tol", "must lie in (0, 1e-3)");
    c.expect(rc.solver.options.degeneracy_rel > 0, "solver.degeneracy_rel", "must be positive");
    c.expect(rc.solver.options.krylov_max >= 8, "solver.krylov_max", "must be >= 8");
    c.expect(rc.solver.options.memory_budget > 0, "solver.memory_budget_mb", "must be positive");
    c.expect(rc.solver.max_sites >= 2 && rc.solver.max_sites <= 24, "solver.max_sites", "must lie in [2, 24]");
    c.expect(rc.solver.dense_sites >= 2 && rc.solver.dense_sites <= 13, "solver.dense_sites", "must lie in [2, 13]");

    // sequence
    rc.sequence.N           = c.get<int>("sequence.N");
    rc.sequence.l0          = c.get<int>("sequence.l0");
    rc.sequence.delta_floor = c.opt_number("sequence.delta_floor");
    const auto pol          = c.get<std::string>("sequence.overlap_policy");
    c.expect(pol == "abort" || pol == "flag", "sequence.overlap_policy", "must be 'abort' or 'flag'");
    rc.sequence.overlap_policy = pol == "flag" ? OverlapPolicy::Flag : OverlapPolicy::Abort;
    rc.sequence.saturation_tol = c.get<double>("sequence.saturation_tol");
    rc.sequence.plot           = c.get<bool>("sequence.plot");
    c.expect(rc.sequence.l0 >= 1, "sequence.l0", "must be >= 1");
    c.expect(rc.sequence.saturation_tol > 0, "sequence.saturation_tol", "must be positive");

    // lemma
    rc.lemma.n_first          = c.get<int>("lemma.n_first");
    rc.lemma.n_last           = c.get<int>("lemma.n_last");
    rc.lemma.grid_points      = c.get<int>("lemma.grid_points");
    rc.lemma.tol              = c.get<double>("lemma.tol");
    rc.lemma.l0               = c.get<int>("lemma.l0");
    rc.lemma.two_level_points = c.get<int>("lemma.two_level_points");
    rc.lemma.mu0_override     = c.opt_number("lemma.mu0_override");
    rc.lemma.delta_override   = c.opt_number("lemma.delta_override");
    const auto fs             = c.get<std::string>("lemma.f_schedule");
    c.expect(fs == "default" || fs == "zero", "lemma.f_schedule", "must be 'default' or 'zero'");
    rc.lemma.zero_f = fs == "zero";
    c.expect(rc.lemma.n_first >= 2 && rc.lemma.n_first <= rc.lemma.n_last, "lemma.n_first", "must satisfy 2 <= n_first <= n_last");
    c.expect(rc.lemma.n_last <= rc.solver.dense_sites, "lemma.n_last", "exceeds solver.dense_sites");
    c.expect(rc.lemma.grid_points >= 3, "lemma.grid_points", "must be >= 3");
    c.expect(rc.lemma.two_level_points >= 2, "lemma.two_level_points", "must be >= 2");
    c.expect(rc.lemma.l0 >= 1, "lemma.l0", "must be >= 1");
    if(rc.lemma.mu0_override) c.expect(*rc.lemma.mu0_override >= 0 && *rc.lemma.mu0_override < 1, "lemma.mu0_override", "must lie in [0, 1)");
    if(rc.lemma.delta_override) c.expect(*rc.lemma.delta_override > 0, "lemma.delta_override", "must be positive");

    // adiabatic
    rc.adiabatic.n_first        = c.get<int>("adiabatic.n_first");
    rc.adiabatic.n_last         = c.get<int>("adiabatic.n_last");
    rc.adiabatic.grid_points    = c.get<int>("adiabatic.grid_points");
    rc.adiabatic.start_steps    = c.get<int>("adiabatic.start_steps");
    rc.adiabatic.max_steps      = c.get<int>("adiabatic.max_steps");
    rc.adiabatic.fidelity_floor = c.get<double>("adiabatic.fidelity_floor");
    rc.adiabatic.region         = c.get<std::vector<int>>("adiabatic.region");
    try {
        rc.adiabatic.generator = generator_kind_from_string(c.get<std::string>("adiabatic.generator"));
    } catch(const ConfigError &e) {
        c.fail("adiabatic.generator", e.what());
    }
    c.expect(rc.adiabatic.n_first >= 2 && rc.adiabatic.n_first <= rc.adiabatic.n_last, "adiabatic.n_first", "must satisfy 2 <= n_first <= n_last");
    c.expect(rc.adiabatic.n_last <= 10, "adiabatic.n_last", "dense generator limited to 10 sites");
    c.expect(rc.adiabatic.grid_points >= 2, "adiabatic.grid_points", "must be >= 2");
    c.expect(rc.adiabatic.start_steps >= 1 && rc.adiabatic.start_steps <= rc.adiabatic.max_steps, "adiabatic.start_steps", "must lie in [1, max_steps]");
    c.expect(rc.adiabatic.fidelity_floor > 0 && rc.adiabatic.fidelity_floor < 1, "adiabatic.fidelity_floor", "must lie in (0, 1)");

    // sie
    rc.sie.instances = c.get<int>("sie.instances");
    auto dims        = c.get<std::vector<int>>("sie.dims");
    c.expect(rc.sie.instances >= 2, "sie.instances", "must be >= 2");
    if(dims.size() != 4 || !std::all_of(dims.begin(), dims.end(), [](int d) { return d >= 1 && d <= 8; })) c.fail("sie.dims", "needs four entries in [1, 8]");
    else std::copy(dims.begin(), dims.end(), rc.sie.dims.begin());

    // bounds
    auto opt_int = [&](const std::string &key) -> std::optional<int> {
        auto v = c.opt_number(key);
        if(!v) return std::nullopt;
        if(*v != std::floor(*v)) c.fail(key, "must be an integer");
        return static_cast<int>(*v);
    };
    rc.bounds.D       = opt_int("bounds.D");
    rc.bounds.k0      = opt_int("bounds.k0");
    rc.bounds.n0      = c.opt_number("bounds.n0");
    rc.bounds.a0      = c.opt_number("bounds.a0");
    rc.bounds.g0      = c.opt_number("bounds.g0");
    rc.bounds.c_e     = c.opt_number("bounds.c_e");
    rc.bounds.l_tilde = c.opt_number("bounds.l_tilde");
    rc.bounds.l0      = c.get<int>("bounds.l0");
    rc.bounds.R0      = c.get<double>("bounds.R0");
    rc.bounds.r0      = c.get<double>("bounds.r0");
    if(rc.bounds.D) c.expect(*rc.bounds.D >= 1 && *rc.bounds.D <= 3, "bounds.D", "must be 1, 2 or 3");
    if(rc.bounds.k0) c.expect(*rc.bounds.k0 >= 1, "bounds.k0", "must be >= 1");
    for(auto [key, v] : {std::pair{"bounds.n0", rc.bounds.n0}, {"bounds.a0", rc.bounds.a0}, {"bounds.g0", rc.bounds.g0}, {"bounds.c_e", rc.bounds.c_e}})
        if(v) c.expect(*v > 0, key, "must be positive");
    c.expect(rc.bounds.R0 > 0, "bounds.R0", "must be positive");
    c.expect(rc.bounds.r0 > 0, "bounds.r0", "must be positive");

    // counterexample
    rc.counterexample.n_max = c.get<int>("counterexample.n_max");
    rc.counterexample.M     = c.get<int>("counterexample.M");
    rc.counterexample.delta = c.get<double>("counterexample.delta");
    c.expect(rc.counterexample.M >= 2 && rc.counterexample.M <= rc.counterexample.n_max, "counterexample.M", "must satisfy 2 <= M <= n_max");
    c.expect(rc.counterexample.n_max <= 10, "counterexample.n_max", "must be <= 10");
    c.expect(rc.counterexample.delta > 0, "counterexample.delta", "must be positive");

    if(c.errors.empty()) {
        try {
            rc.lattice = build_lattice(D, extents, spacing);
            rc.model   = kind == "tfim" ? tfim_model(rc.lattice, J, g) : contrived_model(rc.lattice, M, mdelta);
        } catch(const std::exception &e) {
            c.fail("model", e.what());
        }
        if(origin.is_null()) {
            rc.origin.assign(D, 0.0);
            for(int a = 0; a < D; ++a) rc.origin[a] = (extents[a] - 1) * spacing / 2.0;
        } else
            rc.origin = origin.get<Coord>();
        rc.R0 = eff["region"]["R0"].get<double>();
        rc.r0 = eff["region"]["r0"].get<double>();
    }
    long long sites = 1;
    for(int e : extents) sites *= std::max(e, 1);
    if(rc.sequence.N < 1 || rc.sequence.N > sites) c.fail("sequence.N", "must lie in [1, " + std::to_string(sites) + "]");
    c.expect(rc.sequence.N <= rc.solver.max_sites, "sequence.N", "exceeds solver.max_sites");
    if(!c.errors.empty()) {
        std::string msg = "invalid configuration:";
        for(const auto &e : c.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return rc;
}

} // namespace arealab
