#pragma once

#include "arealab/config.hpp"
#include "arealab/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <numeric>

namespace arealab::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kCondition = 3, kSolver = 4 };

inline int exit_code_for(const std::exception &e) {
    if(dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const ParameterError *>(&e)) return kConfig;
    if(dynamic_cast<const ConditionViolation *>(&e) || dynamic_cast<const ModelError *>(&e) || dynamic_cast<const ConstantsViolation *>(&e)) return kCondition;
    return kSolver;
}

struct Context {
    RunConfig                    cfg;
    std::filesystem::path        out;
    std::unique_ptr<GroundCache> cache;
    std::ostream                *log = &std::cerr;
};

namespace detail {

inline std::vector<int> radial_prefix(const Context &ctx, int n) {
    auto order = order_sites_by_radius(ctx.cfg.lattice, ctx.cfg.origin).order;
    if(n > static_cast<int>(order.size())) throw ParameterError("system size " + std::to_string(n) + " exceeds the lattice");
    return {order.begin(), order.begin() + n};
}

inline Hamiltonian system_of(const Context &ctx, int n) { return model_hamiltonian(ctx.cfg.model, radial_prefix(ctx, n)); }

inline InterpolatorSpec step_spec(const Context &ctx, int n, int l0, std::optional<double> mu0_override = {}, std::optional<double> delta_override = {}) {
    EndpointOptions eo;
    eo.l0             = l0;
    eo.mu0_override   = mu0_override;
    eo.delta_override = delta_override;
    eo.solver         = ctx.cfg.solver.options;
    return build_endpoints(system_of(ctx, n - 1), system_of(ctx, n), ctx.cfg.lattice, eo);
}

inline json fit_json(const PowerLawFit &f) { return {{"valid", f.valid}, {"exponent", finite_json(f.exponent)}, {"g0", finite_json(f.g0)}, {"points", f.points}}; }

} // namespace detail

// ---------------------------------------------------------------------------------

inline int run_sequence(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "sequence", c.hash);
    RegionSpec     region = make_region(c.lattice, c.origin, c.R0, c.r0);
    GrowOptions    o;
    o.l0             = c.sequence.l0;
    o.solver         = c.solver.options;
    o.delta_floor    = c.sequence.delta_floor;
    o.overlap_policy = c.sequence.overlap_policy;
    o.max_sites      = c.solver.max_sites;
    o.cache          = ctx.cache.get();

    EntropyProfile prof;
    try {
        prof = grow_sequence(c.model, region, c.sequence.N, o);
    } catch(const ConditionViolation &e) {
        w.json("error.json", {{"error", "condition_violation"}, {"message", e.what()}});
        w.manifest(c.effective, "sequence");
        throw;
    }
    for(const auto &m : prof.warnings) *ctx.log << "warning: " << m << "\n";
    for(const auto &m : prof.flags) *ctx.log << "flag: " << m << "\n";

    Table t;
    t.header = {"n", "site", "distance", "gap", "mu", "entropy_A", "dist_to_final"};
    for(const auto &s : prof.steps) t.rows.push_back({static_cast<long long>(s.n), static_cast<long long>(s.site), s.distance, s.gap, s.mu, s.entropy_A, s.dist_to_final});
    w.csv("profile.csv", t);

    auto consts = verify_constants(c.lattice);
    auto ib     = initial_bound(region, c.lattice, consts, prof.steps.front().entropy_A);
    auto tr     = telescoping_report(prof);
    auto sat    = saturation_check(prof, c.lattice, c.sequence.saturation_tol);
    json j;
    j["region"]     = {{"origin", c.origin}, {"R0", c.R0}, {"r0", c.r0}, {"A", region.A}, {"A_prime", region.A_prime}, {"M", region.M}, {"L", region.L}};
    j["initial_bound"] = {{"L", ib.L}, {"geometric", ib.geometric}, {"leading", ib.leading}, {"v_D", ib.v_D}, {"n0", ib.n0}, {"measured_entropy", *ib.measured_entropy}, {"holds", ib.holds}};
    j["telescoping"]   = {{"deltas", tr.deltas}, {"partial_sums", tr.partial_sums}, {"identity_error", tr.identity_error}, {"S_initial", tr.S_initial}, {"S_final", tr.S_final}};
    j["saturation"]    = {{"tol", sat.tol}, {"n_star", sat.n_star ? json(*sat.n_star) : json(nullptr)}, {"distance_to_A", sat.distance_to_A}};
    j["warnings"]      = prof.warnings;
    j["flags"]         = prof.flags;
    j["order"]         = prof.order;
    w.json("profile.json", j);

    if(c.sequence.plot) {
        Series s{"S(rho_A) [log d]", {}, {}};
        for(const auto &st : prof.steps) {
            s.x.push_back(st.n);
            s.y.push_back(st.entropy_A);
        }
        w.text("entropy.svg", svg_plot("Entropy of A along the growth sequence", "n", "S", {s}, c.hash));
    }
    w.manifest(c.effective, "sequence");
    if(!ib.holds) throw ConstantsViolation("sequence: measured S(rho_A) exceeds L at n=M+L");
    return prof.flags.empty() ? kOk : kCondition;
}

inline int run_lemma(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "lemma", c.hash);
    json           steps = json::array();
    bool           all_pass = true;
    const auto     grid = uniform_grid(c.lemma.grid_points);
    for(int n = c.lemma.n_first; n <= c.lemma.n_last; ++n) {
        json s;
        s["n"] = n;
        try {
            auto spec = detail::step_spec(ctx, n, c.lemma.l0, c.lemma.mu0_override, c.lemma.delta_override);
            if(c.lemma.zero_f) spec.f = zero_schedule();
            auto rep = certify_gap(spec, grid, c.lemma.tol, c.solver.options);

            double tl_err = 0;
            for(double lp : uniform_grid(c.lemma.two_level_points, -0.5, 0.5)) tl_err = std::max(tl_err, two_level_block(spec, lp).block_error);
            json tails = json::array();
            bool tails_ok = true;
            for(double lp : {0.25, 0.35, 0.45}) {
                auto r = tail_bound_check(spec, lp, 1e-9, c.solver.options);
                tails_ok = tails_ok && r.all_ok();
                tails.push_back({{"lambda_prime", lp}, {"c0", r.c0}, {"c0_sq_bound", r.c0_sq_bound}, {"c1", r.c1}, {"E1_minus_E0", r.E1_minus_E0}, {"bound", r.bound}, {"ok", r.all_ok()}});
            }
            s["site"]         = spec.added_site;
            s["mu0_measured"] = rep.mu0_measured;
            s["mu0"]          = rep.mu0;
            s["alpha"]        = rep.alpha;
            s["f0"]           = rep.f0;
            s["delta"]        = rep.delta;
            s["delta_tilde"]  = rep.delta_tilde;
            s["min_gap"]      = rep.min_gap;
            s["argmin"]       = rep.argmin;
            s["f_schedule"]   = c.lemma.zero_f ? "zero" : "default";
            s["two_level_max_error"] = tl_err;
            s["tail_checks"]  = tails;
            s["notes"]        = spec.notes;
            s["pass"]         = rep.pass;
            s["status"]       = rep.pass ? "certified" : "failed";
            all_pass          = all_pass && rep.pass;

            Table t;
            t.header = {"lambda", "E0", "E1", "gap"};
            for(std::size_t i = 0; i < rep.profile.grid.size(); ++i) t.rows.push_back({rep.profile.grid[i], rep.profile.E0[i], rep.profile.E1[i], rep.profile.gaps[i]});
            w.csv("gap_" + std::to_string(n) + ".csv", t);
        } catch(const ConditionViolation &e) {
            s["status"]  = "refused";
            s["pass"]    = false;
            s["message"] = e.what();
            all_pass     = false;
        }
        *ctx.log << "lemma n=" << n << ": " << s["status"].get<std::string>() << "\n";
        w.json("step_" + std::to_string(n) + ".json", s);
        steps.push_back(s);
    }
    json summary;
    summary["steps"]    = steps;
    summary["all_pass"] = all_pass;
    w.json("summary.json", summary);
    w.manifest(c.effective, "lemma");
    return all_pass ? kOk : kCondition;
}

struct AdiabaticStepResult {
    InterpolatorSpec spec;
    LocalityProfile  locality;
    double           max_defect = 0;
    PathResult       path;
    int              l_tilde = 0;
    PowerLawFit      envelope_fit;
    int              monotone_points = 0;
};

inline AdiabaticStepResult adiabatic_step(const Context &ctx, int n) {
    const auto         &c = ctx.cfg;
    AdiabaticStepResult r;
    r.spec = detail::step_spec(ctx, n, c.lemma.l0);
    GeneratorOptions go;
    go.kind   = c.adiabatic.generator;
    auto grid = uniform_grid(c.adiabatic.grid_points);
    for(double l : grid) r.max_defect = std::max(r.max_defect, generator_defect(r.spec, l, 1e-4, go));
    r.locality = locality_profile(r.spec, c.lattice, grid, go);
    for(const auto &d : r.locality.per_lambda) {
        r.l_tilde = std::max(r.l_tilde, d.l_tilde);
        r.monotone_points += increments_monotone(d);
    }
    r.envelope_fit = arealab::detail::fit_power_law(r.locality.envelope, r.spec.l0 + r.spec.k0, 1e-14);
    PathOptions po;
    po.start_steps    = c.adiabatic.start_steps;
    po.max_steps      = c.adiabatic.max_steps;
    po.fidelity_floor = c.adiabatic.fidelity_floor;
    po.generator      = go;
    std::vector<int> region;
    for(int s : c.adiabatic.region)
        if(std::find(r.spec.system.sites.begin(), r.spec.system.sites.end(), s) != r.spec.system.sites.end()) region.push_back(s);
    r.path = integrate_path_adaptive(r.spec, region, po);
    return r;
}

inline int run_adiabatic(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "adiabatic", c.hash);
    json           steps = json::array();
    for(int n = c.adiabatic.n_first; n <= c.adiabatic.n_last; ++n) {
        auto r = adiabatic_step(ctx, n);
        json s;
        s["n"]                     = n;
        s["generator"]             = to_string(c.adiabatic.generator);
        s["max_defect"]            = r.max_defect;
        s["l_tilde"]               = r.l_tilde;
        s["monotone_lambda_points"] = r.monotone_points;
        s["lambda_points"]         = static_cast<int>(r.locality.grid.size());
        s["max_telescoping_error"] = r.locality.max_telescoping_error;
        s["envelope_fit"]          = detail::fit_json(r.envelope_fit);
        s["path"] = {{"steps", r.path.steps}, {"final_fidelity", r.path.final_fidelity}, {"entropy_start", r.path.entropy_start}, {"entropy_end", r.path.entropy_end}};
        json per = json::array();
        for(std::size_t i = 0; i < r.locality.grid.size(); ++i) {
            const auto &d = r.locality.per_lambda[i];
            json        inc = json::array();
            for(const auto &t : d.increments) inc.push_back(t.norm);
            per.push_back({{"lambda", r.locality.grid[i]}, {"A_norm", d.A_norm}, {"l_tilde", d.l_tilde}, {"increments", inc}, {"monotone", increments_monotone(d)}});
        }
        s["per_lambda"] = per;
        steps.push_back(s);

        Table t;
        t.header = {"j", "envelope_norm", "ball_size"};
        for(const auto &g : r.locality.envelope) t.rows.push_back({static_cast<long long>(g.j), g.norm, static_cast<long long>(g.ball_size)});
        w.csv("locality_" + std::to_string(n) + ".csv", t);
        *ctx.log << "adiabatic n=" << n << ": defect " << r.max_defect << ", fidelity " << r.path.final_fidelity << "\n";
    }
    w.json("summary.json", {{"steps", steps}});
    w.manifest(c.effective, "adiabatic");
    return kOk;
}

inline int run_sie(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "sie", c.hash);
    auto           all  = sie_batch(c.sie.instances, c.seed, c.sie.dims);
    const int      half = c.sie.instances / 2;
    auto           a    = sie_batch(half, c.seed ^ 0xA5A5A5A5ULL, c.sie.dims);
    auto           b    = sie_batch(half, c.seed ^ 0x5A5A5A5AULL, c.sie.dims);
    const double   agreement = std::max(a.max_ratio, b.max_ratio) / std::max(std::min(a.max_ratio, b.max_ratio), 1e-300);

    json j;
    j["instances"]  = all.instances;
    j["dims"]       = c.sie.dims;
    j["max_ratio"]  = all.max_ratio;
    j["log_min_dim"] = std::log(static_cast<double>(std::min(all.d2, all.d3)));
    j["halves"]     = {{"instances", half}, {"max_ratio_a", a.max_ratio}, {"max_ratio_b", b.max_ratio}, {"factor", agreement}, {"within_factor_2", agreement <= 2.0}};
    w.json("sie.json", j);

    Table     t;
    const int bins = 20;
    t.header       = {"bin_lo", "bin_hi", "count"};
    std::vector<long long> counts(bins, 0);
    const double           top = all.max_ratio > 0 ? all.max_ratio : 1.0;
    for(double r : all.ratios) counts[std::min(bins - 1, static_cast<int>(r / top * bins))]++;
    for(int k = 0; k < bins; ++k) t.rows.push_back({top * k / bins, top * (k + 1) / bins, counts[k]});
    w.csv("sie_hist.csv", t);
    w.manifest(c.effective, "sie");
    return kOk;
}

inline int run_bounds(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "bounds", c.hash);
    auto           consts = verify_constants(c.lattice);
    TailParams     p;
    p.D  = c.bounds.D.value_or(c.lattice.dimension());
    p.n0 = c.bounds.n0.value_or(consts.n0);
    p.a0 = c.bounds.a0.value_or(consts.a0);
    p.l0 = c.bounds.l0;
    p.k0 = c.bounds.k0.value_or(c.model.k0);
    p.R0 = c.bounds.R0;
    p.r0 = c.bounds.r0;

    json sources;
    sources["n0"] = c.bounds.n0 ? "config" : "lattice";
    sources["a0"] = c.bounds.a0 ? "config" : "lattice";
    std::optional<AdiabaticStepResult> step;
    if(!c.bounds.g0 || !c.bounds.l_tilde) step = adiabatic_step(ctx, c.adiabatic.n_last);
    if(c.bounds.g0) {
        p.g0          = *c.bounds.g0;
        sources["g0"] = "config";
    } else {
        if(!step->envelope_fit.valid) throw ConditionViolation("bounds: the generator increments admit no power-law fit; set bounds.g0");
        p.g0          = step->envelope_fit.g0;
        sources["g0"] = "measured";
    }
    if(c.bounds.c_e) {
        p.c_e          = *c.bounds.c_e;
        sources["c_e"] = "config";
    } else {
        p.c_e          = sie_batch(c.sie.instances, c.seed, c.sie.dims).max_ratio;
        sources["c_e"] = "measured";
    }
    p.l_tilde          = c.bounds.l_tilde ? *c.bounds.l_tilde : static_cast<double>(step->l_tilde);
    sources["l_tilde"] = c.bounds.l_tilde ? "config" : "measured";

    auto rep = tail_integral(p);
    json j;
    j["constants"] = {{"D", p.D}, {"n0", p.n0}, {"a0", p.a0}, {"l0", p.l0}, {"k0", p.k0}, {"R0", p.R0}, {"r0", p.r0}, {"g0", p.g0}, {"c_e", p.c_e}, {"l_tilde", *p.l_tilde}};
    j["sources"]        = sources;
    j["v_D"]            = rep.v_D;
    j["tail_integral"]  = rep.value;
    j["tail_integral_2R0"] = rep.value_2R0;
    j["exponent"]       = rep.exponent;
    j["c_coeffs"]       = rep.c_coeffs;
    j["tail_coeffs"]    = rep.tail_coeffs;
    j["initial_coeffs"] = rep.initial_coeffs;
    j["moments"]        = rep.moments;
    j["initial_bound"]  = p.n0 * rep.v_D * (std::pow(p.R0 + p.r0, p.D) - std::pow(p.R0, p.D));
    j["initial_bound_leading"] = p.n0 * rep.v_D * p.r0 * p.D * std::pow(p.R0, p.D - 1);
    if(step) j["measured_step"] = step->spec.n;
    w.json("bounds.json", j);
    w.manifest(c.effective, "bounds");
    return kOk;
}

inline int run_counterexample(Context &ctx) {
    const auto    &c = ctx.cfg;
    ArtifactWriter w(ctx.out / "counterexample", c.hash);
    auto           rep = counterexample_check(c.counterexample.n_max, c.counterexample.M, c.counterexample.delta, c.solver.options);
    json           j;
    j["M"]           = rep.M;
    j["delta"]       = rep.delta;
    j["n_values"]    = rep.n_values;
    j["gaps"]        = rep.gaps;
    j["min_gap"]     = rep.min_gap;
    j["k_values"]    = rep.k_values;
    j["overlaps"]    = rep.overlaps;
    j["max_overlap"] = rep.max_overlap;
    j["gap_ok"]      = rep.min_gap >= rep.delta - 1e-9;
    j["overlap_vanishes"] = rep.max_overlap < 1e-10;
    w.json("counterexample.json", j);
    Table t;
    t.header = {"n", "gap"};
    for(std::size_t i = 0; i < rep.n_values.size(); ++i) t.rows.push_back({static_cast<long long>(rep.n_values[i]), rep.gaps[i]});
    w.csv("gaps.csv", t);
    w.manifest(c.effective, "counterexample");
    return kOk;
}

// ---------------------------------------------------------------------------------

/// Entry point shared by the executable and the tests.
inline int main(int argc, const char *const *argv, std::ostream &log = std::cerr) {
    CLI::App app{"Finite-size area-law toolkit for gapped lattice Hamiltonians"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string              config_path, out_dir = "out", cache_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "RNG seed (overrides the config)");
    app.add_option("--cache", cache_dir, "ground-state cache directory");
    app.add_option("--override", overrides, "dotted KEY=VALUE config override")->take_all();

    using Runner = int (*)(Context &);
    const std::vector<std::pair<std::string, Runner>> commands{{"sequence", run_sequence}, {"lemma", run_lemma},   {"adiabatic", run_adiabatic},
                                                               {"sie", run_sie},           {"bounds", run_bounds}, {"counterexample", run_counterexample}};
    std::vector<CLI::App *> subs;
    for(const auto &[name, fn] : commands) subs.push_back(app.add_subcommand(name, "run the " + name + " stage"));
    auto *all = app.add_subcommand("all", "run every stage in order");

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int rc = app.exit(e, log, log);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        Context ctx;
        ctx.log = &log;
        ctx.cfg = resolve_config(config_path.empty() ? json(nullptr) : read_json_file(config_path), overrides, seed);
        ctx.out = out_dir;
        DirLock                  out_lock(ctx.out);
        std::optional<DirLock>   cache_lock;
        if(!cache_dir.empty()) {
            cache_lock.emplace(cache_dir);
            ctx.cache = std::make_unique<GroundCache>(cache_dir);
        } else
            ctx.cache = std::make_unique<GroundCache>();

        int rc = kOk;
        for(std::size_t i = 0; i < commands.size(); ++i) {
            if(!subs[i]->parsed() && !all->parsed()) continue;
            int r;
            try {
                r = commands[i].second(ctx);
            } catch(const std::exception &e) {
                log << "error: " << commands[i].first << ": " << e.what() << "\n";
                r = exit_code_for(e);
                if(!all->parsed()) return r;
            }
            if(rc == kOk) rc = r;
        }
        const auto &st = ctx.cache->stats();
        log << "cache: " << st.memory_hits << " memory hits, " << st.disk_hits << " disk hits, " << st.misses << " misses, " << st.corrupt << " corrupt\n";
        return rc;
    } catch(const std::exception &e) {
        log << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace arealab::cli
