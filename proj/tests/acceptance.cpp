// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status counts failures that are not listed in kDocumentedDeviations. A documented
// deviation still prints FAIL; --strict makes every failure count.

#include "arealab/arealaw.hpp"
#include "arealab/adiabatic.hpp"
#include "fixtures.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace arealab;

namespace {

const std::set<int> kDocumentedDeviations{7};

struct Outcome {
    bool        pass = false;
    std::string detail;
};

std::string fmt(const char *f, double x) {
    char b[64];
    std::snprintf(b, sizeof b, f, x);
    return b;
}

/// Certified TFIM steps, built once and shared between criteria.
struct Steps {
    std::map<int, InterpolatorSpec> spec;
    std::map<int, fixtures::Step>   step;
    std::map<int, CertifyReport>    cert;

    const InterpolatorSpec &get(int n) {
        if(!spec.count(n)) {
            step.emplace(n, fixtures::tfim_chain_step(n, 1.0, 2.0));
            const auto &s = step.at(n);
            spec.emplace(n, build_endpoints(s.prev, s.next, s.lat));
        }
        return spec.at(n);
    }
};

Steps g_steps;

Outcome ac1() {
    auto         t0 = std::chrono::steady_clock::now();
    double       worst_margin = std::numeric_limits<double>::infinity();
    int          worst_n = 0;
    bool         ok = true;
    for(int n = 5; n <= 10; ++n) {
        const auto &spec = g_steps.get(n);
        auto        rep  = certify_gap(spec, uniform_grid(41), 1e-7);
        g_steps.cert.emplace(n, rep);
        const double need   = rep.f0 * (1 - rep.mu0) * rep.delta;
        const double margin = rep.min_gap - (need - 1e-7);
        ok = ok && margin >= 0;
        if(margin < worst_margin) worst_margin = margin, worst_n = n;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 600;
    return {ok, "n=5..10 certified, smallest margin " + fmt("%.3e", worst_margin) + " at n=" + std::to_string(worst_n) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome ac2() {
    double worst = 0;
    for(int n = 5; n <= 10; ++n)
        for(double lp : uniform_grid(21, -0.5, 0.5)) worst = std::max(worst, two_level_block(g_steps.get(n), lp).block_error);
    return {worst <= 1e-10, "max |omega - block eigenvalue| = " + fmt("%.2e", worst) + " over 21 points x 6 steps"};
}

Outcome ac3() {
    bool   ok = true;
    double c1_excess = -1, gap_margin = std::numeric_limits<double>::infinity(), c0_margin = std::numeric_limits<double>::infinity();
    for(int n = 5; n <= 10; ++n)
        for(double lp : {0.25, 0.35, 0.45}) {
            auto r = tail_bound_check(g_steps.get(n), lp);
            ok     = ok && r.c0_ok && r.c1 <= r.c0 + 1e-9 && r.gap_ok;
            c1_excess  = std::max(c1_excess, r.c1 - r.c0);
            gap_margin = std::min(gap_margin, r.E1_minus_E0 - r.bound);
            c0_margin  = std::min(c0_margin, r.c0_sq_bound - r.c0 * r.c0);
        }
    return {ok, "min(c0^2 bound - c0^2) " + fmt("%.2e", c0_margin) + ", max(c1 - c0) " + fmt("%.2e", c1_excess) + ", min(E1-E0 - f0 alpha Delta) " + fmt("%.3e", gap_margin)};
}

Outcome ac4() {
    auto rep = counterexample_check(5, 3, 1.0);
    bool ok  = rep.min_gap >= 1.0 - 1e-9 && !rep.overlaps.empty() && rep.max_overlap < 1e-10;
    return {ok, "min gap " + fmt("%.12f", rep.min_gap) + ", max overlap across n=M " + fmt("%.2e", rep.max_overlap) + " over k=1.." + std::to_string(rep.k_values.size())};
}

Outcome ac5() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dim(2, 16);
    double worst = -1;
    for(int i = 0; i < 500; ++i) {
        const int d   = dim(rng);
        Mat       rho = random_density(d, d, rng), sig = random_density(d, 1 + i % d, rng);
        const double F = fidelity(rho, sig), D = trace_distance(rho, sig);
        worst = std::max({worst, (1 - F) - D, D - std::sqrt(std::max(0.0, 1 - F * F))});
    }
    const bool  sandwich = worst <= 1e-9;
    StateLayout layout{{0, 1, 2, 3}, {2, 2, 2, 2}};
    double      match = 0, beaten = -1;
    for(int i = 0; i < 100; ++i) {
        Vec  psi = random_state(16, rng), phi = random_state(16, rng);
        auto u   = uhlmann_unitary(psi, phi, layout, {0, 1});
        match    = std::max(match, std::abs(u.overlap - fidelity(partial_trace(psi, layout, {2, 3}), partial_trace(phi, layout, {2, 3}))));
        for(int k = 0; k < 100; ++k) {
            Mat V = random_unitary(4, rng);
            beaten = std::max(beaten, std::abs(psi.dot(apply_on(V, {0, 1}, layout.dims, phi))) - u.overlap);
        }
    }
    const bool ok = sandwich && match <= 1e-9 && beaten <= 1e-12;
    return {ok, "sandwich worst " + fmt("%.2e", worst) + ", |overlap - F| " + fmt("%.2e", match) + ", best random excess " + fmt("%.2e", beaten) + " (10^4 unitaries)"};
}

Outcome ac6() {
    double worst = 0, fid = 1;
    int    steps = 0;
    for(int n = 5; n <= 6; ++n) {
        const auto &spec = g_steps.get(n);
        for(double l : uniform_grid(21)) worst = std::max(worst, generator_defect(spec, l));
        auto p = integrate_path_adaptive(spec, {0, 1});
        fid    = std::min(fid, p.final_fidelity);
        steps  = std::max(steps, p.steps);
    }
    return {worst < 1e-5 && fid >= 1 - 1e-6, "max defect " + fmt("%.2e", worst) + ", min final fidelity 1-" + fmt("%.1e", 1 - fid) + " at " + std::to_string(steps) + " steps"};
}

Outcome ac7() {
    std::ostringstream bad;
    double             tele = 0;
    bool               mono = true;
    for(int n = 5; n <= 8; ++n) {
        const auto &spec = g_steps.get(n);
        auto        prof = locality_profile(spec, g_steps.step.at(n).lat, uniform_grid(21));
        tele             = std::max(tele, prof.max_telescoping_error);
        std::vector<double> failing;
        for(std::size_t i = 0; i < prof.grid.size(); ++i)
            if(!increments_monotone(prof.per_lambda[i])) failing.push_back(prof.grid[i]);
        if(!failing.empty()) {
            mono = false;
            bad << " n=" << n << ":" << failing.size() << "/21 [" << failing.front() << "," << failing.back() << "]";
        }
    }
    return {mono && tele <= 1e-9, "telescoping " + fmt("%.1e", tele) + (mono ? ", increments monotone" : ", non-monotone lambda points" + bad.str())};
}

Outcome ac8() {
    auto all = sie_batch(200, 8);
    auto a   = sie_batch(100, 8 ^ 0xA5A5A5A5ULL), b = sie_batch(100, 8 ^ 0x5A5A5A5AULL);
    const double factor = std::max(a.max_ratio, b.max_ratio) / std::min(a.max_ratio, b.max_ratio);
    const Vec    up = Vec::Unit(2, 0), down = Vec::Unit(2, 1);
    const Vec    prod = kron_le(kron_le(up, down), kron_le(down, up));
    const double zero   = std::abs(entangling_rate(prod, Mat::Zero(4, 4), {2, 2, 2, 2}).rate);
    const bool   ok     = std::isfinite(all.max_ratio) && factor <= 2 && zero <= 1e-10;
    return {ok, "max ratio " + fmt("%.4f", all.max_ratio) + ", halves factor " + fmt("%.3f", factor) + ", product-state rate " + fmt("%.1e", zero)};
}

Outcome ac9() {
    struct Run {
        Lattice lat;
        double  g;
        Coord   origin;
        double  R0, r0;
        int     N;
    };
    std::vector<Run> runs{{build_lattice(1, {12}, 1.0), 2.0, {5.5}, 1.5, 2.0, 12}, {build_lattice(1, {10}, 1.0), 1.2, {4.5}, 0.5, 1.0, 10},
                          {build_lattice(1, {10}, 1.0), 10.0, {0.0}, 1.0, 2.0, 10}, {build_lattice(2, {3, 4}, 1.0), 2.5, {1.0, 1.5}, 0.6, 1.0, 12}};
    double worst_tele = 0, worst_gap = std::numeric_limits<double>::infinity();
    bool   ok = true;
    for(const auto &r : runs) {
        auto reg  = make_region(r.lat, r.origin, r.R0, r.r0);
        auto prof = grow_sequence(tfim_model(r.lat, 1.0, r.g), reg, r.N);
        auto ib   = initial_bound(reg, r.lat, verify_constants(r.lat), prof.steps.front().entropy_A);
        auto tr   = telescoping_report(prof);
        ok        = ok && ib.holds && tr.identity_error <= 1e-12;
        worst_tele = std::max(worst_tele, tr.identity_error);
        worst_gap  = std::min(worst_gap, ib.L - *ib.measured_entropy);
    }
    double ex[2];
    for(int D : {1, 2}) {
        TailParams p;
        p.D  = D;
        p.r0 = 6;
        p.R0 = 100 * p.r0;
        ex[D - 1] = tail_integral(p).exponent;
        ok        = ok && std::abs(ex[D - 1] - (D - 1)) <= 0.05;
    }
    return {ok, std::to_string(runs.size()) + " runs: min(L - S) " + fmt("%.3f", worst_gap) + ", telescoping " + fmt("%.1e", worst_tele) + ", exponents D=1 " +
                    fmt("%.4f", ex[0]) + " D=2 " + fmt("%.4f", ex[1])};
}

Outcome ac10() {
    GroundCache cache;
    GrowOptions o;
    o.cache  = &cache;
    auto rep = bounded_entropy_trend({20, 18, 16, 14, 12, 10, 8}, 1.0, 2.0, 4, 2.0, o);
    std::ostringstream s;
    s << "max S per length";
    for(std::size_t i = rep.lengths.size(); i-- > 0;) s << " " << rep.lengths[i] << ":" << fmt("%.6f", rep.max_entropy[i]);
    s << ", spread " << fmt("%.2e", rep.spread);
    return {rep.spread < 0.1, s.str()};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App         app{"acceptance criteria"};
    bool             strict = false;
    std::vector<int> only;
    app.add_flag("--strict", strict, "count documented deviations as failures");
    app.add_option("--only", only, "run a subset of criteria (numbers)")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10};
    std::set<int> selected(only.begin(), only.end());
    // AC2, AC3 and AC6/AC7 reuse the certified steps of AC1.
    for(int k : {2, 3, 6, 7})
        if(selected.count(k)) selected.insert(1);
    int unexpected = 0, failed = 0;
    for(std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if(!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        auto    t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i]();
        } catch(const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool   documented = kDocumentedDeviations.count(id) > 0;
        if(!o.pass) {
            ++failed;
            if(strict || !documented) ++unexpected;
        }
        std::printf("AC%-2d %s  %s  (%.1f s)%s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs, !o.pass && documented ? "  [documented deviation]" : "");
        std::fflush(stdout);
    }
    std::printf("%d failed, %d unexpected\n", failed, unexpected);
    return unexpected == 0 ? 0 : 1;
}
