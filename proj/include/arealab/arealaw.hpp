#pragma once

#include "arealab/interpolation.hpp"
#include "arealab/store.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <cmath>
#include <limits>
#include <optional>

namespace arealab {

// ---------------------------------------------------------------------------------
// Regions

struct RegionSpec {
    Coord            origin;
    double           R0 = 0;
    double           r0 = 0;
    std::vector<int> A;       ///< l_E(origin) <= R0, radial order
    std::vector<int> A_prime; ///< l_E(origin) <= R0 + r0, radial order
    int              M = 0, L = 0;
};

inline RegionSpec make_region(const Lattice &lat, const Coord &origin, double R0, double r0) {
    if(!(R0 >= 0)) throw ParameterError("region: R0 must be non-negative");
    if(!(r0 > 0)) throw ParameterError("region: r0 must be positive");
    RegionSpec reg{origin, R0, r0, {}, {}, 0, 0};
    const auto ord = order_sites_by_radius(lat, origin);
    const double eps = 1e-12 * std::max(1.0, R0 + r0);
    for(int s : ord.order) {
        const double r = Lattice::euclidean(lat.site(s).coords, origin);
        if(r <= R0 + eps) reg.A.push_back(s);
        if(r <= R0 + r0 + eps) reg.A_prime.push_back(s);
    }
    reg.M = static_cast<int>(reg.A.size());
    reg.L = static_cast<int>(reg.A_prime.size()) - reg.M;
    if(reg.M == 0) throw ParameterError("region: A contains no sites (increase R0)");
    return reg;
}

/// Adiabatic accounting needs the shell to be wider than the generator's locality length.
inline void check_adiabatic_radius(double r0, double a0, double l_tilde) {
    if(!(r0 > a0 * l_tilde))
        throw ParameterError("region: r0=" + std::to_string(r0) + " must exceed a0*l_tilde=" + std::to_string(a0 * l_tilde));
}

/// Minimum Euclidean distance from site s to region A.
inline double distance_to_region(const Lattice &lat, int s, const std::vector<int> &A) {
    double d = std::numeric_limits<double>::infinity();
    for(int a : A) d = std::min(d, lat.euclidean(s, a));
    return d;
}

// ---------------------------------------------------------------------------------
// Growth sequence

enum class OverlapPolicy { Abort, Flag };

struct GrowOptions {
    int                   l0 = 2;
    SolverOptions         solver;
    AssemblyLimits        limits;
    std::optional<double> delta_floor;        ///< configured Delta; smaller gaps are reported
    OverlapPolicy         overlap_policy = OverlapPolicy::Abort;
    double                overlap_failure = 1 - 1e-9; ///< mu at or above this counts as vanishing overlap
    bool                  compute_overlap = true;
    int                   max_sites       = 20;
    GroundCache          *cache           = nullptr;
};

struct ProfileStep {
    int    n        = 0;
    int    site     = 0;
    double distance = 0;     ///< to the origin
    double gap      = 0;
    double mu       = std::numeric_limits<double>::quiet_NaN(); ///< mu_n(l0) = sqrt(1 - F)
    double overlap_D = std::numeric_limits<double>::quiet_NaN(); ///< trace distance outside B_n^{l0}
    double entropy_A = 0;    ///< log-d units
    double dist_to_final = 0;
    bool   cached   = false;
    Mat    rho_A;
};

struct EntropyProfile {
    RegionSpec               region;
    std::vector<int>         order;
    int                      local_dim = 2;
    std::vector<ProfileStep> steps;
    std::vector<std::string> warnings;
    std::vector<std::string> flags;
};

inline EntropyProfile grow_sequence(const ModelSpec &model, const RegionSpec &region, int N, const GrowOptions &opt = {}) {
    const Lattice &lat   = model.lattice;
    const int      start = region.M + region.L;
    if(N < start) throw ParameterError("grow_sequence: N=" + std::to_string(N) + " is below M+L=" + std::to_string(start));
    if(N > lat.size()) throw ParameterError("grow_sequence: N exceeds the lattice size");
    if(N > opt.max_sites) throw ResourceError("grow_sequence: N=" + std::to_string(N) + " exceeds the site cap " + std::to_string(opt.max_sites));

    EntropyProfile prof;
    prof.region    = region;
    prof.local_dim = model.local_dim;
    prof.order     = order_sites_by_radius(lat, region.origin).order;
    for(int i = 0; i < start; ++i)
        if(std::find(region.A_prime.begin(), region.A_prime.end(), prof.order[i]) == region.A_prime.end())
            throw ModelError("grow_sequence: region A' is not a prefix of the radial order");

    Vec prev;
    for(int n = start; n <= N; ++n) {
        std::vector<int> sites(prof.order.begin(), prof.order.begin() + n);
        Hamiltonian      h      = model_hamiltonian(model, sites);
        auto             layout = StateLayout::of(h);
        ProfileStep      st;
        st.n        = n;
        st.site     = sites.back();
        st.distance = Lattice::euclidean(lat.site(st.site).coords, region.origin);
        auto gs     = cached_ground_state(h, opt.solver, opt.cache, opt.limits, &st.cached);
        if(gs.degenerate)
            throw ConditionViolation("grow_sequence: degenerate ground state at step n=" + std::to_string(n) + " (site " + std::to_string(st.site) + ")");
        st.gap = gs.gap;
        if(opt.delta_floor && gs.gap < *opt.delta_floor)
            prof.warnings.push_back("constants violation: gap " + std::to_string(gs.gap) + " below Delta=" + std::to_string(*opt.delta_floor) + " at n=" +
                                    std::to_string(n));
        st.rho_A     = partial_trace(gs.ground_vector, layout, region.A).matrix;
        st.entropy_A = entropy(st.rho_A, model.local_dim);

        if(opt.compute_overlap && n > start) {
            Vec  phi0 = dominant_site_state(gs.ground_vector, layout, st.site);
            Vec  ext  = kron_le(prev, phi0);
            auto b    = ball(lat, st.site, opt.l0);
            std::vector<int> reg;
            for(int s : sites)
                if(b.contains(s)) reg.push_back(s);
            st.mu        = mu_value(gs.ground_vector, ext, layout, reg).mu;
            st.overlap_D = reduced_trace_distance(gs.ground_vector, ext, layout, reg);
            if(st.mu >= opt.overlap_failure) {
                std::string msg = "overlap condition fails at step n=" + std::to_string(n) + " (site " + std::to_string(st.site) +
                                  "): mu_n(l0)=" + std::to_string(st.mu);
                if(opt.overlap_policy == OverlapPolicy::Abort) throw ConditionViolation(msg);
                prof.flags.push_back(msg);
            }
        }
        prev = std::move(gs.ground_vector);
        prof.steps.push_back(std::move(st));
    }
    const Mat &fin = prof.steps.back().rho_A;
    for(auto &st : prof.steps) st.dist_to_final = trace_distance(st.rho_A, fin);
    return prof;
}

// ---------------------------------------------------------------------------------
// Bounds

/// Volume of the unit ball in D dimensions.
inline double unit_ball_volume(int D) {
    require(D >= 1, "unit_ball_volume: D must be >= 1");
    return std::pow(M_PI, D / 2.0) / std::tgamma(D / 2.0 + 1.0);
}

struct InitialBound {
    int    L          = 0;   ///< shell population, log-d units
    double geometric  = 0;   ///< n0 v_D [(R0+r0)^D - R0^D]
    double leading    = 0;   ///< n0 v_D r0 D R0^(D-1)
    double v_D        = 0;
    double n0         = 0;
    std::optional<double> measured_entropy;
    bool   holds      = true; ///< measured S <= L (when measured)
};

inline InitialBound initial_bound(const RegionSpec &region, const Lattice &lat, const LatticeConstants &consts, std::optional<double> measured_entropy = {}) {
    InitialBound b;
    const int    D = lat.dimension();
    b.L            = region.L;
    b.v_D          = unit_ball_volume(D);
    b.n0           = consts.n0;
    b.geometric    = consts.n0 * b.v_D * (std::pow(region.R0 + region.r0, D) - std::pow(region.R0, D));
    b.leading      = consts.n0 * b.v_D * region.r0 * D * std::pow(region.R0, D - 1);
    b.measured_entropy = measured_entropy;
    if(measured_entropy) b.holds = *measured_entropy <= b.L + 1e-12;
    return b;
}

struct TelescopingReport {
    std::vector<double> deltas;       ///< S(n) - S(n-1)
    std::vector<double> partial_sums; ///< S(start) + running sum
    double              S_initial = 0;
    double              S_final   = 0;
    double              identity_error = 0;
    double              max_abs_partial = 0;
};

inline TelescopingReport telescoping_report(const EntropyProfile &prof) {
    require(!prof.steps.empty(), "telescoping_report: empty profile");
    TelescopingReport t;
    t.S_initial = prof.steps.front().entropy_A;
    t.S_final   = prof.steps.back().entropy_A;
    double acc  = t.S_initial;
    t.partial_sums.push_back(acc);
    for(std::size_t i = 1; i < prof.steps.size(); ++i) {
        double d = prof.steps[i].entropy_A - prof.steps[i - 1].entropy_A;
        t.deltas.push_back(d);
        acc += d;
        t.partial_sums.push_back(acc);
        t.max_abs_partial = std::max(t.max_abs_partial, std::abs(acc - t.S_initial));
    }
    t.identity_error = std::abs(acc - t.S_final);
    return t;
}

struct TailParams {
    int    D  = 1;
    double n0 = 1, a0 = 1;
    int    l0 = 2, k0 = 2;
    double R0 = 10, r0 = 6;
    double g0 = 1, c_e = 1;
    std::optional<double> l_tilde; ///< when set, r0 > a0 l_tilde is required
};

struct TailReport {
    double              value   = 0;   ///< closing double integral at R0
    double              value_2R0 = 0;
    double              exponent = 0;  ///< log2(value(2R0)/value(R0))
    std::vector<double> tail_coeffs;   ///< c_{D-1} .. c_0 from the integral
    std::vector<double> initial_coeffs; ///< c_{D-1} .. c_0 from the initial bound
    std::vector<double> c_coeffs;      ///< combined
    std::vector<double> moments;       ///< J_m, m = 0..D-1
    double              v_D = 0;
    double              prefactor = 0; ///< K = n0 v_D c_e g0 n0 v_D a0^D
    double              quadrature_error = 0;
};

namespace detail {

inline std::vector<double> poly_mul(const std::vector<double> &a, const std::vector<double> &b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for(std::size_t i = 0; i < a.size(); ++i)
        for(std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

/// Coefficients of (u + s)^p in u.
inline std::vector<double> binomial_poly(double s, int p) {
    std::vector<double> c(p + 1);
    for(int k = 0; k <= p; ++k) c[k] = boost::math::binomial_coefficient<double>(p, k) * std::pow(s, p - k);
    return c;
}

/// J_m = int_{r0}^inf r^m int_{r/a0}^inf (x-1)^D/(x-1-c)^{4D} dx dr, rewritten with
/// u = x - 1 - c as int_{u0}^inf (u+c)^D [(a0(u+1+c))^{m+1} - r0^{m+1}]/(m+1) u^{-4D} du.
/// Gauss-Kronrod on [u0, U] plus the exact power-sum tail beyond U.
inline double tail_moment(int D, int m, double a0, double c, double r0, double *err) {
    const double u0 = r0 / a0 - 1 - c;
    auto         num = poly_mul(binomial_poly(c, D), binomial_poly(1 + c, m + 1));
    for(double &x : num) x *= std::pow(a0, m + 1) / (m + 1);
    const double sub = std::pow(r0, m + 1) / (m + 1);
    auto         shift = binomial_poly(c, D);
    for(std::size_t k = 0; k < shift.size(); ++k) num[k] -= sub * shift[k];

    auto integrand = [&](double u) {
        double p = 0;
        for(std::size_t k = num.size(); k-- > 0;) p = p * u + num[k];
        return p * std::pow(u, -4.0 * D);
    };
    const double U   = std::max(64.0 * u0, 64.0 * (1 + c));
    double       e   = 0;
    double       fin = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, u0, U, 20, 1e-14, &e);
    double       tail = 0;
    for(std::size_t k = 0; k < num.size(); ++k) {
        const double p = static_cast<double>(k) - 4.0 * D + 1.0; // exponent of the antiderivative
        tail += num[k] * std::pow(U, p) / (-p);
    }
    if(err) *err = e * std::abs(fin);
    return fin + tail;
}

} // namespace detail

inline TailReport tail_integral(const TailParams &p) {
    require(p.D >= 1, "tail_integral: D must be >= 1");
    require(p.a0 > 0 && p.n0 > 0 && p.R0 >= 0 && p.r0 > 0, "tail_integral: a0, n0, r0 must be positive and R0 non-negative");
    const double c = p.l0 + p.k0;
    if(p.l_tilde) check_adiabatic_radius(p.r0, p.a0, *p.l_tilde);
    if(!(p.r0 / p.a0 > 1 + c))
        throw ParameterError("tail_integral diverges: requires r0/a0 > 1+l0+k0 (r0/a0=" + std::to_string(p.r0 / p.a0) + ", 1+l0+k0=" + std::to_string(1 + c) + ")");
    TailReport rep;
    rep.v_D       = unit_ball_volume(p.D);
    rep.prefactor = p.n0 * rep.v_D * p.c_e * p.g0 * p.n0 * rep.v_D * std::pow(p.a0, p.D);
    for(int m = 0; m < p.D; ++m) {
        double e = 0;
        rep.moments.push_back(detail::tail_moment(p.D, m, p.a0, c, p.r0, &e));
        rep.quadrature_error = std::max(rep.quadrature_error, e);
    }
    // (R0 + r)^(D-1) = sum_m C(D-1, m) R0^(D-1-m) r^m
    rep.tail_coeffs.assign(p.D, 0.0);
    rep.initial_coeffs.assign(p.D, 0.0);
    for(int m = 0; m < p.D; ++m) rep.tail_coeffs[m] = rep.prefactor * p.D * boost::math::binomial_coefficient<double>(p.D - 1, m) * rep.moments[m];
    for(int m = 1; m <= p.D; ++m) rep.initial_coeffs[m - 1] = p.n0 * rep.v_D * boost::math::binomial_coefficient<double>(p.D, m) * std::pow(p.r0, m);
    rep.c_coeffs.resize(p.D);
    for(int i = 0; i < p.D; ++i) rep.c_coeffs[i] = rep.tail_coeffs[i] + rep.initial_coeffs[i];

    auto eval = [&](double R) {
        double s = 0;
        for(int i = 0; i < p.D; ++i) s += rep.tail_coeffs[i] * std::pow(R, p.D - 1 - i);
        return s;
    };
    rep.value     = eval(p.R0);
    rep.value_2R0 = eval(2 * p.R0);
    rep.exponent  = std::log(rep.value_2R0 / rep.value) / std::log(2.0);
    return rep;
}

// ---------------------------------------------------------------------------------
// Saturation

struct SaturationReport {
    std::optional<int> n_star;
    int                site = -1;
    double             distance_to_A = 0;
    double             tol = 0;
};

inline SaturationReport saturation_check(const EntropyProfile &prof, const Lattice &lat, double tol) {
    SaturationReport rep;
    rep.tol = tol;
    for(std::size_t i = prof.steps.size(); i-- > 0;) {
        if(prof.steps[i].dist_to_final >= tol) break;
        rep.n_star = prof.steps[i].n;
        rep.site   = prof.steps[i].site;
    }
    if(rep.n_star) rep.distance_to_A = distance_to_region(lat, rep.site, prof.region.A);
    return rep;
}

// ---------------------------------------------------------------------------------
// Counterexample and bounded-entropy trend

struct CounterexampleReport {
    int                 M = 0;
    double              delta = 0;
    std::vector<int>    n_values;
    std::vector<double> gaps;
    std::vector<int>    k_values;      ///< balls smaller than the system at n = M
    std::vector<double> overlaps;      ///< Uhlmann overlap across n = M for each k
    double              min_gap = 0;
    double              max_overlap = 0;
};

/// Chain of the four-level model grown from site 0; overlaps use the dominant site state.
inline CounterexampleReport counterexample_check(int n_max, int M, double delta, const SolverOptions &sopt = {}) {
    require(n_max >= M && M >= 2, "counterexample: need 2 <= M <= n_max");
    Lattice              lat   = build_lattice(1, {n_max}, 1.0);
    ModelSpec            model = contrived_model(lat, M, delta);
    CounterexampleReport rep;
    rep.M       = M;
    rep.delta   = delta;
    rep.min_gap = std::numeric_limits<double>::infinity();
    Vec prev_at_M;
    for(int n = 1; n <= n_max; ++n) {
        std::vector<int> sites(n);
        std::iota(sites.begin(), sites.end(), 0);
        auto h  = model_hamiltonian(model, sites);
        auto gs = ground_state(assemble(h), sopt);
        if(gs.degenerate) throw ConditionViolation("counterexample: degenerate ground state at n=" + std::to_string(n));
        rep.n_values.push_back(n);
        rep.gaps.push_back(gs.gap);
        rep.min_gap = std::min(rep.min_gap, gs.gap);
        if(n == M - 1) prev_at_M = gs.ground_vector;
        if(n == M) {
            auto layout = StateLayout::of(h);
            Vec  phi0   = dominant_site_state(gs.ground_vector, layout, n - 1);
            Vec  ext    = kron_le(prev_at_M, phi0);
            for(int k = 1;; ++k) {
                auto             b = ball(lat, n - 1, k);
                std::vector<int> reg;
                for(int s : sites)
                    if(b.contains(s)) reg.push_back(s);
                if(static_cast<int>(reg.size()) >= n) break;
                rep.k_values.push_back(k);
                rep.overlaps.push_back(uhlmann_unitary(gs.ground_vector, ext, layout, reg).overlap);
                rep.max_overlap = std::max(rep.max_overlap, rep.overlaps.back());
            }
        }
    }
    return rep;
}

struct TrendReport {
    std::vector<int>    lengths;
    std::vector<double> max_entropy; ///< max_n S(rho_A^(n)), log-d units
    double              spread = 0;  ///< (max - min) / max
};

/// TFIM chains of the given lengths with A = the `m_sites` central sites; each length is
/// grown from A' (one extra shell of `shell` sites per side) to the full chain.
inline TrendReport bounded_entropy_trend(const std::vector<int> &lengths, double J, double g, int m_sites, double r0, const GrowOptions &opt) {
    TrendReport rep;
    for(int len : lengths) {
        require(len % 2 == m_sites % 2, "bounded_entropy_trend: length and |A| must share parity so A is centered");
        Lattice    lat    = build_lattice(1, {len}, 1.0);
        ModelSpec  model  = tfim_model(lat, J, g);
        Coord      origin{(len - 1) / 2.0};
        RegionSpec region = make_region(lat, origin, (m_sites - 1) / 2.0, r0);
        if(region.M != m_sites) throw ParameterError("bounded_entropy_trend: region does not contain exactly |A| sites");
        GrowOptions o     = opt;
        o.compute_overlap = false;
        auto prof         = grow_sequence(model, region, len, o);
        double mx         = 0;
        for(const auto &s : prof.steps) mx = std::max(mx, s.entropy_A);
        rep.lengths.push_back(len);
        rep.max_entropy.push_back(mx);
    }
    const auto [lo, hi] = std::minmax_element(rep.max_entropy.begin(), rep.max_entropy.end());
    rep.spread          = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
    return rep;
}

} // namespace arealab
