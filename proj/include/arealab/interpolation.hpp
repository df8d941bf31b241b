#pragma once

#include "arealab/lattice.hpp"
#include "arealab/operators.hpp"
#include "arealab/qinfo.hpp"
#include "arealab/spectra.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace arealab {

/// Site label used for the two-level ancilla; it is always the last tensor factor.
inline constexpr int kAncillaSite = -1;

// ---------------------------------------------------------------------------------
// Coupling schedule f(lambda')

struct FSchedule {
    double f0    = 0.1;
    double alpha = 1.0;
    bool   zero  = false; ///< f == 0 everywhere (uncoupled crossing)

    [[nodiscard]] double plateau() const { return f0 * alpha; }

    static double smoothstep(double t) { return t * t * t * (t * (6 * t - 15) + 10); }
    static double smoothstep_slope(double t) { return 30 * t * t * (t - 1) * (t - 1); }

    /// f as a function of lambda' = lambda - 1/2.
    [[nodiscard]] double operator()(double lp) const {
        if(zero) return 0.0;
        const double x = std::abs(lp), a = plateau();
        if(x <= a) return f0;
        if(x <= 0.2) return f0 - (f0 - f0 * f0) * smoothstep((x - a) / (0.2 - a));
        if(x <= 0.5) return f0 * f0 * (1 - smoothstep((x - 0.2) / 0.3));
        return 0.0;
    }

    /// df/dlambda' (equal to df/dlambda).
    [[nodiscard]] double derivative(double lp) const {
        if(zero) return 0.0;
        const double x = std::abs(lp), a = plateau(), sgn = lp < 0 ? -1.0 : 1.0;
        if(x <= a || x >= 0.5) return 0.0;
        if(x <= 0.2) return -sgn * (f0 - f0 * f0) * smoothstep_slope((x - a) / (0.2 - a)) / (0.2 - a);
        return -sgn * f0 * f0 * smoothstep_slope((x - 0.2) / 0.3) / 0.3;
    }

    [[nodiscard]] double max_slope() const {
        if(zero) return 0.0;
        // smoothstep slope peaks at 15/8 in the middle of each segment
        return std::max((f0 - f0 * f0) / (0.2 - plateau()), f0 * f0 / 0.3) * 15.0 / 8.0;
    }
};

inline FSchedule f_schedule(double f0, double alpha) {
    if(!(f0 > 0 && f0 <= 0.1)) throw ParameterError("f_schedule: f0 must lie in (0, 1/10]");
    if(!(alpha > 0 && alpha <= 1.0 + 1e-12)) throw ParameterError("f_schedule: alpha must lie in (0, 1]");
    if(f0 * alpha >= 0.2) throw ParameterError("f_schedule: plateau f0*alpha must be below 1/5");
    return FSchedule{f0, std::min(alpha, 1.0), false};
}

inline FSchedule zero_schedule() { return FSchedule{0.0, 1.0, true}; }

// ---------------------------------------------------------------------------------
// Endpoint construction

inline LocalTerm pinning_term(const Vec &phi0, double delta, int site) {
    if(std::abs(phi0.norm() - 1.0) > 1e-10) throw ParameterError("pinning_term: phi0 must be a unit vector");
    if(!(delta > 0)) throw ParameterError("pinning_term: Delta must be positive");
    Mat m = delta * (Mat::Identity(phi0.size(), phi0.size()) - phi0 * phi0.adjoint());
    m     = 0.5 * (m + m.adjoint());
    return {{site}, m, "S_n"};
}

enum class Phi0Choice { Dominant, Custom };

struct EndpointOptions {
    int                   l0 = 2;
    Phi0Choice            phi0_choice = Phi0Choice::Dominant;
    Vec                   phi0_custom;
    std::optional<double> mu0_bound;    ///< refuse when the measured distance exceeds it
    std::optional<double> mu0_override; ///< use this mu0 for f0 and Delta-tilde (must be >= measured)
    std::optional<double> delta_override;
    SolverOptions         solver;
};

struct InterpolatorSpec {
    int              n          = 0; ///< system size after the step
    int              added_site = 0;
    int              l0         = 2;
    int              k0         = 2;
    Hamiltonian      system;       ///< n-site layout (terms = H^(n))
    std::vector<int> ball_l0;      ///< B_n^{l0} within the system, tensor order
    std::vector<int> ball_l0k0;    ///< B_n^{l0+k0} within the system
    std::vector<LocalTerm> H0;
    LocalTerm        h1, h2;       ///< shifted so that p0 = q0 = 0
    LocalTerm        S_n;
    Mat              V;            ///< Uhlmann unitary on ball_l0
    Vec              phi0;
    Vec              xi0, eta0;    ///< endpoint ground states on the system
    double           alpha        = 0;
    double           mu0_measured = 0;
    double           mu0          = 0; ///< value used for f0 and Delta-tilde
    double           delta        = 0;
    double           gap_prev     = 0;
    double           gap_n        = 0;
    double           p0_shift     = 0;
    double           q0_shift     = 0;
    FSchedule        f;
    std::vector<std::string> notes;

    // Assembled system operators (H0+h1, H0+h2), cached for repeated lambda evaluations.
    SpMat A1, A2;

    [[nodiscard]] double f0() const { return f.zero ? (1 - mu0) / 10.0 : f.f0; }
    [[nodiscard]] double delta_tilde() const { return (1 - mu0) / 10.0 * (1 - mu0) * delta; }
    [[nodiscard]] std::int64_t system_dim() const { return system.dim(); }
};

namespace detail {

inline std::vector<int> ball_in_system(const Lattice &lat, int center, int k, const Hamiltonian &h) {
    auto             b = ball(lat, center, k);
    std::vector<int> out;
    for(int s : h.sites)
        if(b.contains(s)) out.push_back(s);
    return out;
}

inline bool support_within(const LocalTerm &t, const std::vector<int> &region) {
    return std::all_of(t.support.begin(), t.support.end(), [&](int s) { return std::find(region.begin(), region.end(), s) != region.end(); });
}

inline LocalTerm shift_term(LocalTerm t, double e) {
    t.matrix -= e * Mat::Identity(t.matrix.rows(), t.matrix.cols());
    return t;
}

} // namespace detail

/// Dominant eigenvector of the single-site reduced state (phase canonicalized).
inline Vec dominant_site_state(const Vec &psi, const StateLayout &layout, int site) {
    auto                               rho = partial_trace(psi, layout, {site});
    Eigen::SelfAdjointEigenSolver<Mat> es(rho.matrix);
    Vec                                v = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    canonicalize_phase(v);
    return v;
}

/// Builds H1 = V (H^(n-1) + S_n) V^+, H2 = H^(n), the common part H0 and the remainders
/// h1, h2 supported on B_n^{l0+k0}. `h_n.sites` must equal `h_prev.sites` plus the new
/// site appended last.
inline InterpolatorSpec build_endpoints(const Hamiltonian &h_prev, const Hamiltonian &h_n, const Lattice &lat, const EndpointOptions &opt = {}) {
    require(opt.l0 >= 1, "build_endpoints: l0 must be >= 1");
    if(h_n.n() != h_prev.n() + 1 || !std::equal(h_prev.sites.begin(), h_prev.sites.end(), h_n.sites.begin()))
        throw ModelError("build_endpoints: h_n must extend h_prev by exactly one trailing site");
    require(h_prev.n() >= 1, "build_endpoints: previous system must contain at least one site");

    InterpolatorSpec spec;
    spec.n          = h_n.n();
    spec.added_site = h_n.sites.back();
    spec.l0         = opt.l0;
    spec.k0         = h_n.k0;
    spec.system     = h_n;
    const std::string step = "step n=" + std::to_string(spec.n) + " (site " + std::to_string(spec.added_site) + ")";

    SpectralResult gs_prev = h_prev.dim() >= 2 ? ground_state(assemble(h_prev), opt.solver) : SpectralResult{};
    SpectralResult gs_n    = ground_state(assemble(h_n), opt.solver);
    if(h_prev.dim() < 2) throw ModelError("build_endpoints: previous system is too small");
    if(gs_prev.degenerate) throw ConditionViolation("build_endpoints: degenerate ground state of H^(n-1) at " + step);
    if(gs_n.degenerate) throw ConditionViolation("build_endpoints: degenerate ground state of H^(n) at " + step);
    spec.gap_prev = gs_prev.gap;
    spec.gap_n    = gs_n.gap;
    spec.delta    = opt.delta_override.value_or(std::min(gs_prev.gap, gs_n.gap));
    require(spec.delta > 0, "build_endpoints: Delta must be positive");
    if(spec.delta > std::min(gs_prev.gap, gs_n.gap) * (1 + 1e-12)) spec.notes.push_back("Delta override exceeds a measured endpoint gap");

    const StateLayout layout = StateLayout::of(h_n);
    const int         dnew   = h_n.local_dims.back();
    if(opt.phi0_choice == Phi0Choice::Custom) {
        require(opt.phi0_custom.size() == dnew, "build_endpoints: custom phi0 has the wrong dimension");
        spec.phi0 = opt.phi0_custom.normalized();
    } else {
        spec.phi0 = dominant_site_state(gs_n.ground_vector, layout, spec.added_site);
    }
    const Vec phi_ext = kron_le(gs_prev.ground_vector, spec.phi0);
    spec.eta0         = gs_n.ground_vector;

    spec.ball_l0   = detail::ball_in_system(lat, spec.added_site, opt.l0, h_n);
    spec.ball_l0k0 = detail::ball_in_system(lat, spec.added_site, opt.l0 + spec.k0, h_n);

    spec.mu0_measured = reduced_trace_distance(spec.eta0, phi_ext, layout, spec.ball_l0);
    if(spec.mu0_measured >= 1.0 - 1e-12)
        throw ConditionViolation("overlap condition violated at " + step + ": trace distance " + std::to_string(spec.mu0_measured) + " is not below 1 for l0=" + std::to_string(opt.l0));
    if(opt.mu0_bound && spec.mu0_measured > *opt.mu0_bound)
        throw ConditionViolation("overlap condition violated at " + step + ": trace distance " + std::to_string(spec.mu0_measured) + " exceeds mu0=" + std::to_string(*opt.mu0_bound));
    spec.mu0 = spec.mu0_measured;
    if(opt.mu0_override) {
        require(*opt.mu0_override >= 0 && *opt.mu0_override < 1, "build_endpoints: mu0 override must lie in [0,1)");
        if(*opt.mu0_override < spec.mu0_measured - 1e-12)
            throw ConditionViolation("overlap condition violated at " + step + ": measured distance " + std::to_string(spec.mu0_measured) + " exceeds overridden mu0=" + std::to_string(*opt.mu0_override));
        spec.mu0 = *opt.mu0_override;
    }

    auto uh    = uhlmann_unitary(spec.eta0, phi_ext, layout, spec.ball_l0);
    spec.V     = uh.V;
    spec.xi0   = apply_on(spec.V, layout.positions(spec.ball_l0), layout.dims, phi_ext);
    spec.alpha = spec.xi0.dot(spec.eta0).real();
    if(!(spec.alpha > 0)) throw ConditionViolation("zero endpoint overlap at " + step);
    if(spec.alpha < 1 - spec.mu0 - 1e-9) throw ConditionViolation("endpoint overlap alpha below 1 - mu0 at " + step);

    // H1 as a term list: untouched terms of H^(n-1) + S_n plus one conjugated block on B.
    spec.S_n = pinning_term(spec.phi0, spec.delta, spec.added_site);
    std::vector<LocalTerm> h1_terms, touching;
    for(auto t : h_prev.terms) (std::any_of(t.support.begin(), t.support.end(), [&](int s) { return std::find(spec.ball_l0.begin(), spec.ball_l0.end(), s) != spec.ball_l0.end(); }) ? touching : h1_terms).push_back(t);
    touching.push_back(spec.S_n);
    {
        LocalTerm block = merge_terms(touching, h_n, "conj");
        std::vector<int> U = block.support;
        for(int s : spec.ball_l0)
            if(std::find(U.begin(), U.end(), s) == U.end()) U.push_back(s);
        std::sort(U.begin(), U.end(), [&](int a, int b) { return h_n.position_of(a) < h_n.position_of(b); });
        block          = extend_term(block, U, h_n);
        Mat  Vext      = extend_term({spec.ball_l0, spec.V, "V"}, U, h_n).matrix;
        block.matrix   = Vext * block.matrix * Vext.adjoint();
        block.matrix   = 0.5 * (block.matrix + block.matrix.adjoint());
        h1_terms.push_back(block);
    }

    // H0 = literal common terms; remainders merged.
    std::vector<char>      used(h_n.terms.size(), 0);
    std::vector<LocalTerm> rest1, rest2;
    for(const auto &t : h1_terms) {
        bool matched = false;
        for(std::size_t i = 0; i < h_n.terms.size() && !matched; ++i)
            if(!used[i] && identical(t, h_n.terms[i])) used[i] = matched = true;
        if(matched) spec.H0.push_back(t);
        else rest1.push_back(t);
    }
    for(std::size_t i = 0; i < h_n.terms.size(); ++i)
        if(!used[i]) rest2.push_back(h_n.terms[i]);
    auto zero_on = [&](int s) { return LocalTerm{{s}, Mat::Zero(h_n.local_dim(s), h_n.local_dim(s)), "zero"}; };
    if(rest1.empty()) rest1.push_back(zero_on(spec.added_site));
    if(rest2.empty()) rest2.push_back(zero_on(spec.added_site));
    LocalTerm h1 = merge_terms(rest1, h_n, "h1");
    LocalTerm h2 = merge_terms(rest2, h_n, "h2");
    if(!detail::support_within(h1, spec.ball_l0k0) || !detail::support_within(h2, spec.ball_l0k0))
        throw ModelError("build_endpoints: h1/h2 escape B_n^{l0+k0} at " + step);

    Hamiltonian tmp = h_n;
    tmp.terms       = spec.H0;
    tmp.terms.push_back(h1);
    SpMat A1      = assemble(tmp);
    spec.p0_shift = spec.xi0.dot(A1 * spec.xi0).real();
    tmp.terms.back() = h2;
    SpMat A2      = assemble(tmp);
    spec.q0_shift = spec.eta0.dot(A2 * spec.eta0).real();
    spec.h1       = detail::shift_term(h1, spec.p0_shift);
    spec.h2       = detail::shift_term(h2, spec.q0_shift);

    SpMat id(A1.rows(), A1.cols());
    id.setIdentity();
    spec.A1 = A1 - spec.p0_shift * id;
    spec.A2 = A2 - spec.q0_shift * id;
    spec.A1.prune(cplx(0.0));
    spec.A2.prune(cplx(0.0));

    const double f0 = (1 - spec.mu0) / 10.0;
    spec.f          = f_schedule(f0, std::min(1.0, spec.alpha));
    return spec;
}

/// Residual of xi0 / eta0 as ground states of H0+h1 / H0+h2 (after shifting).
inline std::pair<double, double> endpoint_residuals(const InterpolatorSpec &spec) { return {(spec.A1 * spec.xi0).norm(), (spec.A2 * spec.eta0).norm()}; }

// ---------------------------------------------------------------------------------
// Interpolated Hamiltonian on system x ancilla (ancilla = slowest index, a=0 is |1>_a)

inline SpMat build_interpolated(const InterpolatorSpec &spec, double lambda) {
    if(!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("build_interpolated: lambda must lie in [0,1]");
    const std::int64_t d     = spec.A1.rows();
    const double       delta = spec.delta;
    const double       fd    = spec.f(lambda - 0.5) * delta;
    SpMat              out(2 * d, 2 * d);
    std::vector<std::int64_t> nnz(2 * d);
    for(std::int64_t r = 0; r < d; ++r) {
        nnz[r]     = spec.A1.outerIndexPtr()[r + 1] - spec.A1.outerIndexPtr()[r] + 2;
        nnz[r + d] = spec.A2.outerIndexPtr()[r + 1] - spec.A2.outerIndexPtr()[r] + 2;
    }
    out.reserve(nnz);
    auto fill = [&](const SpMat &blk, std::int64_t off, double diag_shift, bool coupling_after) {
        for(std::int64_t r = 0; r < d; ++r) {
            bool diag_done = false;
            if(!coupling_after && fd != 0.0) out.insert(r + off, r + off - d) = fd;
            for(SpMat::InnerIterator it(blk, r); it; ++it) {
                cplx v = it.value();
                if(it.col() == r) {
                    v += diag_shift;
                    diag_done = true;
                }
                if(!diag_done && it.col() > r && diag_shift != 0.0) {
                    out.insert(r + off, r + off) = diag_shift;
                    diag_done = true;
                }
                out.insert(r + off, it.col() + off) = v;
            }
            if(!diag_done && diag_shift != 0.0) out.insert(r + off, r + off) = diag_shift;
            if(coupling_after && fd != 0.0) out.insert(r + off, r + off + d) = fd;
        }
    };
    fill(spec.A1, 0, lambda * delta, true);
    fill(spec.A2, d, (1 - lambda) * delta, false);
    out.makeCompressed();
    return out;
}

inline Mat build_interpolated_dense(const InterpolatorSpec &spec, double lambda, const AssemblyLimits &lim = {}) {
    if(2 * spec.A1.rows() > lim.dense_cap) throw ResourceError("interpolated operator exceeds the dense cap");
    return Mat(build_interpolated(spec, lambda));
}

/// dH/dlambda = Delta (|1><1| - |2><2|)_a + f'(lambda) Delta sigma^x_a, on system x ancilla.
inline SpMat interpolated_derivative(const InterpolatorSpec &spec, double lambda) {
    const std::int64_t d  = spec.A1.rows();
    const double       fp = spec.f.derivative(lambda - 0.5) * spec.delta;
    std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
    trip.reserve(4 * d);
    for(std::int64_t i = 0; i < d; ++i) {
        trip.emplace_back(i, i, spec.delta);
        trip.emplace_back(i + d, i + d, -spec.delta);
        if(fp != 0.0) {
            trip.emplace_back(i, i + d, fp);
            trip.emplace_back(i + d, i, fp);
        }
    }
    SpMat out(2 * d, 2 * d);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// Ancilla-extended state |v>|a> with a in {0 -> |1>_a, 1 -> |2>_a}.
inline Vec with_ancilla(const Vec &v, int a) {
    Vec out = Vec::Zero(2 * v.size());
    out.segment(a * v.size(), v.size()) = v;
    return out;
}

inline StateLayout interpolated_layout(const InterpolatorSpec &spec) {
    StateLayout l = StateLayout::of(spec.system);
    l.sites.push_back(kAncillaSite);
    l.dims.push_back(2);
    return l;
}

// ---------------------------------------------------------------------------------
// Gap certification

struct CertifyReport {
    int        n            = 0;
    double     mu0_measured = 0;
    double     mu0          = 0;
    double     alpha        = 0;
    double     f0           = 0;
    double     delta        = 0;
    double     delta_tilde  = 0;
    double     min_gap      = 0;
    double     argmin       = 0;
    double     two_level_gap_at_argmin = 0; ///< omega_+ - omega_- at argmin
    bool       pass         = false;
    GapProfile profile;
};

inline CertifyReport certify_gap(const InterpolatorSpec &spec, const std::vector<double> &grid, double tol = 1e-7, const SolverOptions &sopt = {}, const GapProfileOptions &gopt = {}) {
    const double endpoint = std::min(spec.gap_prev, spec.gap_n);
    if(spec.delta > endpoint * (1 + 1e-9)) throw ConditionViolation("certify_gap: endpoint gaps are below Delta");
    CertifyReport rep;
    rep.n            = spec.n;
    rep.mu0_measured = spec.mu0_measured;
    rep.mu0          = spec.mu0;
    rep.alpha        = spec.alpha;
    rep.f0           = (1 - spec.mu0) / 10.0;
    rep.delta        = spec.delta;
    rep.delta_tilde  = spec.delta_tilde();
    rep.profile      = gap_profile([&](double l) { return build_interpolated(spec, l); }, grid, sopt, gopt);
    rep.min_gap      = rep.profile.min_gap;
    rep.argmin       = rep.profile.argmin;
    const double lp  = rep.argmin - 0.5;
    const double fa  = spec.f(lp) * spec.alpha;
    rep.two_level_gap_at_argmin = 2 * spec.delta * std::sqrt(lp * lp + fa * fa);
    rep.pass         = rep.min_gap >= rep.delta_tilde - tol;
    return rep;
}

// ---------------------------------------------------------------------------------
// Appendix-style two-level analysis

struct TwoLevelReport {
    double lambda_prime = 0;
    double f            = 0;
    double omega_minus  = 0; ///< analytic
    double omega_plus   = 0;
    double block_minus  = 0; ///< eigenvalues of the projected 2x2 block
    double block_plus   = 0;
    double block_error  = 0; ///< max |analytic - block|
    double gap_floor    = 0; ///< Delta sqrt(lambda'^2 + f^2 alpha^2)
    double bound        = 0; ///< f0 alpha Delta
    // tail regime
    double E0 = 0, E1 = 0, E1_minus_E0 = 0;
    double c0 = 0, c0_sq_bound = 0, c1 = 0;
    double chain_bound = 0; ///< (w+ - w-)^3 / ((w+ - w-)^2 + 4 f^2 Delta^2) - f Delta
    bool   e0_below_omega = false, c0_ok = false, c1_ok = false, e1_chain_ok = false, chain_above_bound = false, gap_ok = false;
    [[nodiscard]] bool all_ok() const { return e0_below_omega && c0_ok && c1_ok && e1_chain_ok && chain_above_bound && gap_ok; }
};

namespace detail {
struct Block {
    Mat basis; ///< orthonormal columns spanning P0 (system x ancilla)
    Mat h;     ///< projected 2x2 block
};

inline Block projected_block(const InterpolatorSpec &spec, const SpMat &H) {
    Mat raw(2 * spec.xi0.size(), 2);
    raw.col(0) = with_ancilla(spec.xi0, 0);
    raw.col(1) = with_ancilla(spec.eta0, 1);
    // Gram orthogonalization (the two columns are orthogonal through the ancilla, so this
    // only removes roundoff).
    Mat                                gram = raw.adjoint() * raw;
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    Mat                                inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
    Block                              b;
    b.basis = raw * inv_sqrt;
    b.h     = b.basis.adjoint() * (H * b.basis);
    b.h     = 0.5 * (b.h + b.h.adjoint());
    return b;
}
} // namespace detail

inline TwoLevelReport two_level_block(const InterpolatorSpec &spec, double lambda_prime) {
    require(std::abs(lambda_prime) <= 0.5 + 1e-15, "two_level_block: |lambda'| must be <= 1/2");
    TwoLevelReport r;
    r.lambda_prime = lambda_prime;
    r.f            = spec.f(lambda_prime);
    const double root = std::sqrt(lambda_prime * lambda_prime + r.f * r.f * spec.alpha * spec.alpha);
    r.omega_minus  = spec.delta * (0.5 - root);
    r.omega_plus   = spec.delta * (0.5 + root);
    r.gap_floor    = spec.delta * root;
    r.bound        = spec.f.f0 * spec.alpha * spec.delta;

    auto                               blk = detail::projected_block(spec, build_interpolated(spec, std::clamp(lambda_prime + 0.5, 0.0, 1.0)));
    Eigen::SelfAdjointEigenSolver<Mat> es(blk.h);
    r.block_minus = es.eigenvalues()(0);
    r.block_plus  = es.eigenvalues()(1);
    r.block_error = std::max(std::abs(r.block_minus - r.omega_minus), std::abs(r.block_plus - r.omega_plus));
    return r;
}

/// Large-|lambda'| inequality chain, using the two lowest exact eigenpairs of H-tilde.
inline TwoLevelReport tail_bound_check(const InterpolatorSpec &spec, double lambda_prime, double tol = 1e-9, const SolverOptions &sopt = {}) {
    require(std::abs(lambda_prime) > 0.2 && std::abs(lambda_prime) <= 0.5, "tail_bound_check: requires 1/5 < |lambda'| <= 1/2");
    TwoLevelReport r = two_level_block(spec, lambda_prime);
    require(r.f <= spec.f.f0 * spec.f.f0 + 1e-15 || spec.f.zero, "tail_bound_check: f(lambda') exceeds f0^2");

    const SpMat H     = build_interpolated(spec, lambda_prime + 0.5);
    auto        pairs = lowest_k(H, 2, sopt);
    r.E0              = pairs[0].value;
    r.E1              = pairs[1].value;
    r.E1_minus_E0     = r.E1 - r.E0;

    auto                               blk = detail::projected_block(spec, H);
    Eigen::SelfAdjointEigenSolver<Mat> es(blk.h);
    Vec                                w_minus = blk.basis * es.eigenvectors().col(0);

    const double ov0 = std::abs(w_minus.dot(pairs[0].vector));
    r.c0             = std::sqrt(std::max(0.0, 1 - ov0 * ov0));
    r.c1             = std::abs(w_minus.dot(pairs[1].vector));

    const double dw  = r.omega_plus - r.omega_minus;
    const double fd2 = 4 * r.f * r.f * spec.delta * spec.delta;
    r.c0_sq_bound    = fd2 / (dw * dw + fd2);
    r.chain_bound    = dw * dw * dw / (dw * dw + fd2) - r.f * spec.delta;

    r.e0_below_omega    = r.E0 <= r.omega_minus + tol;
    r.c0_ok             = r.c0 * r.c0 <= r.c0_sq_bound + tol;
    r.c1_ok             = r.c1 <= r.c0 + tol;
    r.e1_chain_ok       = r.E1_minus_E0 >= r.chain_bound - tol;
    r.chain_above_bound = r.chain_bound >= r.bound - tol;
    r.gap_ok            = r.E1_minus_E0 >= r.bound - tol;
    return r;
}

} // namespace arealab
