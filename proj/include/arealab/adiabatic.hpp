#pragma once

#include "arealab/interpolation.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>

namespace arealab {

// ---------------------------------------------------------------------------------
// Generator along lambda.  Convention: i d|Psi>/dlambda = A |Psi>.

enum class GeneratorKind {
    Filtered,        ///< all-pairs gauge potential with a smooth low-frequency filter
    GroundProjected, ///< rank-2 ground-state-projected form
};

inline std::string to_string(GeneratorKind k) { return k == GeneratorKind::Filtered ? "filtered" : "ground_projected"; }

inline GeneratorKind generator_kind_from_string(const std::string &s) {
    if(s == "filtered") return GeneratorKind::Filtered;
    if(s == "ground_projected") return GeneratorKind::GroundProjected;
    throw ConfigError("unknown generator kind '" + s + "' (expected filtered or ground_projected)");
}

struct GeneratorOptions {
    GeneratorKind kind           = GeneratorKind::Filtered;
    double        degeneracy_rel = 1e-10;
    AssemblyLimits limits;
};

/// Eigen-decomposed H(lambda) together with the generator in the energy basis.
struct GeneratorFrame {
    double lambda = 0;
    RVec   energies;
    Mat    basis;      ///< columns are eigenvectors
    Mat    A_energy;   ///< generator in the eigenbasis
    double gap = 0;

    [[nodiscard]] Vec ground() const { return basis.col(0); }
    [[nodiscard]] Mat generator() const { return basis * A_energy * basis.adjoint(); }
};

namespace detail {

/// Odd filter with w(w) = 1/w for |w| >= gamma and a smooth odd polynomial inside.
inline double filtered_inverse(double w, double gamma) {
    const double x = w / gamma;
    if(std::abs(x) >= 1.0) return 1.0 / w;
    return (3 * x - 3 * x * x * x + x * x * x * x * x) / gamma;
}

} // namespace detail

/// Generator frame for an explicit dense pair (H, dH/dlambda).
inline GeneratorFrame generator_frame(const Mat &h, const Mat &dh, double lambda, const GeneratorOptions &opt = {}) {
    require(h.rows() == h.cols() && dh.rows() == h.rows() && dh.cols() == h.cols(), "generator: H and dH must be square of equal size");
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if(es.info() != Eigen::Success) throw SolverError("generator: dense diagonalization failed at lambda=" + std::to_string(lambda));
    GeneratorFrame fr;
    fr.lambda   = lambda;
    fr.energies = es.eigenvalues();
    fr.basis    = es.eigenvectors();
    const Eigen::Index m     = fr.energies.size();
    const double       width = std::max(1.0, fr.energies.cwiseAbs().maxCoeff());
    fr.gap                   = m > 1 ? fr.energies[1] - fr.energies[0] : std::numeric_limits<double>::infinity();
    if(fr.gap <= opt.degeneracy_rel * width)
        throw ConditionViolation("generator: degenerate ground state along the path at lambda=" + std::to_string(lambda));
    Vec g = fr.basis.col(0);
    canonicalize_phase(g);
    fr.basis.col(0) = g;

    Mat dhe = fr.basis.adjoint() * dh * fr.basis;
    fr.A_energy = Mat::Zero(m, m);
    const cplx I(0, 1);
    if(opt.kind == GeneratorKind::GroundProjected) {
        for(Eigen::Index j = 1; j < m; ++j) {
            cplx x            = I * dhe(j, 0) / (fr.energies[0] - fr.energies[j]);
            fr.A_energy(j, 0) = x;
            fr.A_energy(0, j) = std::conj(x);
        }
    } else {
        for(Eigen::Index a = 0; a < m; ++a)
            for(Eigen::Index b = 0; b < m; ++b) {
                if(a == b) continue;
                double w = fr.energies[b] - fr.energies[a];
                if(w == 0.0) continue;
                fr.A_energy(a, b) = I * dhe(a, b) * detail::filtered_inverse(w, fr.gap);
            }
    }
    return fr;
}

inline GeneratorFrame generator_frame(const InterpolatorSpec &spec, double lambda, const GeneratorOptions &opt = {}) {
    return generator_frame(build_interpolated_dense(spec, lambda, opt.limits), Mat(interpolated_derivative(spec, lambda)), lambda, opt);
}

inline Mat adiabatic_generator(const InterpolatorSpec &spec, double lambda, const GeneratorOptions &opt = {}) {
    return generator_frame(spec, lambda, opt).generator();
}

/// Ground state of H(lambda) with its phase aligned to `ref` (real positive overlap).
inline Vec aligned_ground(const InterpolatorSpec &spec, double lambda, const Vec &ref, const AssemblyLimits &lim = {}) {
    Eigen::SelfAdjointEigenSolver<Mat> es(build_interpolated_dense(spec, lambda, lim));
    Vec  g = es.eigenvectors().col(0);
    cplx o = ref.dot(g);
    if(std::abs(o) > 0) g *= std::conj(o) / std::abs(o);
    return g;
}

/// || A|Psi0> - i dPsi0/dlambda || with a phase-aligned difference: Richardson-extrapolated
/// centered inside, second-order one-sided at the endpoints.
inline double generator_defect(const InterpolatorSpec &spec, double lambda, double step = 1e-4, const GeneratorOptions &opt = {}) {
    auto fr = generator_frame(spec, lambda, opt);
    Vec  g  = fr.ground();
    Vec  fd;
    if(lambda - step >= 0.0 && lambda + step <= 1.0) {
        auto central = [&](double h) { return Vec((aligned_ground(spec, lambda + h, g, opt.limits) - aligned_ground(spec, lambda - h, g, opt.limits)) / (2 * h)); };
        fd = (4.0 * central(step / 2) - central(step)) / 3.0;
    } else {
        const double s = lambda - step < 0.0 ? step : -step;
        fd = (4.0 * aligned_ground(spec, lambda + s, g, opt.limits) - aligned_ground(spec, lambda + 2 * s, g, opt.limits) - 3.0 * g) / (2 * s);
    }
    Vec ag = fr.basis * (fr.A_energy.col(0));
    return (ag - cplx(0, 1) * fd).norm();
}

// ---------------------------------------------------------------------------------
// Locality via conditional expectations onto balls around the added site

/// Tr_rest(A)/d_rest (x) I_rest, returned on the full space.
inline Mat conditional_expectation(const Mat &A, const std::vector<int> &dims, const std::vector<int> &keep_positions) {
    auto split = split_indices(dims, keep_positions);
    require(A.rows() == split.keep_dim * split.rest_dim && A.cols() == A.rows(), "conditional_expectation: operator does not match the layout");
    const std::int64_t D = A.rows();
    std::vector<std::int64_t> full(D);
    for(std::int64_t i = 0; i < D; ++i) full[split.keep_index[i] + split.keep_dim * split.rest_index[i]] = i;
    Mat red = Mat::Zero(split.keep_dim, split.keep_dim);
    for(std::int64_t r = 0; r < split.rest_dim; ++r)
        for(std::int64_t b = 0; b < split.keep_dim; ++b) {
            const std::int64_t cb = full[b + split.keep_dim * r];
            for(std::int64_t a = 0; a < split.keep_dim; ++a) red(a, b) += A(full[a + split.keep_dim * r], cb);
        }
    red /= static_cast<double>(split.rest_dim);
    Mat out = Mat::Zero(D, D);
    for(std::int64_t r = 0; r < split.rest_dim; ++r)
        for(std::int64_t b = 0; b < split.keep_dim; ++b) {
            const std::int64_t cb = full[b + split.keep_dim * r];
            for(std::int64_t a = 0; a < split.keep_dim; ++a) out(full[a + split.keep_dim * r], cb) = red(a, b);
        }
    return out;
}

struct GTerm {
    int    j         = 0;
    double norm      = 0;
    int    ball_size = 0; ///< system sites in B_n^j
};

struct PowerLawFit {
    bool   valid    = false;
    double exponent = 0; ///< ||G_j|| ~ g0 (j - l0 - k0)^exponent
    double g0       = 0;
    int    points   = 0;
};

struct GeneratorDecomposition {
    int                l_tilde = 0;
    double             A_norm  = 0;
    double             F_norm  = 0;
    std::vector<GTerm> G_terms;     ///< j > l_tilde
    std::vector<GTerm> increments;  ///< Pi_j - Pi_{j-1} for every j >= 1
    std::vector<double> residuals;  ///< ||A - Pi_j A|| for j >= 1
    PowerLawFit        fit;
    double             telescoping_error = 0; ///< ||F + sum G - Pi_max A||
    double             ground_action_error = 0;
    int                l0 = 0, k0 = 0;
};

struct DecomposeOptions {
    std::optional<int> l_tilde;
    double             residual_fraction = 0.5;
};

namespace detail {

inline PowerLawFit fit_power_law(const std::vector<GTerm> &terms, int offset, double floor) {
    std::vector<double> xs, ys;
    for(const auto &t : terms)
        if(t.j > offset && t.norm > floor) {
            xs.push_back(std::log(static_cast<double>(t.j - offset)));
            ys.push_back(std::log(t.norm));
        }
    PowerLawFit fit;
    fit.points = static_cast<int>(xs.size());
    if(xs.size() < 2) return fit;
    const double n  = static_cast<double>(xs.size());
    double       sx = 0, sy = 0, sxx = 0, sxy = 0;
    for(std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    if(std::abs(den) < 1e-300) return fit;
    fit.exponent = (n * sxy - sx * sy) / den;
    fit.g0       = std::exp((sy - fit.exponent * sx) / n);
    fit.valid    = true;
    return fit;
}

} // namespace detail

/// Ball radii j = 1, 2, ... until B_n^j covers the system; the ancilla sits in every ball.
inline std::vector<std::vector<int>> generator_balls(const InterpolatorSpec &spec, const Lattice &lat) {
    std::vector<std::vector<int>> balls;
    for(int j = 1;; ++j) {
        auto b = detail::ball_in_system(lat, spec.added_site, j, spec.system);
        balls.push_back(b);
        if(static_cast<int>(b.size()) == spec.n) break;
        if(j > lat.size() + 1) throw ModelError("generator_balls: balls never cover the system");
    }
    return balls;
}

inline GeneratorDecomposition locality_decompose(const Mat &A, const InterpolatorSpec &spec, const Lattice &lat, const DecomposeOptions &opt = {},
                                                 const Vec *ground = nullptr) {
    if(hermiticity_defect(A) > 1e-9 * std::max(1.0, A.cwiseAbs().maxCoeff())) throw ParameterError("locality_decompose: operator is not Hermitian");
    auto layout = interpolated_layout(spec);
    require(A.rows() == layout.dim(), "locality_decompose: operator dimension does not match system x ancilla");
    auto balls = generator_balls(spec, lat);

    GeneratorDecomposition dec;
    dec.l0     = spec.l0;
    dec.k0     = spec.k0;
    dec.A_norm = hermitian_norm(A);

    const int        anc = static_cast<int>(layout.sites.size()) - 1;
    std::vector<Mat> pis;
    pis.push_back(conditional_expectation(A, layout.dims, {anc}));
    for(const auto &b : balls) {
        auto keep = layout.positions(b);
        keep.push_back(anc);
        pis.push_back(conditional_expectation(A, layout.dims, keep));
    }
    const int jmax = static_cast<int>(balls.size());
    for(int j = 1; j <= jmax; ++j) {
        dec.increments.push_back({j, hermitian_norm(pis[j] - pis[j - 1]), static_cast<int>(balls[j - 1].size())});
        dec.residuals.push_back(hermitian_norm(A - pis[j]));
    }

    if(opt.l_tilde) {
        if(*opt.l_tilde < 1 || *opt.l_tilde > jmax) throw ParameterError("locality_decompose: l_tilde override outside [1, " + std::to_string(jmax) + "]");
        dec.l_tilde = *opt.l_tilde;
    } else {
        dec.l_tilde = jmax;
        for(int j = 1; j <= jmax; ++j)
            if(dec.residuals[j - 1] <= opt.residual_fraction * dec.A_norm) {
                dec.l_tilde = j;
                break;
            }
    }
    const Mat &F = pis[dec.l_tilde];
    dec.F_norm   = hermitian_norm(F);
    Mat recon    = F;
    for(int j = dec.l_tilde + 1; j <= jmax; ++j) {
        dec.G_terms.push_back(dec.increments[j - 1]);
        recon += pis[j] - pis[j - 1];
    }
    dec.telescoping_error = (recon - pis[jmax]).cwiseAbs().maxCoeff();
    if(ground) dec.ground_action_error = (recon * *ground - A * *ground).norm();
    dec.fit = detail::fit_power_law(dec.increments, spec.l0 + spec.k0, 1e-14 * std::max(dec.A_norm, 1e-300));
    return dec;
}

/// True when ||G_j|| does not increase for j > l0 + k0 (relative slack `rel`).
inline bool increments_monotone(const GeneratorDecomposition &dec, double rel = 1e-9) {
    const int cut  = dec.l0 + dec.k0;
    double    prev = std::numeric_limits<double>::infinity();
    for(const auto &t : dec.increments) {
        if(t.j <= cut) continue;
        if(t.norm > prev + rel * std::max(1.0, dec.A_norm)) return false;
        prev = t.norm;
    }
    return true;
}

/// Decompositions on a lambda grid plus the per-j supremum of the increments.
struct LocalityProfile {
    std::vector<double>                 grid;
    std::vector<GeneratorDecomposition> per_lambda;
    std::vector<GTerm>                  envelope;
    double                              max_telescoping_error = 0;
};

inline LocalityProfile locality_profile(const InterpolatorSpec &spec, const Lattice &lat, const std::vector<double> &grid, const GeneratorOptions &gopt = {},
                                        const DecomposeOptions &dopt = {}) {
    require(!grid.empty(), "locality_profile: empty lambda grid");
    LocalityProfile prof;
    prof.grid       = grid;
    prof.per_lambda = parallel_map(grid.size(), [&](std::size_t i) {
        auto fr = generator_frame(spec, grid[i], gopt);
        Vec  g  = fr.ground();
        return locality_decompose(fr.generator(), spec, lat, dopt, &g);
    });
    prof.envelope = prof.per_lambda.front().increments;
    for(const auto &d : prof.per_lambda) {
        for(std::size_t k = 0; k < prof.envelope.size(); ++k) prof.envelope[k].norm = std::max(prof.envelope[k].norm, d.increments[k].norm);
        prof.max_telescoping_error = std::max(prof.max_telescoping_error, d.telescoping_error);
    }
    return prof;
}

// ---------------------------------------------------------------------------------
// Path integration

struct PathResult {
    int    steps          = 0;
    double final_fidelity = 0;
    double entropy_delta  = 0; ///< natural log
    double entropy_start  = 0;
    double entropy_end    = 0;
    Vec    final_state;
};

struct PathOptions {
    int              start_steps    = 250;
    int              max_steps      = 4000;
    double           fidelity_floor = 1 - 1e-6;
    GeneratorOptions generator;
};

namespace detail {

/// exp(-i h A) v by Taylor series, for ||hA|| of order one or less.
inline Vec exp_apply(const Mat &A, double h, const Vec &v) {
    Vec          out  = v;
    Vec          term = v;
    const double vn   = std::max(v.norm(), 1e-300);
    for(int k = 1; k < 60; ++k) {
        term = (A * term) * cplx(0, -h / k);
        out += term;
        if(term.norm() < 1e-17 * vn) break;
    }
    return out;
}

} // namespace detail

/// A smooth dense family on [0,1] with its analytic derivative.
struct DenseFamily {
    std::function<Mat(double)> H;
    std::function<Mat(double)> dH;
    StateLayout                layout;
};

inline DenseFamily dense_family(const InterpolatorSpec &spec, const AssemblyLimits &lim = {}) {
    const InterpolatorSpec *p = &spec;
    return {[p, lim](double l) { return build_interpolated_dense(*p, l, lim); }, [p](double l) { return Mat(interpolated_derivative(*p, l)); },
            interpolated_layout(spec)};
}

/// Exponential-midpoint integration of i dPsi/dlambda = A Psi from the ground state at 0.
inline PathResult integrate_path(const DenseFamily &fam, int steps, const std::vector<int> &region, const GeneratorOptions &opt = {}) {
    if(steps < 1) throw ParameterError("integrate_path: steps must be positive");
    (void)fam.layout.positions(region); // validates region
    Eigen::SelfAdjointEigenSolver<Mat> e0(fam.H(0.0));
    Vec psi = e0.eigenvectors().col(0);
    canonicalize_phase(psi);

    PathResult res;
    res.steps         = steps;
    res.entropy_start = entanglement_entropy(psi, fam.layout, region, std::exp(1.0));
    const double h    = 1.0 / steps;
    for(int k = 0; k < steps; ++k) {
        const double lm = (k + 0.5) * h;
        auto         fr = generator_frame(fam.H(lm), fam.dH(lm), lm, opt);
        Vec          c  = fr.basis.adjoint() * psi;
        c               = detail::exp_apply(fr.A_energy, h, c);
        psi             = fr.basis * c;
        psi.normalize();
    }
    Eigen::SelfAdjointEigenSolver<Mat> e1(fam.H(1.0));
    res.final_fidelity = std::min(1.0, std::abs(Vec(e1.eigenvectors().col(0)).dot(psi)));
    res.entropy_end    = entanglement_entropy(psi, fam.layout, region, std::exp(1.0));
    res.entropy_delta  = res.entropy_end - res.entropy_start;
    res.final_state    = psi;
    return res;
}

inline PathResult integrate_path(const InterpolatorSpec &spec, int steps, const std::vector<int> &region, const GeneratorOptions &opt = {}) {
    return integrate_path(dense_family(spec, opt.limits), steps, region, opt);
}

/// Doubles the step count from start_steps until the fidelity floor is met.
inline PathResult integrate_path_adaptive(const DenseFamily &fam, const std::vector<int> &region, const PathOptions &opt = {}) {
    require(opt.start_steps >= 1 && opt.max_steps >= opt.start_steps, "integrate_path: invalid step range");
    PathResult last;
    for(int steps = opt.start_steps; steps <= opt.max_steps; steps *= 2) {
        last = integrate_path(fam, steps, region, opt.generator);
        if(last.final_fidelity >= opt.fidelity_floor) return last;
    }
    throw SolverError("integrate_path: fidelity " + std::to_string(last.final_fidelity) + " below floor " + std::to_string(opt.fidelity_floor) + " after " +
                      std::to_string(last.steps) + " steps (step count insufficient)");
}

inline PathResult integrate_path_adaptive(const InterpolatorSpec &spec, const std::vector<int> &region, const PathOptions &opt = {}) {
    return integrate_path_adaptive(dense_family(spec, opt.generator.limits), region, opt);
}

// ---------------------------------------------------------------------------------
// Entangling rate across A1 A2 | A3 A4 under a Hamiltonian on A2 A3

struct RateResult {
    double rate     = 0; ///< dS(rho_12)/dt at t=0, natural log
    double ratio    = 0; ///< rate / (||H23|| log min(d2, d3))
    double h_norm   = 0;
    bool   vacuous  = false; ///< min(d2, d3) = 1
};

/// `dims` = {d1, d2, d3, d4}; psi is little-endian with A1 fastest; H23 acts on A2 x A3 (A2 fastest).
inline RateResult entangling_rate(const Vec &psi, const Mat &H23, const std::array<int, 4> &dims, double step = 1e-3) {
    for(int d : dims) require(d >= 1, "entangling_rate: partition dimensions must be positive");
    const std::int64_t total = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2] * dims[3];
    require(psi.size() == total, "entangling_rate: state dimension does not match the partition");
    require(std::abs(psi.norm() - 1.0) < 1e-9, "entangling_rate: state must be normalized");
    require(H23.rows() == dims[1] * dims[2] && H23.cols() == H23.rows(), "entangling_rate: H23 must act on A2 x A3");
    require(hermiticity_defect(H23) < 1e-10, "entangling_rate: H23 must be Hermitian");

    RateResult out;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H23 + H23.adjoint()));
    out.h_norm = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    out.vacuous = std::min(dims[1], dims[2]) == 1;

    const std::vector<int> ldims{dims[0], dims[1], dims[2], dims[3]};
    StateLayout            layout{{0, 1, 2, 3}, ldims};
    auto evolve = [&](double t) {
        Vec ev = (es.eigenvalues().cast<cplx>() * cplx(0, -t)).array().exp().matrix();
        Mat u  = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        return apply_on(u, {1, 2}, ldims, psi);
    };
    auto S = [&](double t) { return entanglement_entropy(evolve(t), layout, {0, 1}, std::exp(1.0)); };
    auto D = [&](double h) { return (S(h) - S(-h)) / (2 * h); };
    if(out.h_norm == 0.0) return out;
    out.rate = (4 * D(step / 2) - D(step)) / 3;
    if(!out.vacuous) out.ratio = out.rate / (out.h_norm * std::log(std::min(dims[1], dims[2])));
    return out;
}

struct SIEReport {
    int                 instances = 0;
    double              max_ratio = 0;
    int                 d2 = 2, d3 = 2;
    std::vector<double> ratios;
};

/// Haar-random pure states on A1..A4 with GUE couplings on A2 A3; one RNG stream per instance.
inline SIEReport sie_batch(int instances, std::uint64_t seed, const std::array<int, 4> &dims = {2, 2, 2, 2}) {
    require(instances >= 1, "sie_batch: need at least one instance");
    const std::int64_t total = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2] * dims[3];
    SIEReport          rep;
    rep.instances = instances;
    rep.d2        = dims[1];
    rep.d3        = dims[2];
    rep.ratios    = parallel_map(static_cast<std::size_t>(instances), [&](std::size_t i) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        Vec             psi = random_state(total, rng);
        Mat             h   = random_hermitian(dims[1] * dims[2], rng);
        return std::abs(entangling_rate(psi, h, dims).ratio);
    });
    for(double r : rep.ratios) {
        if(!std::isfinite(r)) throw SolverError("sie_batch: non-finite entangling ratio");
        rep.max_ratio = std::max(rep.max_ratio, r);
    }
    return rep;
}

/// Sum over j >= r/a0 of ratio * ||G_j|| * |B_n^j| * log(d): bound on one step's entropy change.
inline double entropy_step_bound(const std::vector<GTerm> &increments, double r, double a0, double ratio, int local_dim) {
    double s = 0;
    for(const auto &t : increments)
        if(t.j >= r / a0) s += ratio * t.norm * t.ball_size * std::log(static_cast<double>(local_dim));
    return s;
}

} // namespace arealab
