#pragma once

#include "arealab/core.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace arealab {

struct SolverOptions {
    double       tol             = 1e-10; ///< residual norm ||Hv - Ev|| required per eigenpair
    int          max_restarts    = 400;
    int          krylov_max      = 40;    ///< upper bound on stored Lanczos vectors
    std::int64_t memory_budget   = std::int64_t{640} << 20; ///< bytes available for the Krylov basis
    std::int64_t dense_threshold = 256;   ///< below or at this dimension use dense diagonalization
    double       degeneracy_rel  = 1e-10; ///< degenerate iff E1 - E0 < degeneracy_rel * spectral width
    std::uint64_t seed           = 0x5eed;
};

struct Eigenpair {
    double value    = 0;
    Vec    vector;
    double residual = 0;
};

struct SpectralResult {
    double E0         = 0;
    double E1         = 0;
    double gap        = 0;
    Vec    ground_vector;
    bool   degenerate = false;
    double residual   = 0;
    double width      = 0; ///< spectral width estimate used for the degeneracy test
};

using ApplyFn = std::function<void(const Vec &, Vec &)>;

namespace detail {

inline std::vector<Eigenpair> dense_lowest(const Mat &h, int k) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if(es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    std::vector<Eigenpair> out;
    for(int i = 0; i < k; ++i) {
        Eigenpair p{es.eigenvalues()(i), es.eigenvectors().col(i), 0.0};
        p.residual = (h * p.vector - p.value * p.vector).norm();
        out.push_back(std::move(p));
    }
    return out;
}

/// Thick-restart Lanczos for the `nev` lowest eigenpairs of a Hermitian operator.
/// Each new Krylov vector is fully reorthogonalized (a second pass when the first
/// cancels heavily), so the projected
/// matrix is Hermitian to machine precision; after each cycle the lowest Ritz vectors
/// are kept together with the residual direction.
inline std::vector<Eigenpair> thick_restart_lanczos(const ApplyFn &apply, Eigen::Index dim, int nev, const SolverOptions &opt) {
    const Eigen::Index by_memory = std::max<Eigen::Index>(8, opt.memory_budget / (16 * std::max<Eigen::Index>(dim, 1)));
    const Eigen::Index m         = std::min<Eigen::Index>({dim - 1, static_cast<Eigen::Index>(opt.krylov_max), by_memory});
    if(m < nev + 2) throw ResourceError("lanczos: Krylov space too small for " + std::to_string(nev) + " eigenpairs");

    std::mt19937_64 rng(opt.seed);
    Mat             Q = Mat::Zero(dim, m + 1);
    Mat             T = Mat::Zero(m + 1, m + 1);
    Q.col(0)          = random_state(dim, rng);
    Eigen::Index kept = 0;
    Vec          w(dim);

    for(int cycle = 0; cycle <= opt.max_restarts; ++cycle) {
        Eigen::Index filled = m;
        double       beta   = 0;
        for(Eigen::Index j = kept; j < m; ++j) {
            apply(Q.col(j), w);
            // Local recurrence first, then a full pass; a second full pass only after
            // heavy cancellation (DGKS).
            Vec h = Vec::Zero(j + 1);
            for(Eigen::Index i = std::max<Eigen::Index>(0, j - 1); i <= j; ++i) {
                const cplx c = Q.col(i).dot(w);
                w -= c * Q.col(i);
                h(i) += c;
            }
            const double norm_in = w.norm();
            Vec          h1      = Q.leftCols(j + 1).adjoint() * w;
            w.noalias() -= Q.leftCols(j + 1) * h1;
            h += h1;
            if(w.norm() < 0.7071 * norm_in) {
                Vec h2 = Q.leftCols(j + 1).adjoint() * w;
                w.noalias() -= Q.leftCols(j + 1) * h2;
                h += h2;
            }
            for(Eigen::Index i = 0; i < j; ++i) {
                T(i, j) = h(i);
                T(j, i) = std::conj(h(i));
            }
            T(j, j) = h(j).real();
            beta    = w.norm();
            if(beta < 1e-13 * std::max(1.0, T.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff())) {
                // Invariant subspace: continue with a fresh direction orthogonal to the basis.
                Vec r = random_state(dim, rng);
                for(int pass = 0; pass < 2; ++pass) r -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).adjoint() * r);
                Q.col(j + 1) = r.normalized();
                T(j + 1, j) = T(j, j + 1) = 0.0;
                beta                      = 0.0;
                if(j + 1 == m) filled = m;
                continue;
            }
            Q.col(j + 1) = w / beta;
            T(j + 1, j) = T(j, j + 1) = beta;
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(T.topLeftCorner(filled, filled));
        const RVec &theta = es.eigenvalues();
        const Mat  &Y     = es.eigenvectors();
        const cplx  tail  = T(filled, filled - 1);

        bool converged = true;
        for(int i = 0; i < nev; ++i) converged = converged && std::abs(tail * Y(filled - 1, i)) <= 0.5 * opt.tol;

        if(converged || cycle == opt.max_restarts) {
            std::vector<Eigenpair> out;
            Vec                    hx(dim);
            for(int i = 0; i < nev; ++i) {
                Eigenpair p;
                p.vector = Q.leftCols(filled) * Y.col(i);
                p.vector.normalize();
                apply(p.vector, hx);
                p.value    = p.vector.dot(hx).real();
                p.residual = (hx - p.value * p.vector).norm();
                out.push_back(std::move(p));
            }
            bool ok = true;
            for(const auto &p : out) ok = ok && p.residual <= opt.tol;
            if(ok) return out;
            if(cycle == opt.max_restarts) {
                double worst = 0;
                for(const auto &p : out) worst = std::max(worst, p.residual);
                throw SolverError("lanczos: no convergence after " + std::to_string(opt.max_restarts) + " restarts (residual " + std::to_string(worst) + ")");
            }
        }

        // Thick restart: keep the lowest Ritz vectors plus the residual direction.
        const Eigen::Index keep = std::min<Eigen::Index>(filled - 1, std::max<Eigen::Index>(nev + 1, (filled + 2 * nev) / 3));
        const Eigen::Index rows = 4096;
        for(Eigen::Index r0 = 0; r0 < dim; r0 += rows) {
            const Eigen::Index nr    = std::min(rows, dim - r0);
            Mat                block = Q.block(r0, 0, nr, filled) * Y.leftCols(keep);
            Q.block(r0, 0, nr, keep) = block;
        }
        Q.col(keep) = Q.col(filled);
        T.setZero();
        for(Eigen::Index i = 0; i < keep; ++i) {
            T(i, i)    = theta(i);
            T(keep, i) = tail * Y(filled - 1, i);
            T(i, keep) = std::conj(T(keep, i));
        }
        kept = keep;
    }
    throw SolverError("lanczos: unreachable");
}

} // namespace detail

/// Lowest k eigenpairs, ascending. Dense diagonalization at or below the dense
/// threshold, thick-restart Lanczos above it.
inline std::vector<Eigenpair> lowest_k(const SpMat &h, int k, const SolverOptions &opt = {}) {
    require(h.rows() == h.cols(), "lowest_k: operator must be square");
    require(k >= 1 && k <= h.rows(), "lowest_k: k must satisfy 1 <= k <= dimension");
    if(h.rows() <= opt.dense_threshold || k + 2 >= h.rows()) return detail::dense_lowest(Mat(h), k);
    ApplyFn apply = [&h](const Vec &x, Vec &y) { y.noalias() = h * x; };
    return detail::thick_restart_lanczos(apply, h.rows(), k, opt);
}

inline std::vector<Eigenpair> lowest_k(const Mat &h, int k, const SolverOptions &opt = {}) {
    require(h.rows() == h.cols(), "lowest_k: operator must be square");
    require(k >= 1 && k <= h.rows(), "lowest_k: k must satisfy 1 <= k <= dimension");
    if(h.rows() <= opt.dense_threshold || k + 2 >= h.rows()) return detail::dense_lowest(h, k);
    ApplyFn apply = [&h](const Vec &x, Vec &y) { y.noalias() = h * x; };
    return detail::thick_restart_lanczos(apply, h.rows(), k, opt);
}

/// Upper bound on the spectral width from the max absolute row sum.
inline double spectral_width_bound(const SpMat &h) {
    double best = 0;
    for(Eigen::Index r = 0; r < h.outerSize(); ++r) {
        double s = 0;
        for(SpMat::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return 2 * best;
}

namespace detail {
inline SpectralResult finish_ground(std::vector<Eigenpair> pairs, double width, const SolverOptions &opt) {
    SpectralResult r;
    r.E0            = pairs[0].value;
    r.E1            = pairs[1].value;
    r.gap           = r.E1 - r.E0;
    r.ground_vector = std::move(pairs[0].vector);
    r.ground_vector.normalize();
    canonicalize_phase(r.ground_vector);
    r.residual   = pairs[0].residual;
    r.width      = width;
    r.degenerate = r.gap < opt.degeneracy_rel * std::max(width, 1e-300);
    return r;
}
} // namespace detail

/// Ground state and gap from the two lowest eigenpairs.
inline SpectralResult ground_state(const SpMat &h, const SolverOptions &opt = {}) {
    require(h.rows() >= 2, "ground_state: dimension must be >= 2");
    if(h.rows() <= opt.dense_threshold) {
        Mat                                dense(h);
        Eigen::SelfAdjointEigenSolver<Mat> es(dense);
        if(es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
        const RVec &ev = es.eigenvalues();
        std::vector<Eigenpair> pairs{{ev(0), es.eigenvectors().col(0), 0.0}, {ev(1), es.eigenvectors().col(1), 0.0}};
        pairs[0].residual = (dense * pairs[0].vector - ev(0) * pairs[0].vector).norm();
        return detail::finish_ground(std::move(pairs), ev(ev.size() - 1) - ev(0), opt);
    }
    return detail::finish_ground(lowest_k(h, 2, opt), spectral_width_bound(h), opt);
}

inline SpectralResult ground_state(const Mat &h, const SolverOptions &opt = {}) {
    require(h.rows() >= 2, "ground_state: dimension must be >= 2");
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if(es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    const RVec &ev = es.eigenvalues();
    std::vector<Eigenpair> pairs{{ev(0), es.eigenvectors().col(0), 0.0}, {ev(1), es.eigenvectors().col(1), 0.0}};
    pairs[0].residual = (h * pairs[0].vector - ev(0) * pairs[0].vector).norm();
    return detail::finish_ground(std::move(pairs), ev(ev.size() - 1) - ev(0), opt);
}

struct GapProfile {
    std::vector<double> grid;
    std::vector<double> E0;
    std::vector<double> E1;
    std::vector<double> gaps;
    double              min_gap = 0;
    double              argmin  = 0;
};

struct GapProfileOptions {
    double resolution = 1e-4; ///< stop refining once both neighbours of argmin are this close
    int    max_rounds = 60;
    int    seeds      = 3;    ///< number of lowest coarse points refined in the first round
};

/// Gap along a parameter path with bisection refinement around the lowest coarse gaps.
/// `family(lambda)` returns the operator at lambda. Evaluations within a round run in
/// parallel; results are merged in grid order.
template<typename Family>
GapProfile gap_profile(Family &&family, std::vector<double> grid, const SolverOptions &opt = {}, const GapProfileOptions &gopt = {}) {
    require(!grid.empty(), "gap_profile: empty grid");
    require(std::is_sorted(grid.begin(), grid.end()), "gap_profile: grid must be sorted");
    require(grid.front() >= 0.0 && grid.back() <= 1.0, "gap_profile: grid must lie in [0,1]");

    struct Point {
        double lambda, e0, e1;
    };
    auto evaluate = [&](const std::vector<double> &lams) {
        return parallel_map(lams.size(), [&](std::size_t i) {
            try {
                auto r = ground_state(family(lams[i]), opt);
                return Point{lams[i], r.E0, r.E1};
            } catch(const SolverError &e) { throw SolverError(std::string(e.what()) + " at lambda=" + std::to_string(lams[i])); }
        });
    };
    std::vector<Point> pts = evaluate(grid);
    auto               by_lambda = [](const Point &a, const Point &b) { return a.lambda < b.lambda; };

    auto lowest = [&](int count) {
        std::vector<std::size_t> idx(pts.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return pts[a].e1 - pts[a].e0 < pts[b].e1 - pts[b].e0; });
        idx.resize(std::min<std::size_t>(idx.size(), count));
        return idx;
    };

    for(int round = 0; round < gopt.max_rounds && pts.size() > 1; ++round) {
        std::vector<double> fresh;
        for(auto i : lowest(round == 0 ? gopt.seeds : 1)) {
            if(i > 0 && pts[i].lambda - pts[i - 1].lambda > gopt.resolution) fresh.push_back(0.5 * (pts[i].lambda + pts[i - 1].lambda));
            if(i + 1 < pts.size() && pts[i + 1].lambda - pts[i].lambda > gopt.resolution) fresh.push_back(0.5 * (pts[i].lambda + pts[i + 1].lambda));
        }
        std::sort(fresh.begin(), fresh.end());
        fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
        if(fresh.empty()) break;
        for(auto &p : evaluate(fresh)) pts.push_back(p);
        std::sort(pts.begin(), pts.end(), by_lambda);
    }

    GapProfile prof;
    for(const auto &p : pts) {
        prof.grid.push_back(p.lambda);
        prof.E0.push_back(p.e0);
        prof.E1.push_back(p.e1);
        prof.gaps.push_back(p.e1 - p.e0);
    }
    auto it      = std::min_element(prof.gaps.begin(), prof.gaps.end());
    prof.min_gap = *it;
    prof.argmin  = prof.grid[it - prof.gaps.begin()];
    return prof;
}

inline std::vector<double> uniform_grid(int points, double lo = 0.0, double hi = 1.0) {
    require(points >= 2, "uniform_grid: need at least two points");
    std::vector<double> g(points);
    for(int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

} // namespace arealab
