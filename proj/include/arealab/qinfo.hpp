#pragma once

#include "arealab/lattice.hpp"
#include "arealab/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace arealab {

/// Reduced density operator. `sites` lists the kept lattice sites in tensor order.
struct DensityOp {
    Mat              matrix;
    std::vector<int> sites;
    std::vector<int> dims;
    bool             scalar = false; ///< empty keep set: matrix is the 1x1 trace
};

/// Tensor-ordered description of a pure state: sites[p] carries local dimension dims[p].
struct StateLayout {
    std::vector<int> sites;
    std::vector<int> dims;

    [[nodiscard]] std::int64_t dim() const {
        std::int64_t d = 1;
        for(int x : dims) d *= x;
        return d;
    }

    [[nodiscard]] std::vector<int> positions(const std::vector<int> &subset) const {
        std::vector<int> p;
        for(int s : subset) {
            auto it = std::find(sites.begin(), sites.end(), s);
            if(it == sites.end()) throw ParameterError("site " + std::to_string(s) + " is not part of the state");
            p.push_back(static_cast<int>(it - sites.begin()));
        }
        return p;
    }

    [[nodiscard]] std::vector<int> complement_positions(const std::vector<int> &subset) const {
        auto             inside = positions(subset);
        std::vector<int> out;
        for(int p = 0; p < static_cast<int>(sites.size()); ++p)
            if(std::find(inside.begin(), inside.end(), p) == inside.end()) out.push_back(p);
        return out;
    }

    static StateLayout of(const Hamiltonian &h) { return {h.sites, h.local_dims}; }
};

/// Reshape psi into a (keep x rest) matrix; keep_positions order sets the row index order.
inline Mat reshape_split(const Vec &psi, const std::vector<int> &dims, const std::vector<int> &keep_positions) {
    auto split = split_indices(dims, keep_positions);
    require(psi.size() == split.keep_dim * split.rest_dim, "reshape_split: state dimension does not match the layout");
    Mat x(split.keep_dim, split.rest_dim);
    for(std::int64_t i = 0; i < psi.size(); ++i) x(split.keep_index[i], split.rest_index[i]) = psi[i];
    return x;
}

inline DensityOp partial_trace(const Vec &psi, const StateLayout &layout, const std::vector<int> &keep) {
    DensityOp out;
    out.sites = keep;
    for(int p : layout.positions(keep)) out.dims.push_back(layout.dims[p]);
    if(keep.empty()) {
        out.scalar = true;
        out.matrix = Mat::Constant(1, 1, psi.squaredNorm());
        return out;
    }
    Mat x      = reshape_split(psi, layout.dims, layout.positions(keep));
    out.matrix = x * x.adjoint();
    return out;
}

/// Partial trace of a mixed state; keep sites are looked up in rho.sites.
inline DensityOp partial_trace(const DensityOp &rho, const std::vector<int> &keep) {
    StateLayout layout{rho.sites, rho.dims};
    DensityOp   out;
    out.sites = keep;
    for(int p : layout.positions(keep)) out.dims.push_back(layout.dims[p]);
    auto split = split_indices(rho.dims, layout.positions(keep));
    require(rho.matrix.rows() == split.keep_dim * split.rest_dim, "partial_trace: density matrix does not match its layout");
    std::vector<std::int64_t> full(rho.matrix.rows());
    for(std::int64_t i = 0; i < rho.matrix.rows(); ++i) full[split.keep_index[i] + split.keep_dim * split.rest_index[i]] = i;
    out.scalar = keep.empty();
    out.matrix = Mat::Zero(split.keep_dim, split.keep_dim);
    for(std::int64_t r = 0; r < split.rest_dim; ++r)
        for(std::int64_t a = 0; a < split.keep_dim; ++a)
            for(std::int64_t b = 0; b < split.keep_dim; ++b) out.matrix(a, b) += rho.matrix(full[a + split.keep_dim * r], full[b + split.keep_dim * r]);
    return out;
}

inline RVec density_spectrum(const Mat &rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// -sum p log_base p over eigenvalues above 1e-14.
inline double entropy_of_spectrum(const RVec &p, double base) {
    require(base > 1.0, "entropy: base must exceed 1");
    double s = 0;
    for(double x : p)
        if(x > 1e-14) s -= x * std::log(x);
    return s / std::log(base);
}

inline double entropy(const Mat &rho, double base) { return entropy_of_spectrum(density_spectrum(rho), base); }
inline double entropy(const DensityOp &rho, double base) { return entropy(rho.matrix, base); }

/// Entropy in units of log(local dimension) when all kept sites share one dimension.
inline double entropy_site_units(const DensityOp &rho) {
    if(rho.dims.empty()) return 0.0;
    for(int d : rho.dims)
        if(d != rho.dims.front()) throw ParameterError("entropy_site_units: mixed local dimensions");
    return entropy(rho, rho.dims.front());
}

/// Entropy of the reduction of a pure state onto `keep`, via Schmidt values of the
/// smaller side.
inline double entanglement_entropy(const Vec &psi, const StateLayout &layout, const std::vector<int> &keep, double base) {
    if(keep.empty()) return 0.0;
    Mat x = reshape_split(psi, layout.dims, layout.positions(keep));
    Mat g = x.rows() <= x.cols() ? Mat(x * x.adjoint()) : Mat(x.adjoint() * x);
    return entropy(g, base);
}

inline void check_same_shape(const Mat &a, const Mat &b, const char *what) {
    if(a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) throw ParameterError(std::string(what) + ": shape mismatch");
}

inline double trace_distance(const Mat &rho, const Mat &sigma) {
    check_same_shape(rho, sigma, "trace_distance");
    return 0.5 * density_spectrum(rho - sigma).cwiseAbs().sum();
}

inline double trace_distance(const DensityOp &rho, const DensityOp &sigma) {
    if(rho.sites != sigma.sites || rho.dims != sigma.dims) throw ParameterError("trace_distance: site labels differ");
    return trace_distance(rho.matrix, sigma.matrix);
}

/// Square root of a PSD matrix with negative roundoff eigenvalues clipped.
inline Mat sqrt_psd(const Mat &m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()));
    RVec                               ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline double trace_norm(const Mat &m) {
    if(m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

/// F = Tr|sqrt(rho) sqrt(sigma)|.
inline double fidelity(const Mat &rho, const Mat &sigma) {
    check_same_shape(rho, sigma, "fidelity");
    return std::min(1.0, trace_norm(sqrt_psd(rho) * sqrt_psd(sigma)));
}

inline double fidelity(const DensityOp &rho, const DensityOp &sigma) {
    if(rho.sites != sigma.sites || rho.dims != sigma.dims) throw ParameterError("fidelity: site labels differ");
    return fidelity(rho.matrix, sigma.matrix);
}

// ---------------------------------------------------------------------------------
// Pure-state reductions onto the complement of a region B, without forming the
// complement density matrices.

/// Fidelity of the reductions of psi and phi onto the complement of `region`.
inline double reduced_fidelity(const Vec &psi, const Vec &phi, const StateLayout &layout, const std::vector<int> &region) {
    require(psi.size() == phi.size(), "reduced_fidelity: state dimensions differ");
    if(region.empty()) return std::abs(psi.dot(phi));
    auto pos = layout.positions(region);
    Mat  xp  = reshape_split(psi, layout.dims, pos);
    Mat  xf  = reshape_split(phi, layout.dims, pos);
    return std::min(1.0, trace_norm(xf * xp.adjoint()));
}

/// Trace distance of the reductions of psi and phi onto the complement of `region`.
/// With X, Y the (complement x region) reshapes and W = [X Y], the nonzero spectrum of
/// XX^+ - YY^+ equals that of G^{1/2} J G^{1/2} with G = W^+W and J = diag(I, -I).
inline double reduced_trace_distance(const Vec &psi, const Vec &phi, const StateLayout &layout, const std::vector<int> &region) {
    require(psi.size() == phi.size(), "reduced_trace_distance: state dimensions differ");
    auto comp = layout.complement_positions(region);
    if(comp.empty()) return 0.0;
    Mat                x = reshape_split(psi, layout.dims, comp);
    Mat                y = reshape_split(phi, layout.dims, comp);
    const Eigen::Index b = x.cols();
    if(x.rows() <= 2 * b) return trace_distance(Mat(x * x.adjoint()), Mat(y * y.adjoint()));
    Mat w(x.rows(), 2 * b);
    w << x, y;
    Mat  g  = w.adjoint() * w;
    Mat  gs = sqrt_psd(g);
    RVec j  = RVec::Ones(2 * b);
    j.tail(b).setConstant(-1.0);
    Mat k = gs * j.asDiagonal() * gs;
    return 0.5 * density_spectrum(k).cwiseAbs().sum();
}

struct UhlmannResult {
    Mat              V;       ///< unitary on `support`, tensor-ordered as listed
    std::vector<int> support;
    double           overlap = 0; ///< <psi|(V x I)|phi>, real and non-negative
    int              null_rank = 0; ///< dimension completed arbitrarily (rank deficiency of M)
};

/// Unitary on region B maximizing |<psi|(V x I)|phi>|. With M = Tr_{comp}(|phi><psi|)
/// = U S W^+, the optimum is V = W U^+ and the overlap equals the trace norm of M.
/// Null directions of M are completed by the full SVD bases, which is deterministic.
inline UhlmannResult uhlmann_unitary(const Vec &psi, const Vec &phi, const StateLayout &layout, const std::vector<int> &region) {
    require(!region.empty(), "uhlmann_unitary: region must be nonempty");
    require(psi.size() == phi.size() && psi.size() == layout.dim(), "uhlmann_unitary: state dimension does not match the layout");
    auto pos = layout.positions(region);
    Mat  xp  = reshape_split(psi, layout.dims, pos);
    Mat  xf  = reshape_split(phi, layout.dims, pos);
    Mat  m   = xf * xp.adjoint();

    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    UhlmannResult         r;
    r.support = region;
    r.V       = svd.matrixV() * svd.matrixU().adjoint();
    RVec s    = svd.singularValues();
    for(Eigen::Index i = 0; i < s.size(); ++i) r.null_rank += s(i) <= 1e-12 * std::max(1.0, s(0));
    cplx achieved = (r.V * m).trace();
    r.overlap     = std::abs(achieved);
    if(std::abs(achieved) > 0) r.V *= std::conj(achieved) / std::abs(achieved);
    return r;
}

/// mu = sqrt(1 - F) with F the best overlap achievable by a unitary on `region`.
struct MuValue {
    double mu      = 0;
    double F       = 1;
    bool   trivial = false; ///< region covers the full system
};

inline MuValue mu_value(const Vec &psi, const Vec &phi, const StateLayout &layout, const std::vector<int> &region) {
    MuValue v;
    if(layout.complement_positions(region).empty()) {
        v.trivial = true;
        v.mu      = 0.0;
        v.F       = 1.0;
        return v;
    }
    v.F  = std::min(1.0, uhlmann_unitary(psi, phi, layout, region).overlap);
    v.mu = std::sqrt(std::max(0.0, 1.0 - v.F));
    return v;
}

/// Pair of consecutive ground states expressed on the n-site layout:
/// psi_n = Psi_0^(n), phi_ext = Psi_0^(n-1) x phi0 with phi0 on the added site.
struct ConsecutivePair {
    int         n          = 0;
    int         added_site = 0;
    StateLayout layout;
    Vec         psi_n;
    Vec         phi_ext;
};

struct OverlapProfile {
    std::vector<int>                 n_range;
    std::vector<int>                 k_range;
    std::vector<std::vector<double>> mu_nk;   ///< [n index][k index]
    std::vector<std::vector<char>>   trivial; ///< ball covers the system
    std::vector<double>              mu_k;
};

/// mu_n(k) with support B_n^k intersected with the current system; mu(k) = max over n.
inline OverlapProfile mu_profile(const std::vector<ConsecutivePair> &pairs, const std::vector<int> &k_range, const Lattice &lat) {
    require(!pairs.empty(), "mu_profile: need at least one consecutive pair");
    for(int k : k_range) require(k >= 1, "mu_profile: k must be >= 1");
    OverlapProfile prof;
    prof.k_range = k_range;
    prof.mu_k.assign(k_range.size(), 0.0);
    for(const auto &p : pairs) prof.n_range.push_back(p.n);

    struct Cell {
        double mu;
        bool   trivial;
    };
    const std::size_t K     = k_range.size();
    auto              cells = parallel_map(pairs.size() * K, [&](std::size_t idx) {
        const auto      &p = pairs[idx / K];
        const int        k = k_range[idx % K];
        auto             b = ball(lat, p.added_site, k);
        std::vector<int> region;
        for(int s : p.layout.sites)
            if(b.contains(s)) region.push_back(s);
        auto v = mu_value(p.psi_n, p.phi_ext, p.layout, region);
        return Cell{v.mu, v.trivial};
    });
    for(std::size_t i = 0; i < pairs.size(); ++i) {
        prof.mu_nk.emplace_back();
        prof.trivial.emplace_back();
        for(std::size_t j = 0; j < K; ++j) {
            prof.mu_nk.back().push_back(cells[i * K + j].mu);
            prof.trivial.back().push_back(cells[i * K + j].trivial);
            prof.mu_k[j] = std::max(prof.mu_k[j], cells[i * K + j].mu);
        }
    }
    return prof;
}

} // namespace arealab
