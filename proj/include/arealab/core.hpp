#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace arealab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor, std::int64_t>;

inline constexpr cplx I_unit{0.0, 1.0};

// Error taxonomy. The CLI maps each family onto an exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct ResourceError : Error {
    using Error::Error;
};
struct ModelError : Error {
    using Error::Error;
};
struct ConstantsViolation : Error {
    using Error::Error;
};
struct ConditionViolation : Error {
    using Error::Error;
};
struct SolverError : Error {
    using Error::Error;
};

inline void require(bool ok, const std::string &what) {
    if(!ok) throw ParameterError(what);
}

inline double hermiticity_defect(const Mat &m) {
    if(m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    if(m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Largest |eigenvalue| of a Hermitian matrix.
inline double hermitian_norm(const Mat &m) {
    if(m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Rotate the global phase so the largest-magnitude amplitude is real positive.
/// Near-ties resolve to the lowest index so the choice is stable under roundoff.
inline void canonicalize_phase(Vec &v) {
    if(v.size() == 0) return;
    const double vmax = v.cwiseAbs().maxCoeff();
    if(vmax == 0.0) return;
    Eigen::Index pick = 0;
    for(Eigen::Index i = 0; i < v.size(); ++i) {
        if(std::abs(v[i]) >= vmax * (1.0 - 1e-8)) {
            pick = i;
            break;
        }
    }
    v *= std::conj(v[pick]) / std::abs(v[pick]);
}

inline Vec random_state(Eigen::Index dim, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Vec v(dim);
    for(auto &x : v) x = cplx(nd(rng), nd(rng));
    v.normalize();
    return v;
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
inline Mat random_unitary(Eigen::Index dim, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Mat g(dim, dim);
    for(Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = cplx(nd(rng), nd(rng));
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for(Eigen::Index j = 0; j < dim; ++j) {
        cplx d = r(j, j);
        if(std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

/// GUE-like random Hermitian matrix.
inline Mat random_hermitian(Eigen::Index dim, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Mat g(dim, dim);
    for(Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = cplx(nd(rng), nd(rng));
    return 0.5 * (g + g.adjoint());
}

/// Random mixed state of the given rank (Wishart construction).
inline Mat random_density(Eigen::Index dim, Eigen::Index rank, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Mat g(dim, rank);
    for(Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = cplx(nd(rng), nd(rng));
    Mat rho = g * g.adjoint();
    return rho / rho.trace().real();
}

/// Evaluates fn(i) for i in [0, count) on a small thread pool; results keep index order.
template<typename Fn>
auto parallel_map(std::size_t count, Fn &&fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(count);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), count));
    if(workers <= 1) {
        for(std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::future<void>> jobs;
    for(std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for(std::size_t i = w; i < count; i += workers) out[i] = fn(i);
        }));
    }
    for(auto &j : jobs) j.get();
    return out;
}

} // namespace arealab
