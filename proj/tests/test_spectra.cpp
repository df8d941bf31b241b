#include "arealab/operators.hpp"
#include "arealab/spectra.hpp"

#include <gtest/gtest.h>

using namespace arealab;

namespace {

SpMat tfim_chain(int n, double J = 1.0, double g = 2.0) {
    auto             lat = build_lattice(1, {n}, 1.0);
    std::vector<int> sites(n);
    std::iota(sites.begin(), sites.end(), 0);
    return assemble(model_hamiltonian(tfim_model(lat, J, g), sites));
}

} // namespace

TEST(Spectra, PauliZ) {
    auto r = ground_state(SpMat(pauli::Z().sparseView()));
    EXPECT_DOUBLE_EQ(r.E0, -1.0);
    EXPECT_DOUBLE_EQ(r.gap, 2.0);
    EXPECT_NEAR(std::abs(r.ground_vector[1]), 1.0, 1e-15);
    EXPECT_EQ(r.ground_vector[1], cplx(1.0, 0.0));
    EXPECT_FALSE(r.degenerate);
}

TEST(Spectra, ZZIsDegenerate) {
    Mat zz = -kron_le(pauli::Z(), pauli::Z());
    EXPECT_TRUE(ground_state(SpMat(zz.sparseView())).degenerate);
}

TEST(Spectra, LowestKDiagonal) {
    Mat d = Mat::Zero(4, 4);
    d.diagonal() << 3, 0, 2, 1;
    auto p = lowest_k(d, 2);
    EXPECT_DOUBLE_EQ(p[0].value, 0.0);
    EXPECT_DOUBLE_EQ(p[1].value, 1.0);
}

TEST(Spectra, LowestKFullSpectrum) {
    std::mt19937_64 rng(1);
    Mat             h = random_hermitian(12, rng);
    auto            p = lowest_k(h, 12);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    for(int i = 0; i < 12; ++i) EXPECT_NEAR(p[i].value, es.eigenvalues()(i), 1e-12);
}

TEST(Spectra, LanczosMatchesDenseOnTfim8) {
    SpMat                              h = tfim_chain(8);
    Eigen::SelfAdjointEigenSolver<Mat> es{Mat(h)};
    SolverOptions                      opt;
    opt.dense_threshold = 16; // force the iterative path
    auto r              = ground_state(h, opt);
    EXPECT_NEAR(r.E0, es.eigenvalues()(0), 1e-9);
    EXPECT_NEAR(r.gap, es.eigenvalues()(1) - es.eigenvalues()(0), 1e-8);
    EXPECT_NEAR(r.ground_vector.norm(), 1.0, 1e-12);
    EXPECT_LE(r.residual, opt.tol);
    EXPECT_FALSE(r.degenerate);
    EXPECT_GT(r.gap, 0.0);
    EXPECT_GT(std::abs(r.ground_vector.dot(es.eigenvectors().col(0))), 1 - 1e-9);
}

TEST(Spectra, LanczosDenseAgreementRandomSparse) {
    std::mt19937_64 rng(5);
    for(int trial = 0; trial < 3; ++trial) {
        const int                           dim = 400 + 200 * trial;
        std::vector<Eigen::Triplet<cplx>> trip;
        std::uniform_int_distribution<int>  pick(0, dim - 1);
        std::normal_distribution<double>    nd;
        for(int i = 0; i < dim; ++i) trip.emplace_back(i, i, nd(rng));
        for(int e = 0; e < 4 * dim; ++e) {
            int  a = pick(rng), b = pick(rng);
            cplx v(nd(rng), nd(rng));
            if(a == b) continue;
            trip.emplace_back(a, b, v);
            trip.emplace_back(b, a, std::conj(v));
        }
        SpMat h(dim, dim);
        h.setFromTriplets(trip.begin(), trip.end());
        Eigen::SelfAdjointEigenSolver<Mat> es{Mat(h)};
        auto                               r = ground_state(h);
        EXPECT_NEAR(r.E0, es.eigenvalues()(0), 1e-9);
        EXPECT_NEAR(r.gap, es.eigenvalues()(1) - es.eigenvalues()(0), 1e-8);
        auto p = lowest_k(h, 4);
        for(int i = 0; i < 4; ++i) {
            EXPECT_NEAR(p[i].value, es.eigenvalues()(i), 1e-9);
            for(int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(p[i].vector.dot(p[j].vector)), i == j ? 1.0 : 0.0, 1e-10);
        }
    }
}

TEST(Spectra, DegeneratePairOrthonormal) {
    Mat d = Mat::Zero(6, 6);
    d.diagonal() << 1, 1, 2, 3, 4, 5;
    std::mt19937_64 rng(2);
    Mat             u = random_unitary(6, rng);
    auto            p = lowest_k(Mat(u * d * u.adjoint()), 2);
    EXPECT_NEAR(p[0].value, 1.0, 1e-12);
    EXPECT_NEAR(p[1].value, 1.0, 1e-12);
    EXPECT_NEAR(std::abs(p[0].vector.dot(p[1].vector)), 0.0, 1e-10);
}

TEST(Spectra, VariationalBound) {
    SpMat           h = tfim_chain(9);
    auto            r = ground_state(h);
    std::mt19937_64 rng(7);
    for(int t = 0; t < 100; ++t) {
        Vec v = random_state(h.rows(), rng);
        EXPECT_LE(r.E0, v.dot(h * v).real() + 1e-12);
    }
}

TEST(Spectra, PhaseCanonicalizationIsDeterministic) {
    SpMat         h = tfim_chain(7);
    SolverOptions a, b;
    b.seed = 12345;
    auto ra = ground_state(h, a), rb = ground_state(h, b);
    EXPECT_LT((ra.ground_vector - rb.ground_vector).norm(), 1e-8);
}

TEST(Spectra, IterativePathOnLargerChain) {
    SpMat h = tfim_chain(12);
    auto  r = ground_state(h);
    EXPECT_LE(r.residual, 1e-10);
    EXPECT_FALSE(r.degenerate);
    // the g=2 paramagnet gap is close to 2(g-J)=2 in the bulk limit
    EXPECT_GT(r.gap, 1.5);
    EXPECT_LT(r.gap, 2.5);
}

TEST(Spectra, GapProfileConstantFamily) {
    SpMat h    = tfim_chain(4);
    auto  prof = gap_profile([&](double) { return h; }, uniform_grid(5));
    for(double g : prof.gaps) EXPECT_NEAR(g, prof.gaps.front(), 1e-12);
    EXPECT_DOUBLE_EQ(prof.min_gap, *std::min_element(prof.gaps.begin(), prof.gaps.end()));
}

TEST(Spectra, GapProfileRefinesNearCrossing) {
    // two levels crossing at 0.37 with a tiny avoided-crossing coupling
    auto family = [](double l) {
        Mat m = Mat::Zero(3, 3);
        m(0, 0) = l - 0.37;
        m(1, 1) = 0.37 - l;
        m(2, 2) = 5;
        m(0, 1) = m(1, 0) = 1e-3;
        return SpMat(m.sparseView());
    };
    GapProfileOptions go;
    go.resolution = 1e-5;
    auto prof     = gap_profile(family, uniform_grid(11), {}, go);
    EXPECT_NEAR(prof.argmin, 0.37, 2e-5);
    EXPECT_NEAR(prof.min_gap, 2e-3, 1e-6);
    EXPECT_TRUE(std::is_sorted(prof.grid.begin(), prof.grid.end()));
    EXPECT_THROW(gap_profile(family, {0.5, 0.2}), ParameterError);
    EXPECT_THROW(gap_profile(family, {0.5, 1.2}), ParameterError);
}
