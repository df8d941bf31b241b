#include "arealab/adiabatic.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace arealab;

namespace {

InterpolatorSpec tfim_spec(int n, double g = 2.0) {
    auto s = fixtures::tfim_chain_step(n, 1.0, g);
    return build_endpoints(s.prev, s.next, s.lat);
}

/// dS/dt = -Tr(rho' log rho) with rho' = Tr_34(-i[H, psi psi^dag]).
double analytic_rate(const Vec &psi, const Mat &h23, const std::array<int, 4> &dims) {
    std::vector<int> ld{dims[0], dims[1], dims[2], dims[3]};
    StateLayout      layout{{0, 1, 2, 3}, ld};
    Vec              hpsi = apply_on(h23, {1, 2}, ld, psi);
    Mat              x    = reshape_split(psi, ld, {0, 1});
    Mat              y    = reshape_split(hpsi, ld, {0, 1});
    Mat              rho  = x * x.adjoint();
    Mat              drho = cplx(0, -1) * (y * x.adjoint() - x * y.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    Mat logr = es.eigenvectors() * es.eigenvalues().array().log().matrix().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    return -(drho * logr).trace().real();
}

} // namespace

TEST(Generator, ConstantFamilyIsZero) {
    std::mt19937_64 rng(3);
    Mat             h  = random_hermitian(12, rng);
    auto            fr = generator_frame(h, Mat::Zero(12, 12), 0.3);
    EXPECT_LT(fr.generator().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Generator, FiniteDifferenceAtHalfBothKinds) {
    auto spec = tfim_spec(4);
    for(auto kind : {GeneratorKind::Filtered, GeneratorKind::GroundProjected}) {
        GeneratorOptions go;
        go.kind = kind;
        EXPECT_LT(generator_defect(spec, 0.5, 1e-4, go), 1e-6) << to_string(kind);
    }
}

TEST(Generator, DefectAcrossGrid) {
    for(int n : {5, 6}) {
        auto spec = tfim_spec(n);
        for(double l : uniform_grid(21)) EXPECT_LT(generator_defect(spec, l), 1e-5) << "n=" << n << " lambda=" << l;
    }
}

TEST(Generator, HermitianWithZeroGroundExpectation) {
    auto spec = tfim_spec(5);
    for(double l : {0.0, 0.2, 0.45, 0.5, 0.8, 1.0})
        for(auto kind : {GeneratorKind::Filtered, GeneratorKind::GroundProjected}) {
            GeneratorOptions go;
            go.kind = kind;
            auto fr = generator_frame(spec, l, go);
            Mat  A  = fr.generator();
            Vec  g  = fr.ground();
            EXPECT_LT(hermiticity_defect(A), 1e-12);
            EXPECT_LT(std::abs(g.dot(A * g)), 1e-12);
        }
}

TEST(Generator, KindsShareGroundAction) {
    auto             spec = tfim_spec(5);
    GeneratorOptions gp;
    gp.kind = GeneratorKind::GroundProjected;
    for(double l : {0.1, 0.5, 0.62}) {
        auto a = generator_frame(spec, l);
        auto b = generator_frame(spec, l, gp);
        Vec  g = a.ground();
        EXPECT_LT((a.generator() * g - b.generator() * g).norm(), 1e-10);
    }
}

TEST(Generator, FilterMatchesInverseOutsideGap) {
    EXPECT_DOUBLE_EQ(detail::filtered_inverse(2.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(detail::filtered_inverse(-3.0, 1.5), -1.0 / 3.0);
    EXPECT_NEAR(detail::filtered_inverse(0.999999, 1.0), 1.0, 1e-5);
    EXPECT_DOUBLE_EQ(detail::filtered_inverse(0.0, 1.0), 0.0);
    EXPECT_NEAR(detail::filtered_inverse(-0.5, 1.0), -detail::filtered_inverse(0.5, 1.0), 1e-15);
}

TEST(Generator, DegeneracyNamesLambda) {
    auto spec = tfim_spec(4);
    spec.f    = zero_schedule();
    try {
        generator_frame(spec, 0.5);
        FAIL() << "expected a degeneracy error";
    } catch(const ConditionViolation &e) {
        EXPECT_NE(std::string(e.what()).find("lambda=0.5"), std::string::npos);
    }
    EXPECT_THROW(generator_kind_from_string("quasi"), ConfigError);
}

TEST(ConditionalExpectation, PauliOracle) {
    using namespace pauli;
    const std::vector<int> dims{2, 2, 2};
    Mat I2 = Mat::Identity(2, 2);
    Mat A  = kron_le(kron_le(X(), I2), I2) + kron_le(kron_le(Z(), Z()), I2) + kron_le(kron_le(I2, Y()), X());
    EXPECT_LT((conditional_expectation(A, dims, {0}) - kron_le(kron_le(X(), I2), I2)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((conditional_expectation(A, dims, {0, 1}) - kron_le(kron_le(X(), I2), I2) - kron_le(kron_le(Z(), Z()), I2)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((conditional_expectation(A, dims, {0, 1, 2}) - A).cwiseAbs().maxCoeff(), 1e-14);
    Mat id = Mat::Identity(8, 8) * 3.0;
    EXPECT_LT((conditional_expectation(id, dims, {}) - id).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ConditionalExpectation, MixedDimensionsOracle) {
    std::mt19937_64 rng(8);
    Mat             a = random_hermitian(2, rng), b = random_hermitian(3, rng), c = random_hermitian(2, rng);
    Mat             A = kron_le(kron_le(a, b), c);
    Mat             P = conditional_expectation(A, {2, 3, 2}, {1});
    Mat             expect = kron_le(kron_le(Mat::Identity(2, 2), b), Mat::Identity(2, 2)) * (a.trace() * c.trace() / 4.0);
    EXPECT_LT((P - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Decompose, OperatorInsideFirstBallHasNoIncrements) {
    auto s    = fixtures::tfim_chain_step(5);
    auto spec = build_endpoints(s.prev, s.next, s.lat);
    auto layout = interpolated_layout(spec);
    Mat  A      = embed_dense(kron_le(pauli::Z(), pauli::X()), layout.positions({spec.added_site, kAncillaSite}), layout.dims);
    DecomposeOptions dopt;
    dopt.l_tilde = 1;
    auto dec     = locality_decompose(A, spec, s.lat, dopt);
    EXPECT_NEAR(dec.F_norm, 1.0, 1e-12);
    for(const auto &t : dec.G_terms) EXPECT_LT(t.norm, 1e-14) << "j=" << t.j;
    EXPECT_LT(dec.telescoping_error, 1e-14);
}

TEST(Decompose, SingleSiteTermAppearsAtFirstContainingBall) {
    auto s      = fixtures::tfim_chain_step(6);
    auto spec   = build_endpoints(s.prev, s.next, s.lat);
    auto layout = interpolated_layout(spec);
    Mat  A      = embed_dense(pauli::Z(), layout.positions({2}), layout.dims); // distance 3 from site 5
    auto dec    = locality_decompose(A, spec, s.lat);
    ASSERT_EQ(dec.increments.size(), 6u);
    for(const auto &t : dec.increments) {
        if(t.j == 4) EXPECT_NEAR(t.norm, 1.0, 1e-12);
        else EXPECT_LT(t.norm, 1e-14) << "j=" << t.j;
    }
    EXPECT_EQ(dec.l_tilde, 4);
    EXPECT_EQ(dec.increments[3].ball_size, 4);
}

TEST(Decompose, TelescopingAndGroundActionOnTfim) {
    auto s    = fixtures::tfim_chain_step(6);
    auto spec = build_endpoints(s.prev, s.next, s.lat);
    for(double l : {0.2, 0.5}) {
        auto fr  = generator_frame(spec, l);
        Vec  g   = fr.ground();
        auto dec = locality_decompose(fr.generator(), spec, s.lat, {}, &g);
        EXPECT_LT(dec.telescoping_error, 1e-9);
        EXPECT_LT(dec.ground_action_error, 1e-9);
        EXPECT_GE(dec.l_tilde, 1);
        double last = dec.residuals.back();
        EXPECT_LT(last, 1e-10);
        EXPECT_LE(dec.residuals[dec.l_tilde - 1], 0.5 * dec.A_norm + 1e-12);
    }
}

TEST(Decompose, RejectsBadInput) {
    auto s    = fixtures::tfim_chain_step(4);
    auto spec = build_endpoints(s.prev, s.next, s.lat);
    Mat  A    = Mat::Zero(32, 32);
    A(0, 1)   = 1.0;
    EXPECT_THROW(locality_decompose(A, spec, s.lat), ParameterError);
    DecomposeOptions dopt;
    dopt.l_tilde = 9;
    EXPECT_THROW(locality_decompose(Mat::Identity(32, 32), spec, s.lat, dopt), ParameterError);
    EXPECT_THROW(locality_decompose(Mat::Identity(16, 16), spec, s.lat), ParameterError);
}

TEST(Decompose, PowerLawFitRecoversSyntheticDecay) {
    std::vector<GTerm> terms;
    for(int j = 1; j <= 12; ++j) terms.push_back({j, j > 4 ? 0.7 * std::pow(j - 4.0, -3.0) : 5.0, j});
    auto fit = detail::fit_power_law(terms, 4, 1e-300);
    ASSERT_TRUE(fit.valid);
    EXPECT_EQ(fit.points, 8);
    EXPECT_NEAR(fit.exponent, -3.0, 1e-12);
    EXPECT_NEAR(fit.g0, 0.7, 1e-12);
    EXPECT_FALSE(detail::fit_power_law({{5, 1.0, 1}}, 4, 0).valid);
}

TEST(Decompose, DeepParamagnetDecaysMonotonically) {
    auto s    = fixtures::tfim_chain_step(7, 1.0, 5.0);
    auto spec = build_endpoints(s.prev, s.next, s.lat);
    auto prof = locality_profile(spec, s.lat, uniform_grid(11));
    for(std::size_t i = 0; i < prof.grid.size(); ++i) EXPECT_TRUE(increments_monotone(prof.per_lambda[i])) << "lambda=" << prof.grid[i];
    EXPECT_LT(prof.max_telescoping_error, 1e-9);
}

TEST(Decompose, AwayFromCrossingDecays) {
    auto s    = fixtures::tfim_chain_step(7);
    auto spec = build_endpoints(s.prev, s.next, s.lat);
    for(double l : {0.1, 0.2, 0.8, 0.9}) {
        auto fr  = generator_frame(spec, l);
        auto dec = locality_decompose(fr.generator(), spec, s.lat);
        EXPECT_TRUE(increments_monotone(dec)) << "lambda=" << l;
    }
}

TEST(Path, ReachesEndpointGroundState) {
    auto spec = tfim_spec(5);
    auto r    = integrate_path_adaptive(spec, {0, 1});
    EXPECT_EQ(r.steps, 250);
    EXPECT_GE(r.final_fidelity, 1 - 1e-6);
    EXPECT_LE(r.final_fidelity, 1.0);
}

TEST(Path, ConstantFamilyKeepsState) {
    std::mt19937_64 rng(5);
    Mat             h = random_hermitian(8, rng);
    DenseFamily     fam{[h](double) { return h; }, [](double) { return Mat(Mat::Zero(8, 8)); }, StateLayout{{0, 1, 2}, {2, 2, 2}}};
    auto            r = integrate_path(fam, 10, {0});
    EXPECT_NEAR(r.final_fidelity, 1.0, 1e-13);
    EXPECT_NEAR(r.entropy_delta, 0.0, 1e-12);
}

TEST(Path, InsufficientStepsReported) {
    auto        spec = tfim_spec(4);
    PathOptions opt;
    opt.start_steps    = 1;
    opt.max_steps      = 2;
    opt.fidelity_floor = 1.0 + 1e-3;
    EXPECT_THROW(integrate_path_adaptive(spec, {0}, opt), SolverError);
    EXPECT_THROW(integrate_path(spec, 0, {0}), ParameterError);
}

TEST(Path, DistantRegionsChangeLess) {
    auto spec   = tfim_spec(6);
    auto r      = integrate_path(spec, 125, {0});
    auto layout = interpolated_layout(spec);
    Eigen::SelfAdjointEigenSolver<Mat> e0(build_interpolated_dense(spec, 0.0));
    Vec  psi0 = e0.eigenvectors().col(0);
    double prev = std::numeric_limits<double>::infinity();
    for(int site = 0; site <= 3; ++site) { // distance 5 down to 2 from the added site
        std::vector<int> region{site};
        double d = std::abs(entanglement_entropy(r.final_state, layout, region, std::exp(1.0)) - entanglement_entropy(psi0, layout, region, std::exp(1.0)));
        if(site > 0) {
            EXPECT_GE(d, prev * (1 - 1e-6)) << "site " << site;
        }
        prev = d;
    }
    EXPECT_LT(std::abs(r.entropy_delta), 1e-3);
}

TEST(Sie, ZeroHamiltonianOnProductState) {
    std::mt19937_64 rng(1);
    Vec a = random_state(4, rng), b = random_state(4, rng);
    auto r = entangling_rate(kron_le(a, b), Mat::Zero(4, 4), {2, 2, 2, 2});
    EXPECT_EQ(r.rate, 0.0);
    EXPECT_EQ(r.ratio, 0.0);
}

TEST(Sie, MatchesAnalyticRate) {
    std::mt19937_64 rng(12);
    Mat              swap = Mat::Zero(4, 4);
    swap(0, 0) = swap(3, 3) = 1.0;
    swap(1, 2) = swap(2, 1) = 1.0;
    for(int t = 0; t < 5; ++t) {
        Vec  psi = random_state(16, rng);
        Mat  h   = t == 0 ? swap : random_hermitian(4, rng);
        auto r   = entangling_rate(psi, h, {2, 2, 2, 2});
        EXPECT_NEAR(r.rate, analytic_rate(psi, h, {2, 2, 2, 2}), 1e-6);
        EXPECT_NEAR(r.ratio, r.rate / (r.h_norm * std::log(2.0)), 1e-14);
    }
    Vec  psi = random_state(36, rng);
    Mat  h   = random_hermitian(9, rng);
    auto r   = entangling_rate(psi, h, {2, 3, 3, 2});
    EXPECT_NEAR(r.rate, analytic_rate(psi, h, {2, 3, 3, 2}), 1e-6);
}

TEST(Sie, VacuousPartitionFlagged) {
    std::mt19937_64 rng(2);
    Vec  psi = random_state(8, rng);
    auto r   = entangling_rate(psi, random_hermitian(2, rng), {2, 1, 2, 2});
    EXPECT_TRUE(r.vacuous);
    EXPECT_EQ(r.ratio, 0.0);
    EXPECT_THROW(entangling_rate(psi, Mat::Identity(3, 3), {2, 1, 2, 2}), ParameterError);
    EXPECT_THROW(entangling_rate(2.0 * psi, Mat::Identity(2, 2), {2, 1, 2, 2}), ParameterError);
}

TEST(Sie, BatchesAgreeAndAreReproducible) {
    auto a = sie_batch(100, 11), b = sie_batch(100, 12);
    EXPECT_GT(a.max_ratio, 0.0);
    EXPECT_TRUE(std::isfinite(a.max_ratio) && std::isfinite(b.max_ratio));
    EXPECT_LT(std::max(a.max_ratio, b.max_ratio) / std::min(a.max_ratio, b.max_ratio), 2.0);
    EXPECT_EQ(sie_batch(100, 11).max_ratio, a.max_ratio);
    EXPECT_EQ(a.d2, 2);
    EXPECT_EQ(a.ratios.size(), 100u);
}

TEST(EntropyChain, StepChangesWithinMeasuredBound) {
    const double     ratio = sie_batch(200, 7).max_ratio;
    const std::vector<int> region{0, 1};
    for(int n = 5; n <= 8; ++n) {
        auto s    = fixtures::tfim_chain_step(n);
        auto spec = build_endpoints(s.prev, s.next, s.lat);
        auto prof = locality_profile(spec, s.lat, uniform_grid(n <= 6 ? 21 : 7));
        auto sp   = StateLayout::of(s.prev);
        auto sn   = StateLayout::of(s.next);
        double dS = std::abs(entanglement_entropy(spec.eta0, sn, region, std::exp(1.0)) -
                             entanglement_entropy(ground_state(assemble(s.prev)).ground_vector, sp, region, std::exp(1.0)));
        const double r     = s.lat.euclidean(spec.added_site, 1);
        const double bound = entropy_step_bound(prof.envelope, r, s.lat.spacing(), ratio, 2);
        EXPECT_LE(dS, bound) << "n=" << n;
        EXPECT_GT(bound, 0.0);
    }
}

TEST(EntropyChain, BoundSumsFromDistance) {
    std::vector<GTerm> inc{{1, 1.0, 1}, {2, 0.5, 2}, {3, 0.25, 3}};
    EXPECT_NEAR(entropy_step_bound(inc, 2.0, 1.0, 2.0, 2), 2.0 * (0.5 * 2 + 0.25 * 3) * std::log(2.0), 1e-14);
    EXPECT_NEAR(entropy_step_bound(inc, 4.0, 2.0, 1.0, 3), (0.5 * 2 + 0.25 * 3) * std::log(3.0), 1e-14);
    EXPECT_EQ(entropy_step_bound(inc, 10.0, 1.0, 1.0, 2), 0.0);
}
