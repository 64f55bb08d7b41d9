#include "support.hpp"


using namespace hyperhall;
using testsupport::Rng;

namespace {

const GroupPtr& genus2() {
    static auto grp = build_genus_g_group(2);
    return grp;
}

SparseHamiltonian diagonal(const std::vector<double>& d) {
    SparseHamiltonian h;
    h.H.resize(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    std::vector<Eigen::Triplet<cplx>> t;
    for (size_t i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    h.H.setFromTriplets(t.begin(), t.end());
    return h;
}

}  // namespace

TEST_CASE("closed-form Landau levels", "[spectral]") {
    auto s3 = comtet_levels(3.0);
    CHECK(s3.discrete == std::vector<double>{3, 7, 9});
    CHECK(s3.continuum_edge == 9.25);
    auto s04 = comtet_levels(0.4);
    CHECK(s04.discrete.empty());
    CHECK(s04.continuum_edge == Catch::Approx(0.41));
    auto s1 = comtet_levels(1.0);
    CHECK(s1.discrete == std::vector<double>{1});
    CHECK(s1.continuum_edge == 1.25);
}

TEST_CASE("radial oracle fixes the normalization", "[spectral]") {
    for (double theta : {2.0, 3.0, 4.5}) CHECK(resolve_comtet_normalization(theta) == Catch::Approx(kComtetNormalization).epsilon(1e-4));
    auto lv = radial_landau_levels(3.0, 0, 10.0, 4000, 3);
    auto c = comtet_levels(3.0);
    // levels with m = 0 are k = 0, 1, 2 in the radial quantum number
    for (int k = 0; k < 3; ++k) CHECK(kComtetNormalization * lv[k] == Catch::Approx(c.discrete[k]).epsilon(1e-3));
    CHECK_THROWS(resolve_comtet_normalization(0.3));
}

TEST_CASE("finite-difference continuum solver", "[spectral]") {
    auto st = continuum_fd_study(3.0, 3.0, 64);
    double lowest = kComtetNormalization * st.fine.levels[0];
    CHECK(std::abs(lowest - 3.0) / 3.0 < 0.02);
    CHECK(st.max_relative_change < 0.01);
    CHECK(st.fine.max_residual < 1e-6);
    CHECK_THROWS_AS(continuum_fd_study(3.0, 3.0, 8, 1e-6), ConvergenceError);

    // zero field: the lowest Dirichlet level decreases towards the edge 1/4
    double l3 = kComtetNormalization * continuum_fd_solve(0.0, 3.0, 48, 1).levels[0];
    double l5 = kComtetNormalization * continuum_fd_solve(0.0, 5.0, 48, 1).levels[0];
    CHECK(l5 < l3);
    CHECK(l5 > 0.25);
}

TEST_CASE("Harper operator on a ball", "[spectral]") {
    auto ball1 = ball_enumerate(genus2(), 1);
    auto h0 = harper_build(Multiplier(genus2(), MagneticField(0.0)), ball1);
    auto sp = spectrum(h0);
    // star graph with 8 leaves: +-sqrt(8) and 0 with multiplicity 7
    CHECK(sp.values(0) == Catch::Approx(-std::sqrt(8.0)).epsilon(1e-12));
    CHECK(sp.values(8) == Catch::Approx(std::sqrt(8.0)).epsilon(1e-12));
    for (int i = 1; i < 8; ++i) CHECK(std::abs(sp.values(i)) < 1e-12);
    CHECK_THROWS(harper_build(Multiplier(genus2(), MagneticField(0.0)), ball_enumerate(genus2(), 0)));

    auto ball3 = ball_enumerate(genus2(), 3);
    Mat A = harper_build(Multiplier(genus2(), MagneticField(0.0)), ball3).dense();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) REQUIRE((A(i, j) == cplx(0.0) || A(i, j) == cplx(1.0)));

    for (double theta : {0.4, 1.7, 5.0}) {
        auto h = harper_build(Multiplier(genus2(), MagneticField(theta)), ball3);
        CHECK(hermiticity_defect(h.H) < 1e-12);
        CHECK(max_row_nnz(h.H) <= 4 * 2 + 1);
        auto hm = harper_build(Multiplier(genus2(), MagneticField(-theta)), ball3);
        CHECK((hm.dense() - h.dense().conjugate()).cwiseAbs().maxCoeff() < 1e-14);
        auto s = spectrum(h), sm = spectrum(hm);
        CHECK((s.values - sm.values).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(s.values(0) >= -8.0);
        CHECK(s.values(s.values.size() - 1) <= 8.0);
        CHECK(s.ldos.sum() == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(s.max_residual < 1e-8);

        RVec V = RVec::Constant(static_cast<Eigen::Index>(ball3.size()), 0.75);
        auto hv = harper_build(Multiplier(genus2(), MagneticField(theta)), ball3, V, "constant");
        CHECK((spectrum(hv).values - s.values - V).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(hv.potential == "constant");
    }
}

TEST_CASE("spectrum of diagonal operators, dense and iterative", "[spectral]") {
    auto small = spectrum(diagonal({3, -1, 2, 0.5}));
    CHECK(small.values == RVec((RVec(4) << -1, 0.5, 2, 3).finished()));
    CHECK(small.dense);

    const int n = 4500;
    std::vector<double> d(n);
    Rng rng(5);
    for (int i = 0; i < n; ++i) d[i] = i < 3 ? i : rng.uniform(5.0, 8.0);
    std::shuffle(d.begin(), d.end(), std::mt19937_64(5));
    auto big = spectrum(diagonal(d), 3);
    CHECK_FALSE(big.dense);
    for (int k = 0; k < 3; ++k) CHECK(big.values(k) == Catch::Approx(k).margin(1e-9));
    CHECK(big.max_residual < 1e-8);
}

TEST_CASE("butterfly sweep", "[spectral]") {
    auto ball = ball_enumerate(genus2(), 2);
    auto one = butterfly_sweep({1.3}, ball);
    auto direct = spectrum(harper_build(Multiplier(genus2(), MagneticField(1.3)), ball));
    REQUIRE(one.size() == ball.size());
    for (size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].eigenvalue == direct.values(static_cast<Eigen::Index>(i)));
        CHECK(one[i].R == 2);
    }
    std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
    auto a = butterfly_sweep(grid, ball, 1), b = butterfly_sweep(grid, ball, 3);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].theta == b[i].theta);
        CHECK(a[i].index == b[i].index);
        CHECK(a[i].eigenvalue == b[i].eigenvalue);
    }
    CHECK_THROWS_AS(butterfly_sweep({}, ball), std::invalid_argument);

    RVec ev(5);
    ev << -2, -1.9, 0.5, 0.6, 3;
    auto gaps = find_gaps(ev, 1.0);
    REQUIRE(gaps.size() == 2);
    CHECK(gaps[0].below == 2);
    CHECK(gaps[0].mid() == Catch::Approx(-0.7));
}

TEST_CASE("disorder family", "[spectral]") {
    CHECK(disorder_value(DisorderPoint(1.0, 1.0), 0.0) == 1.0);
    CHECK_THROWS(DisorderPoint(0.0, 1.0));
    CHECK_THROWS(DisorderPoint(1.0, cplx(0.5, 0)));
    Rng rng(41);
    auto ball = ball_enumerate(genus2(), 3);
    double worst = 0;
    for (int k = 0; k < 500; ++k) {
        DisorderPoint d(rng.uniform(0.1, 3.0), std::polar(1.0, rng.uniform(0, 2 * kPi)));
        cplx z = std::polar(0.9 * std::sqrt(rng.uniform(0, 1)), rng.uniform(0, 2 * kPi));
        const auto& g = ball[rng.integer(0, static_cast<int>(ball.size()) - 1)];
        worst = std::max(worst, disorder_covariance_residual(d, g.matrix, z));
        DisorderPoint d2(2 * d.lambda, d.w);
        CHECK(disorder_value(d2, z) == Catch::Approx(2 * disorder_value(d, z)).epsilon(1e-15));
        CHECK(disorder_value(d, z) > 0);
    }
    CHECK(worst < 1e-10);
    auto s = disorder_potential(DisorderPoint(1.0, 1.0), std::vector<cplx>{0.0, cplx(1.0 - 1e-13, 0)});
    CHECK(s.singular_warning);
    CHECK_THROWS_AS(disorder_potential(DisorderPoint(1.0, 1.0), std::vector<cplx>{1.5}), DomainError);
}

TEST_CASE("spectral projections and pairings", "[spectral]") {
    // split diagonal spectrum: P is diagonal 0/1 and the pairing vanishes
    auto ball = ball_enumerate(genus2(), 1);
    std::vector<double> d(ball.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = i % 2 ? 5.0 : -5.0;
    auto sp = spectral_projection(diagonal(d), 0.0);
    for (size_t i = 0; i < d.size(); ++i) CHECK(sp.P(i, i) == cplx(i % 2 ? 0.0 : 1.0));
    CHECK((sp.P - Mat(sp.P.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    auto ctx = std::make_shared<TwistedContext>(ball, MagneticField(1.0));
    auto pr = conductance_pairing(projection_kernel(sp.P, ctx));
    CHECK(std::abs(pr.value) == 0.0);
    CHECK(std::abs(pr.kubo_value) == 0.0);

    auto ball2 = ball_enumerate(genus2(), 2);
    auto h = harper_build(Multiplier(genus2(), MagneticField(1.0)), ball2);
    auto s = spectrum(h);
    auto gaps = find_gaps(s.values, 0.05);
    REQUIRE_FALSE(gaps.empty());
    auto P = spectral_projection(h, gaps[0].mid());
    CHECK(projector_defect(P.P) < 1e-10);
    CHECK(hermitian_defect(P.P) < 1e-12);
    CHECK(P.rank == gaps[0].below);
    CHECK(std::real(P.P.trace()) == Catch::Approx(P.rank).epsilon(1e-12));
    CHECK_THROWS_AS(spectral_projection(h, s.values(3)), GapError);

    auto ctx2 = std::make_shared<TwistedContext>(ball2, MagneticField(1.0));
    auto decay = kernel_decay(projection_kernel(P.P, ctx2), ball2);
    CHECK(decay.shell_max.size() == 3);
    auto rep = conductance_pairing(projection_kernel(P.P, ctx2));
    CHECK(std::isfinite(rep.value.real()));
    CHECK(rep.distance <= 1.0);
}

TEST_CASE("local density of states stabilises in R", "[spectral]") {
    std::vector<SpectrumResult> sp;
    for (int R = 1; R <= 3; ++R)
        sp.push_back(spectrum(harper_build(Multiplier(genus2(), MagneticField(1.0)), ball_enumerate(genus2(), R))));
    double d12 = cumulative_ldos_distance(sp[0], sp[1]), d23 = cumulative_ldos_distance(sp[1], sp[2]);
    CHECK(d23 < d12);
    CHECK(cumulative_ldos_distance(sp[2], sp[2]) < 1e-14);
}

TEST_CASE("dense eigensolver on a disordered Harper operator", "[spectral]") {
    // divide and conquer returns wrong vectors here on some BLAS builds
    auto ball = ball_enumerate(genus2(), 3);
    auto d = disorder_potential(DisorderPoint(0.5, std::polar(1.0, 0.3)), ball);
    Multiplier m(genus2(), MagneticField(1.0));
    auto h = harper_build(m, ball, d.values);
    auto ep = herm_eig(h.dense());
    Mat res = h.dense() * ep.vectors - ep.vectors * ep.values.cast<cplx>().asDiagonal();
    CHECK(res.colwise().norm().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat> es(h.dense(), Eigen::EigenvaluesOnly);
    CHECK((es.eigenvalues() - ep.values).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((herm_eig(h.dense(), false).values - ep.values).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_NOTHROW(spectrum(h));
}
