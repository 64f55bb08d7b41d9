#include "support.hpp"

using namespace hyperhall;

namespace {

Mat random_hermitian(int n, std::uint64_t seed) {
    testsupport::Rng rng(seed);
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    return Mat(0.5 * (A + A.adjoint()));
}

TimeFamily constant_family() {
    TimeFamily f;
    f.n = 3;
    f.fermi = 0.0;
    f.name = "constant";
    Mat H = Mat::Zero(3, 3);
    H(0, 0) = -1.0;
    H(1, 1) = 0.5;
    H(2, 2) = 2.0;
    H(0, 1) = H(1, 0) = 0.2;
    f.H = [H](double) { return H; };
    return f;
}

}  // namespace

TEST_CASE("evolution of constant and commuting families", "[adiabatic]") {
    auto f = constant_family();
    auto r = evolve_physical(f, 7.0, 400, 4);
    for (size_t k = 0; k < r.U.size(); ++k) {
        Mat ref = expm_herm(f.H(0), 7.0 * r.checkpoints[k]);
        CHECK((r.U[k] - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(r.unitarity_defect < 1e-10);
    CHECK((adiabatic_hamiltonian(f, 7.0, 0.3) - f.H(0.3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(contour_X(f, 0.4).X.cwiseAbs().maxCoeff() == 0.0);

    // [H(s), H(s')] = 0: U(1) = exp(-i tau int H)
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = -0.5;
    auto H = [D](double s) { return Mat((1.0 + s * s) * D); };
    auto c = evolve(H, 2, 10.0, 500, 1);
    CHECK((c.U.back() - expm_herm(D, 10.0 * (4.0 / 3.0))).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(evolve(H, 2, 10.0, 501, 2), std::invalid_argument);
    CHECK_THROWS_AS(evolve(H, 2, -1.0, 500, 1), std::invalid_argument);
}

TEST_CASE("projection family", "[adiabatic]") {
    auto f = two_level_family();
    auto chk = check_family(f);
    CHECK(chk.rank == 1);
    CHECK(chk.min_gap == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(chk.hermiticity == 0.0);
    for (double s : {0.0, 0.25, 0.5, 1.0}) {
        Mat P = projection(f, s);
        CHECK(projector_defect(P) < 1e-12);
        CHECK(std::real(P.trace()) == Catch::Approx(1.0));
    }
    CHECK((projection(constant_family(), 0.1) - projection(constant_family(), 0.9)).cwiseAbs().maxCoeff() == 0.0);
    auto crossing = two_level_family(2.0, 0.0);
    CHECK_THROWS_AS(check_family(crossing), GapError);
    // Richardson converges: halving h changes dP by much less than the centred value error
    Mat d1 = dP(f, 0.3, 1e-2), d2 = dP(f, 0.3, 5e-3);
    CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("adiabatic Hamiltonian and intertwining", "[adiabatic]") {
    auto f = two_level_family();
    Mat Ha = adiabatic_hamiltonian(f, 20.0, 0.4);
    CHECK(hermitian_defect(Ha) < 1e-12);
    auto ua = evolve_adiabatic(f, 20.0, default_steps(20.0), 100);
    CHECK(intertwining_defect(f, ua) < 1e-6);
    CHECK(ua.unitarity_defect < 1e-10);
    CHECK(step_refinement_defect(f, 20.0, default_steps(20.0)) < 1e-8);

    double e1 = eom_residual(f, 20.0, 0.4, 1e-2), e2 = eom_residual(f, 20.0, 0.4, 5e-3);
    CHECK(std::log2(e1 / e2) > 1.9);
}

TEST_CASE("contour solution of the commutator equation", "[adiabatic]") {
    auto f = two_level_family();
    for (double s : {0.1, 0.5, 0.8}) {
        auto cr = contour_X(f, s);
        CHECK(cr.commutator_residual < 1e-6);
        CHECK(cr.doubling_change < 1e-8);
        // eigenbasis oracle: X_ab = [dP,P]_ab / (l_a - l_b) between the blocks
        Eigen::SelfAdjointEigenSolver<Mat> es(f.H(s));
        const auto& V = es.eigenvectors();
        Mat P = projection(f, s), D = dP(f, s);
        Mat C = V.adjoint() * (D * P - P * D) * V;
        Mat X = Mat::Zero(2, 2);
        X(0, 1) = C(0, 1) / (es.eigenvalues()(0) - es.eigenvalues()(1));
        X(1, 0) = C(1, 0) / (es.eigenvalues()(1) - es.eigenvalues()(0));
        CHECK((V * X * V.adjoint() - cr.X).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("1/tau bound on the two-level family", "[adiabatic]") {
    auto rep = qat_bound_check(two_level_family(), {20, 40, 80, 160});
    CHECK(rep.bound_holds);
    CHECK(rep.ratios_ok);
    CHECK(rep.scaled_bounded);
    CHECK(rep.max_unitarity_defect < 1e-10);
    for (double r : rep.ratio) CHECK((r > 0.3 && r < 0.7));
    auto flat = qat_bound_check(constant_family(), {1, 2, 4, 8});
    for (double l : flat.lhs) CHECK(l == 0.0);
    CHECK_THROWS_AS(qat_bound_check(two_level_family(), {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("projector identities behind the conductance formula", "[adiabatic]") {
    const int n = 6;
    Mat H0 = random_hermitian(n, 1), H1 = random_hermitian(n, 2), K1 = random_hermitian(n, 3),
        K2 = random_hermitian(n, 4);
    Eigen::SelfAdjointEigenSolver<Mat> es(H0);
    KuboFamily fam;
    fam.n = n;
    fam.dirs = 2;
    fam.fermi = 0.5 * (es.eigenvalues()(2) + es.eigenvalues()(3));
    fam.H = [=](double s, const Eigen::VectorXd& a) {
        return Mat(H0 + 0.1 * s * H1 + a(0) * K1 + a(1) * K2);
    };
    auto r = kubo_identities(fam, 0.0, 30.0);
    CHECK(r.projector_sandwich < 1e-12);
    CHECK(r.double_commutator < 1e-12);
    CHECK(r.conductance_imag < 1e-12);
    CHECK(r.antisymmetry_defect < 1e-12);
    for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(r.lhs[k] - r.rhs[k]) < 1e-12 * std::max(1.0, std::abs(r.rhs[k])));
        CHECK(std::isfinite(std::abs(r.discarded[k])));
        CHECK(std::isfinite(std::abs(r.current[k])));
    }
}

TEST_CASE("Berry curvature of the two-level sphere integrates to 2 pi", "[adiabatic]") {
    // H = n(t, p) . sigma, lower band; curvature -i tr(P [d_t P, d_p P])
    const int nt = 40, np = 40;
    double total = 0;
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j) {
            double t = (i + 0.5) * kPi / nt, p = (j + 0.5) * 2 * kPi / np;
            KuboFamily fam;
            fam.n = 2;
            fam.dirs = 2;
            fam.fermi = 0.0;
            fam.H = [t, p](double, const Eigen::VectorXd& a) {
                double tt = t + a(0), pp = p + a(1);
                Mat H(2, 2);
                H << std::cos(tt), std::sin(tt) * std::polar(1.0, -pp), std::sin(tt) * std::polar(1.0, pp),
                    -std::cos(tt);
                return H;
            };
            total += kubo_identities(fam, 0.5, 1.0).conductance(0, 1).real() * (kPi / nt) * (2 * kPi / np);
        }
    CHECK(std::abs(std::abs(total) - 2 * kPi) < 1e-2);
}
