#include "support.hpp"

using namespace hyperhall;
using testsupport::Rng;

TEST_CASE("symplectic form", "[jacobi]") {
    std::vector<double> e1{1, 0, 0, 0}, e2{0, 1, 0, 0}, e3{0, 0, 1, 0};
    CHECK(symplectic_s(e1, e3) == 1.0);
    CHECK(symplectic_s(e3, e1) == -1.0);
    CHECK(symplectic_s(e1, e2) == 0.0);
    CHECK_THROWS_AS(symplectic_s(e1, std::vector<double>{1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(symplectic_s(std::vector<double>{1, 0, 0}, std::vector<double>{1, 0, 0}),
                    std::invalid_argument);
    Rng rng(21);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> u(6), v(6), w(6);
        for (int i = 0; i < 6; ++i) u[i] = rng.uniform(-1, 1), v[i] = rng.uniform(-1, 1), w[i] = rng.uniform(-1, 1);
        CHECK(std::abs(symplectic_s(u, u)) < 1e-15);
        CHECK(std::abs(symplectic_s(u, v) + symplectic_s(v, u)) < 1e-15);
        std::vector<double> uw(6);
        for (int i = 0; i < 6; ++i) uw[i] = 2 * u[i] + w[i];
        CHECK(std::abs(symplectic_s(uw, v) - 2 * symplectic_s(u, v) - symplectic_s(w, v)) < 1e-14);
    }
}

TEST_CASE("group cocycles", "[jacobi]") {
    auto grp = build_genus_g_group(2);
    auto e = GroupElement::identity(grp);
    auto a1 = GroupElement::generator(grp, 1), b1 = GroupElement::generator(grp, 3);
    CHECK(cocycle_symp(a1, b1) == 0.5);
    CHECK(cocycle_symp(e, b1) == 0.0);
    CHECK(cocycle_symp(a1, e) == 0.0);
    CHECK(cocycle_hyp(a1, e) == 0.0);

    auto ball = ball_enumerate(grp, 2);
    const int n = static_cast<int>(ball.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const auto &x = ball[i], &y = ball[j], &z = ball[k];
                long long d = cocycle_symp_twice(y, z) - cocycle_symp_twice(x * y, z) +
                              cocycle_symp_twice(x, y * z) - cocycle_symp_twice(x, y);
                REQUIRE(d == 0);
            }
    auto ball3 = ball_enumerate(grp, 3);
    Rng rng(22);
    double worst = 0;
    for (int t = 0; t < 500; ++t) {
        const auto& x = ball3[rng.integer(0, static_cast<int>(ball3.size()) - 1)];
        const auto& y = ball3[rng.integer(0, static_cast<int>(ball3.size()) - 1)];
        const auto& z = ball3[rng.integer(0, static_cast<int>(ball3.size()) - 1)];
        worst = std::max(worst, std::abs(cocycle_hyp(y, z) - cocycle_hyp(x * y, z) + cocycle_hyp(x, y * z) -
                                         cocycle_hyp(x, y)));
        CHECK(std::abs(cocycle_hyp(x, y)) < kPi);
        // reversing the path u -> xu -> xyu reverses the orientation
        CHECK(cocycle_hyp(x * y, y.inverse()) == Catch::Approx(-cocycle_hyp(x, y)).margin(1e-9));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("fan pairings and kappa", "[jacobi]") {
    CHECK(kappa(2) == Catch::Approx(2 * kPi).epsilon(1e-15));
    CHECK(kappa(3) == Catch::Approx(8 * kPi / 3).epsilon(1e-15));
    CHECK_THROWS(kappa(1));
    for (int g : {2, 3}) {
        auto grp = build_genus_g_group(g);
        double hyp = fan_pairing(cocycle_hyp, grp), symp = fan_pairing(cocycle_symp, grp);
        CHECK(std::abs(hyp - 4 * kPi * (g - 1)) < 1e-6);
        CHECK(symp == g);
        CHECK(std::abs(hyp / symp - kappa(g)) < 1e-6);
        CHECK(fan_pairing([](const GroupElement&, const GroupElement&) { return 0.0; }, grp) == 0.0);
        // shoelace oracle: half the sum of s over consecutive relator prefix vertices
        auto rel = grp->relator();
        std::vector<long long> v(2 * g, 0), prev(2 * g, 0);
        long long twice = 0;
        for (int l : rel) {
            v[std::abs(l) - 1] += l > 0 ? 1 : -1;
            twice += symplectic_s(prev, v);
            prev = v;
        }
        CHECK(0.5 * static_cast<double>(twice) == symp);
    }
}

TEST_CASE("coboundary oracle", "[jacobi]") {
    auto grp = build_genus_g_group(2);
    CHECK_THROWS(coboundary_residual(cocycle_hyp, ball_enumerate(grp, 0)));
    auto ball = ball_enumerate(grp, 2);
    Rng rng(23);
    std::vector<double> q(ball.size());
    q[0] = 0;
    for (size_t i = 1; i < q.size(); ++i) q[i] = rng.uniform(-1, 1);
    auto exact = [&](const GroupElement& x, const GroupElement& y) {
        auto ix = ball.find_in_ball(x.matrix), iy = ball.find_in_ball(y.matrix),
             ixy = ball.find_in_ball((x * y).matrix);
        return q[*ix] - q[*ixy] + q[*iy];
    };
    auto r0 = coboundary_residual(exact, ball);
    CHECK(r0.residual < 1e-10);

    auto ball3 = ball_enumerate(grp, 3);
    const double k = kappa(2);
    auto diff = [k](const GroupElement& x, const GroupElement& y) {
        return cocycle_hyp(x, y) - k * cocycle_symp(x, y);
    };
    auto r1 = coboundary_residual(diff, ball3);
    auto r2 = coboundary_residual(cocycle_hyp, ball3);
    CHECK(r1.residual < 1e-6);
    CHECK(r2.residual > 1e-2);
    CHECK(r1.q[0] == 0.0);
    CHECK(std::isfinite(r1.growth_fit_residual));
    CHECK(r1.growth_fit_residual < 1.0);
}
