#include "support.hpp"

using namespace hyperhall;

namespace {

ContextPtr context(double theta, int R = 2) {
    static auto grp = build_genus_g_group(2);
    return TwistedContext::make(grp, theta, R);
}

double rel_diff(const TwistedKernel& a, const TwistedKernel& b) {
    double scale = 1.0;
    for (auto [i, v] : a.entries()) scale = std::max(scale, std::abs(v));
    return a.max_abs_diff(b) / scale;
}

// tr(A0 (d_j A1 d_k A2 - d_k A1 d_j A2)) through explicit products.
cplx cjk_by_products(int j, int k, const TwistedKernel& A0, const TwistedKernel& A1, const TwistedKernel& A2) {
    auto t1 = convolve(A0, convolve(derivation_delta(j, A1), derivation_delta(k, A2)));
    auto t2 = convolve(A0, convolve(derivation_delta(k, A1), derivation_delta(j, A2)));
    return trace(t1) - trace(t2);
}

}  // namespace

TEST_CASE("twisted convolution", "[twisted_algebra]") {
    auto ctx = context(1.7);
    auto A = random_kernel(ctx, 2, 1), B = random_kernel(ctx, 2, 2), C = random_kernel(ctx, 2, 3);
    auto e = TwistedKernel::unit(ctx);
    CHECK(convolve(e, A).max_abs_diff(A) == 0.0);
    CHECK(convolve(A, e).max_abs_diff(A) == 0.0);
    auto left = convolve(convolve(A, B), C), right = convolve(A, convolve(B, C));
    CHECK(rel_diff(left, right) < 1e-12);
    CHECK(left.max_abs_diff(right) < 1e-9);

    auto other = context(1.7);
    CHECK_THROWS_AS(convolve(A, random_kernel(other, 1, 1)), std::invalid_argument);
}

TEST_CASE("zero field gives the untwisted group convolution", "[twisted_algebra]") {
    auto ctx = context(0.0);
    auto A = random_kernel(ctx, 2, 4), B = random_kernel(ctx, 1, 5);
    auto AB = convolve(A, B);
    auto& tab = ctx->table();
    // independent evaluation: for each target, sum over g1 with g1^-1 g in supp B
    for (auto [k, v] : AB.entries()) {
        cplx s = 0;
        for (auto [i, a] : A.entries()) {
            auto j = tab.find(tab[i].matrix.inverse() * tab[k].matrix);
            if (j) s += a * B.at(*j);
        }
        CHECK(std::abs(s - v) < 1e-12);
    }
}

TEST_CASE("star and trace", "[twisted_algebra]") {
    auto ctx = context(1.7);
    auto A = random_kernel(ctx, 2, 6), B = random_kernel(ctx, 2, 7);
    CHECK(trace(TwistedKernel::unit(ctx)) == cplx(1.0));
    CHECK(star(star(A)).max_abs_diff(A) == 0.0);
    CHECK(std::abs(trace(convolve(A, B)) - trace(convolve(B, A))) < 1e-12 * std::max(1.0, std::abs(trace(convolve(A, B)))));
    CHECK(rel_diff(star(convolve(A, B)), convolve(star(B), star(A))) < 1e-12);
    cplx lam(0.3, -1.1);
    CHECK(star(A * lam).max_abs_diff(star(A) * std::conj(lam)) < 1e-15);
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        auto K = random_kernel(ctx, 2, seed);
        cplx t = trace(convolve(star(K), K));
        CHECK(t.real() > 0);
        CHECK(std::abs(t.imag()) < 1e-12 * t.real());
    }
}

TEST_CASE("derivations", "[twisted_algebra]") {
    auto ctx = context(1.7);
    auto A = random_kernel(ctx, 2, 8), B = random_kernel(ctx, 2, 9);
    CHECK(derivation_delta(1, TwistedKernel::unit(ctx)).norm1() == 0.0);
    CHECK_THROWS_AS(derivation_delta(0, A), std::out_of_range);
    CHECK_THROWS_AS(derivation_delta(5, A), std::out_of_range);
    for (int j = 1; j <= 4; ++j) {
        auto lhs = derivation_delta(j, convolve(A, B));
        auto rhs = convolve(derivation_delta(j, A), B) + convolve(A, derivation_delta(j, B));
        CHECK(rel_diff(lhs, rhs) < 1e-12);
        CHECK(derivation_delta(j, star(A)).max_abs_diff(star(derivation_delta(j, A))) < 1e-15);
        for (int k = 1; k <= 4; ++k)
            CHECK(derivation_delta(j, derivation_delta(k, A)).max_abs_diff(derivation_delta(k, derivation_delta(j, A))) ==
                  0.0);
    }
}

TEST_CASE("cyclic cocycles c_jk", "[twisted_algebra]") {
    auto ctx = context(1.7);
    auto e = TwistedKernel::unit(ctx);
    auto A = random_kernel(ctx, 2, 10), B = random_kernel(ctx, 2, 11), C = random_kernel(ctx, 2, 12);
    CHECK(cyclic_cjk(1, 3, A, e, B).value == cplx(0.0));
    CHECK(cyclic_cjk(1, 3, A, B, e).value == cplx(0.0));
    CHECK(cyclic_cjk(2, 2, A, B, C).value == cplx(0.0));
    CHECK_THROWS_AS(cyclic_cjk(0, 1, A, B, C), std::out_of_range);
    for (int j = 1; j <= 4; ++j)
        for (int k = 1; k <= 4; ++k) {
            cplx v = cyclic_cjk(j, k, A, B, C).value;
            CHECK(std::abs(v + cyclic_cjk(k, j, A, B, C).value) < 1e-12 * std::max(1.0, std::abs(v)));
            CHECK(std::abs(v - cjk_by_products(j, k, A, B, C)) < 1e-10 * std::max(1.0, std::abs(v)));
        }
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto A0 = random_kernel(ctx, 2, 3 * s + 1000), A1 = random_kernel(ctx, 2, 3 * s + 1001),
             A2 = random_kernel(ctx, 2, 3 * s + 1002);
        auto rep = cyclic_cjk(1 + s % 4, 1 + (s / 4) % 4, A0, A1, A2);
        CHECK(rep.cyclicity_defect < 1e-10);
    }
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto A0 = random_kernel(ctx, 1, 4 * s + 2000), A1 = random_kernel(ctx, 2, 4 * s + 2001),
             A2 = random_kernel(ctx, 1, 4 * s + 2002), A3 = random_kernel(ctx, 2, 4 * s + 2003);
        CHECK(cyclic_cjk(1, 3, A0, A1, A2, A3).hochschild_defect < 1e-10);
        CHECK(cyclic_cjk(2, 3, A0, A1, A2, A3).hochschild_defect < 1e-10);
    }
}

TEST_CASE("conductance and Chern cocycles", "[twisted_algebra]") {
    auto ctx = context(1.7);
    auto e = TwistedKernel::unit(ctx);
    auto A = random_kernel(ctx, 2, 20), B = random_kernel(ctx, 2, 21), C = random_kernel(ctx, 2, 22),
         D = random_kernel(ctx, 2, 23);
    CHECK(tau_K(e, e, e) == cplx(0.0));
    cplx tk = tau_K(A, B, C);
    cplx lam(0.7, 0.4);
    CHECK(std::abs(tau_K(A * lam, B, C) - lam * tk) < 1e-12 * std::abs(tk));
    cplx oracle = kappa(2) * (cyclic_cjk(1, 3, A, B, C).value + cyclic_cjk(2, 4, A, B, C).value);
    CHECK(std::abs(tk - oracle) < 1e-12 * std::abs(tk));

    // the unit weight is the trace of the triple product
    cplx unit = weighted_trilinear(weights::unit(), A, B, C);
    cplx tr3 = trace(convolve(convolve(A, B), C));
    CHECK(std::abs(unit - tr3) < 1e-12 * std::abs(tr3));
    CHECK(tau_chern(TwistedKernel::delta(ctx, 0, 2.0), e, C) == cplx(0.0));
    CHECK(tau_chern(A, e, e * cplx(3.0)) == cplx(0.0));

    Trilinear chern = [](const TwistedKernel& a, const TwistedKernel& b, const TwistedKernel& c) {
        return tau_chern(a, b, c);
    };
    Trilinear kubo = [](const TwistedKernel& a, const TwistedKernel& b, const TwistedKernel& c) {
        return tau_K(a, b, c);
    };
    CHECK(cyclicity_defect(chern, A, B, C) < 1e-8);
    CHECK(cyclicity_defect(kubo, A, B, C) < 1e-8);
    auto A1 = random_kernel(ctx, 1, 24), C1 = random_kernel(ctx, 1, 25);
    CHECK(std::abs(hochschild_b(chern, A1, B, C1, D)) < 1e-8);
    CHECK(std::abs(hochschild_b(kubo, A1, B, C1, D)) < 1e-8);
}

TEST_CASE("Hochschild boundary of a bilinear functional", "[twisted_algebra]") {
    auto ctx = context(1.7);
    std::function<double(const MoebiusMap&)> h = [](const MoebiusMap& m) {
        double d = geodesic_distance(kI, m.apply(kI));
        return d * d;
    };
    auto A = random_kernel(ctx, 2, 30), B = random_kernel(ctx, 2, 31), C = random_kernel(ctx, 1, 32);
    Bilinear psi = [h](const TwistedKernel& x, const TwistedKernel& y) { return weighted_bilinear(h, x, y); };
    cplx lhs = hochschild_b(psi, A, B, C);
    cplx rhs = weighted_trilinear(bilinear_coboundary_weight(h), A, B, C);
    CHECK(std::abs(lhs - rhs) < 1e-11 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("relator fan bridges the Chern and conductance cocycles", "[twisted_algebra]") {
    auto ctx = context(1.7, 1);
    Trilinear chern = [](const TwistedKernel& a, const TwistedKernel& b, const TwistedKernel& c) {
        return tau_chern(a, b, c);
    };
    Trilinear kubo = [](const TwistedKernel& a, const TwistedKernel& b, const TwistedKernel& c) {
        return tau_K(a, b, c);
    };
    double fc = relator_fan_evaluation(chern, ctx), fk = relator_fan_evaluation(kubo, ctx);
    CHECK(std::abs(fc - 4 * kPi) < 1e-6);
    CHECK(std::abs(fc / (-fk / (2 * kappa(2))) - kappa(2)) < 1e-6);
}
