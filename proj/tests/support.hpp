#pragma once

#include <hyperhall/hyperhall.hpp>

#include <catch_amalgamated.hpp>

#include <random>

namespace testsupport {

using hyperhall::cplx;

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

    // Point of the disk with |z| < rmax, returned in half-plane coordinates.
    cplx half_point(double rmax = 0.9) {
        double r = rmax * std::sqrt(uniform(0, 1)), t = uniform(0, 2 * hyperhall::kPi);
        return hyperhall::cayley_inv(std::polar(r, t));
    }
    // k(t1) a(s) k(t2) in SL(2,R).
    hyperhall::MoebiusMap moebius(double smax = 2.0) {
        auto rot = [](double t) {
            return hyperhall::MoebiusMap(std::cos(t), -std::sin(t), std::sin(t), std::cos(t), false);
        };
        double s = uniform(-smax, smax);
        hyperhall::MoebiusMap a(std::exp(s / 2), 0, 0, std::exp(-s / 2), false);
        return rot(uniform(0, 2 * hyperhall::kPi)) * a * rot(uniform(0, 2 * hyperhall::kPi));
    }
};

}  // namespace testsupport
