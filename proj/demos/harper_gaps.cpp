// Gaps of the Harper operator on a genus-2 Cayley ball at a few field values.
#include <hyperhall/hyperhall.hpp>

#include <cstdio>

using namespace hyperhall;

int main(int argc, char** argv) {
    int R = argc > 1 ? std::atoi(argv[1]) : 2;
    auto grp = build_genus_g_group(2);
    auto ball = ball_enumerate(grp, R);
    std::printf("ball of radius %d: %zu elements\n", R, ball.size());
    for (double theta : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        auto rows = butterfly_sweep({theta}, ball);
        RVec ev(static_cast<Eigen::Index>(rows.size()));
        for (size_t i = 0; i < rows.size(); ++i) ev(static_cast<Eigen::Index>(i)) = rows[i].eigenvalue;
        std::printf("theta %.1f  spectrum [%.3f, %.3f]\n", theta, ev(0), ev(ev.size() - 1));
        for (const auto& g : find_gaps(ev, 0.2))
            std::printf("    gap (%.4f, %.4f) width %.4f, %d states below\n", g.lo, g.hi, g.width(), g.below);
    }
}
