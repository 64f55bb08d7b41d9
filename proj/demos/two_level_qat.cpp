// Adiabatic error of the two-level sweep against the 1/tau bound.
#include <hyperhall/hyperhall.hpp>

#include <cstdio>

using namespace hyperhall;

int main() {
    auto rep = qat_bound_check(two_level_family(), {10, 20, 40, 80, 160});
    std::printf("bound constant %.4f\n", rep.bound_constant);
    std::printf("%8s %12s %12s %12s\n", "tau", "error", "bound", "tau*error");
    for (size_t k = 0; k < rep.tau.size(); ++k)
        std::printf("%8.0f %12.4e %12.4e %12.4f\n", rep.tau[k], rep.lhs[k], rep.rhs[k], rep.scaled[k]);
}
