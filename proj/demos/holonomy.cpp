// Phase picked up around geodesic triangles of growing size versus
// exp(i theta area).
#include <hyperhall/hyperhall.hpp>

#include <cstdio>

using namespace hyperhall;

int main() {
    MagneticField f(1.5);
    std::printf("%8s %12s %12s %12s\n", "r", "area", "arg hol", "theta*area");
    for (double r : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        // equilateral triangle about the disk origin
        cplx v = cayley_inv(std::polar(r, 0.0)), w = cayley_inv(std::polar(r, 2 * kPi / 3)),
             z = cayley_inv(std::polar(r, 4 * kPi / 3));
        double a = triangle_area(v, w, z);
        std::printf("%8.2f %12.6f %12.6f %12.6f\n", r, a, std::arg(holonomy(f, v, w, z)),
                    std::remainder(f.theta * a, 2 * kPi));
    }
}
