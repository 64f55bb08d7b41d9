#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace hyperhall {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

enum class Model { disk, half_plane };

/// Cayley transform, upper half-plane -> unit disk.
inline cplx cayley(cplx zeta) { return (zeta - kI) / (zeta + kI); }
/// Inverse Cayley transform, unit disk -> upper half-plane.
inline cplx cayley_inv(cplx z) { return kI * (1.0 + z) / (1.0 - z); }

class HyperbolicPoint {
public:
    HyperbolicPoint() = default;

    static HyperbolicPoint half_plane(cplx zeta) {
        if (!std::isfinite(zeta.real()) || !(zeta.imag() > 0.0) || !std::isfinite(zeta.imag()))
            throw DomainError("half-plane point must have Im > 0");
        return HyperbolicPoint(zeta, Model::half_plane);
    }
    static HyperbolicPoint disk(cplx z) {
        if (!(std::abs(z) < 1.0)) throw DomainError("disk point must have |z| < 1");
        return HyperbolicPoint(z, Model::disk);
    }
    static HyperbolicPoint make(cplx c, Model m) {
        return m == Model::disk ? disk(c) : half_plane(c);
    }

    cplx coord() const { return c_; }
    Model model() const { return m_; }

    cplx half() const { return m_ == Model::half_plane ? c_ : cayley_inv(c_); }
    cplx disk_coord() const { return m_ == Model::disk ? c_ : cayley(c_); }

    HyperbolicPoint in(Model m) const {
        if (m == m_) return *this;
        return m == Model::disk ? disk(disk_coord()) : half_plane(half());
    }

private:
    HyperbolicPoint(cplx c, Model m) : c_(c), m_(m) {}
    cplx c_{0.0, 1.0};
    Model m_ = Model::half_plane;
};

// Real 2x2 matrix of determinant one acting on the half-plane.
// The determinant check is relative to |ad|+|bc| because products of many
// hyperbolic generators have large entries.
class MoebiusMap {
public:
    double a = 1, b = 0, c = 0, d = 1;

    MoebiusMap() = default;
    MoebiusMap(double a_, double b_, double c_, double d_, bool check = true)
        : a(a_), b(b_), c(c_), d(d_) {
        if (check) {
            double scale = std::max(1.0, std::abs(a * d) + std::abs(b * c));
            if (!(std::abs(a * d - b * c - 1.0) <= 1e-12 * scale))
                throw std::invalid_argument("MoebiusMap: ad - bc != 1");
        }
    }

    static MoebiusMap identity() { return {}; }

    /// Matrix in SU(1,1) acting on the disk, converted to SL(2,R) by C^{-1} g C.
    static MoebiusMap from_su11(const Eigen::Matrix2cd& g) {
        Eigen::Matrix2cd C;
        C << 1.0, -kI, 1.0, kI;
        Eigen::Matrix2cd r = C.inverse() * g * C;
        double im = r.imag().cwiseAbs().maxCoeff();
        if (im > 1e-9 * std::max(1.0, r.cwiseAbs().maxCoeff()))
            throw std::invalid_argument("from_su11: matrix is not in SU(1,1)");
        return {r(0, 0).real(), r(0, 1).real(), r(1, 0).real(), r(1, 1).real()};
    }
    Eigen::Matrix2cd to_su11() const {
        Eigen::Matrix2cd C, g;
        C << 1.0, -kI, 1.0, kI;
        g << a, b, c, d;
        return C * g * C.inverse();
    }

    cplx apply(cplx zeta) const { return (a * zeta + b) / (c * zeta + d); }

    MoebiusMap operator*(const MoebiusMap& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d, false};
    }
    MoebiusMap inverse() const { return {d, -b, -c, a, false}; }
    double trace() const { return a + d; }
    double det() const { return a * d - b * c; }
    double max_abs() const {
        return std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
    }
};

/// Distance between matrices up to overall sign.
inline double projective_distance(const MoebiusMap& g, const MoebiusMap& h) {
    auto dist = [](const MoebiusMap& x, const MoebiusMap& y, double s) {
        return std::max(std::max(std::abs(x.a - s * y.a), std::abs(x.b - s * y.b)),
                        std::max(std::abs(x.c - s * y.c), std::abs(x.d - s * y.d)));
    };
    return std::min(dist(g, h, 1.0), dist(g, h, -1.0));
}

struct MagneticField {
    double theta = 0.0;
    explicit MagneticField(double t = 0.0) : theta(t) {
        if (!std::isfinite(t)) throw std::invalid_argument("MagneticField: theta must be finite");
    }
};

inline HyperbolicPoint moebius_apply(const MoebiusMap& g, const HyperbolicPoint& p) {
    cplx w = g.apply(p.half());
    if (!(w.imag() > 0.0)) throw DomainError("moebius_apply: image left the half-plane");
    HyperbolicPoint q = HyperbolicPoint::half_plane(w);
    return q.in(p.model());
}

inline double geodesic_distance(cplx z, cplx w) {
    return 2.0 * std::asinh(std::abs(z - w) / (2.0 * std::sqrt(z.imag() * w.imag())));
}
inline double geodesic_distance(const HyperbolicPoint& p, const HyperbolicPoint& q) {
    return geodesic_distance(p.half(), q.half());
}

namespace detail {
// Disk coordinate of x in the model centred at p; |value| = tanh(d(p,x)/2).
inline cplx centred(cplx p, cplx x) { return (x - p) / (x - std::conj(p)); }
inline constexpr double kCoincide = 1e-13;
}  // namespace detail

/// Oriented area of the geodesic triangle (v,w,z), half-plane coordinates.
/// Positive when the vertices run counterclockwise.
inline double triangle_area(cplx v, cplx w, cplx z) {
    cplx vw = detail::centred(v, w), vz = detail::centred(v, z);
    if (std::abs(vw) < detail::kCoincide || std::abs(vz) < detail::kCoincide ||
        std::abs(detail::centred(w, z)) < detail::kCoincide)
        return 0.0;
    double a1 = std::arg(vz / vw);
    double a2 = std::arg(detail::centred(w, v) / detail::centred(w, z));
    double a3 = std::arg(detail::centred(z, w) / detail::centred(z, v));
    double defect = kPi - std::abs(a1) - std::abs(a2) - std::abs(a3);
    if (a1 == 0.0 || std::abs(defect) < 1e-15) return 0.0;
    return a1 > 0 ? defect : -defect;
}
inline double triangle_area_oriented(const HyperbolicPoint& v, const HyperbolicPoint& w,
                                     const HyperbolicPoint& z) {
    return triangle_area(v.half(), w.half(), z.half());
}

/// Arg((z - conj w)/(w - conj z)), the exponent of the transport phase per unit field.
inline double transport_angle(cplx z, cplx w) {
    return std::arg((z - std::conj(w)) / (w - std::conj(z)));
}

inline cplx parallel_transport(const MagneticField& f, cplx z, cplx w) {
    return std::polar(1.0, f.theta * transport_angle(z, w));
}
inline cplx parallel_transport(const MagneticField& f, const HyperbolicPoint& z,
                               const HyperbolicPoint& w) {
    return parallel_transport(f, z.half(), w.half());
}

/// Phase exponent of conj(tau(v,z)) tau(v,w) tau(w,z); equals the oriented area.
inline double holonomy_angle(cplx v, cplx w, cplx z) {
    if (v == w || w == z || v == z) return 0.0;
    return -transport_angle(v, z) + transport_angle(v, w) + transport_angle(w, z);
}

inline cplx holonomy(const MagneticField& f, cplx v, cplx w, cplx z) {
    return std::polar(1.0, f.theta * holonomy_angle(v, w, z));
}
inline cplx holonomy(const MagneticField& f, const HyperbolicPoint& v, const HyperbolicPoint& w,
                     const HyperbolicPoint& z) {
    return holonomy(f, v.half(), w.half(), z.half());
}

}  // namespace hyperhall
