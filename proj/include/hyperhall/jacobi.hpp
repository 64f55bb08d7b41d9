#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fuchsian.hpp"

namespace hyperhall {

/// s(u,v) = sum_j u_j v_{j+g} - u_{j+g} v_j on R^{2g}.
template <class T>
T symplectic_s(const std::vector<T>& u, const std::vector<T>& v) {
    if (u.size() != v.size() || u.size() % 2 != 0 || u.empty())
        throw std::invalid_argument("symplectic_s: vectors must have equal even length");
    const size_t g = u.size() / 2;
    T s = 0;
    for (size_t j = 0; j < g; ++j) s += u[j] * v[j + g] - u[j + g] * v[j];
    return s;
}

/// Twice the Euclidean cocycle, an integer: s(abel x, abel xy).
inline long long cocycle_symp_twice(const GroupElement& x, const GroupElement& y) {
    std::vector<long long> ax(x.abel.begin(), x.abel.end()), axy(x.abel.size());
    for (size_t i = 0; i < axy.size(); ++i) axy[i] = x.abel[i] + y.abel[i];
    return symplectic_s(ax, axy);
}

/// Symplectic area of the lattice triangle (0, abel x, abel xy).
inline double cocycle_symp(const GroupElement& x, const GroupElement& y) {
    return 0.5 * static_cast<double>(cocycle_symp_twice(x, y));
}

/// Oriented hyperbolic area of (u, xu, xyu), computed on its x^-1 translate.
inline double cocycle_hyp(const GroupElement& x, const GroupElement& y) {
    const cplx u = x.group->base_point();
    return triangle_area(x.matrix.inverse().apply(u), u, y.point());
}

using GroupTwoCochain = std::function<double(const GroupElement&, const GroupElement&)>;

/// Pairing with the fundamental class through the fan triangulation of the
/// relator polygon: sum_{k=1}^{4g-1} c(p_k, l_{k+1}).
inline double fan_pairing(const GroupTwoCochain& c, const GroupPtr& grp) {
    auto rel = grp->relator();
    double sum = 0;
    GroupElement prefix = GroupElement::identity(grp);
    for (size_t k = 0; k + 1 < rel.size(); ++k) {
        prefix = prefix * GroupElement::generator(grp, rel[k]);
        sum += c(prefix, GroupElement::generator(grp, rel[k + 1]));
    }
    return sum;
}

inline double kappa(int g) {
    if (g < 2) throw std::invalid_argument("kappa: genus must be >= 2");
    return 4.0 * kPi * (g - 1) / g;
}

struct CoboundaryResult {
    double residual = 0;  // |c - dq| / |c|
    double cochain_norm = 0;
    std::vector<double> q;  // indexed by ball id, q[0] = 0
    size_t constraints = 0;
    int iterations = 0;
    // |q| ~ c1 l + c2 l^2 over the ball
    double growth_c1 = 0, growth_c2 = 0, growth_fit_residual = 0;
};

/// Least squares min_q sum |c(x,y) - q(x) + q(xy) - q(y)|^2 over all pairs
/// with x, y, xy in the ball, q(e) = 0. CGLS from zero.
inline CoboundaryResult coboundary_residual(const GroupTwoCochain& c, const CayleyBall& ball,
                                            double tol = 1e-13, int max_iter = 0) {
    if (ball.radius < 1) throw std::invalid_argument("coboundary_residual: need R >= 1");
    const int n = static_cast<int>(ball.size());
    struct Row {
        int i, j, k;
    };
    std::vector<Row> rows;
    std::vector<double> rhs;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (auto k = ball.product_in_ball(i, j)) {
                rows.push_back({i, j, *k});
                rhs.push_back(c(ball[i], ball[j]));
            }
    if (rows.empty()) throw std::invalid_argument("coboundary_residual: empty constraint set");

    const size_t m = rows.size();
    // (A q)_r = -q_i + q_k - q_j with q_0 pinned to zero
    auto apply = [&](const std::vector<double>& q, std::vector<double>& out) {
        for (size_t r = 0; r < m; ++r) out[r] = -q[rows[r].i] + q[rows[r].k] - q[rows[r].j];
    };
    auto apply_t = [&](const std::vector<double>& y, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (size_t r = 0; r < m; ++r) {
            out[rows[r].i] -= y[r];
            out[rows[r].k] += y[r];
            out[rows[r].j] -= y[r];
        }
        out[0] = 0.0;
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };

    CoboundaryResult res;
    res.constraints = m;
    res.cochain_norm = std::sqrt(dot(rhs, rhs));
    std::vector<double> x(n, 0.0), r(m), s(n), p(n), t(m);
    for (size_t k = 0; k < m; ++k) r[k] = -rhs[k];
    apply_t(r, s);
    p = s;
    double gamma = dot(s, s);
    const double stop = tol * std::sqrt(gamma);
    if (max_iter <= 0) max_iter = 20 * n + 100;
    int it = 0;
    while (it < max_iter && std::sqrt(gamma) > stop && gamma > 0) {
        apply(p, t);
        double tt = dot(t, t);
        if (tt == 0) break;
        double alpha = gamma / tt;
        for (int k = 0; k < n; ++k) x[k] += alpha * p[k];
        for (size_t k = 0; k < m; ++k) r[k] -= alpha * t[k];
        apply_t(r, s);
        double gnew = dot(s, s);
        double beta = gnew / gamma;
        gamma = gnew;
        for (int k = 0; k < n; ++k) p[k] = s[k] + beta * p[k];
        ++it;
    }
    res.iterations = it;
    apply(x, t);
    double rr = 0;
    for (size_t k = 0; k < m; ++k) rr += (rhs[k] + t[k]) * (rhs[k] + t[k]);
    res.residual = res.cochain_norm > 0 ? std::sqrt(rr) / res.cochain_norm : std::sqrt(rr);
    res.q = x;

    // growth fit |q| ~ c1 l + c2 l^2
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0, bb = 0;
    for (int k = 1; k < n; ++k) {
        double l = ball[k].length(), v = std::abs(x[k]);
        s11 += l * l;
        s12 += l * l * l;
        s22 += l * l * l * l;
        b1 += l * v;
        b2 += l * l * v;
        bb += v * v;
    }
    double det = s11 * s22 - s12 * s12;
    if (n > 1 && det > 0) {
        res.growth_c1 = (b1 * s22 - b2 * s12) / det;
        res.growth_c2 = (s11 * b2 - s12 * b1) / det;
        double fit = 0;
        for (int k = 1; k < n; ++k) {
            double l = ball[k].length();
            double e = std::abs(x[k]) - res.growth_c1 * l - res.growth_c2 * l * l;
            fit += e * e;
        }
        res.growth_fit_residual = bb > 0 ? std::sqrt(fit / bb) : 0.0;
    }
    return res;
}

}  // namespace hyperhall
