#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "jacobi.hpp"

namespace hyperhall {

// Shared data of a twisted group algebra: an element table whose first
// entries form a Cayley ball (id 0 is the identity) and the multiplier.
// Products are interned into the table on demand, so a context must not be
// used from several threads at once.
class TwistedContext {
public:
    TwistedContext(const CayleyBall& ball, MagneticField f)
        : table_(ball.table), ball_(ball), mult_(ball.group(), f) {}

    static std::shared_ptr<TwistedContext> make(GroupPtr grp, double theta, int R) {
        return std::make_shared<TwistedContext>(ball_enumerate(std::move(grp), R), MagneticField(theta));
    }

    ElementTable& table() { return *table_; }
    const ElementTable& table() const { return *table_; }
    const CayleyBall& ball() const { return ball_; }
    const Multiplier& multiplier() const { return mult_; }
    const GroupPtr& group() const { return table_->group(); }
    double theta() const { return mult_.theta(); }
    int rank() const { return group()->rank(); }

    /// sigma(x,y) = holonomy(x^-1 u, u, yu); interns xy and x^-1.
    cplx sigma(int i, int j) {
        std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
        auto it = sigma_cache_.find(key);
        if (it != sigma_cache_.end()) return it->second;
        table_->product(i, j);
        int ii = table_->inverse(i);
        cplx s = mult_.sigma_points(table_->point(ii), table_->point(j));
        sigma_cache_.emplace(key, s);
        return s;
    }

private:
    TablePtr table_;
    CayleyBall ball_;
    Multiplier mult_;
    std::unordered_map<std::uint64_t, cplx> sigma_cache_;
};

using ContextPtr = std::shared_ptr<TwistedContext>;

/// Finitely supported function on the group, keyed by table id.
class TwistedKernel {
public:
    TwistedKernel() = default;
    explicit TwistedKernel(ContextPtr ctx) : ctx_(std::move(ctx)) {}

    static TwistedKernel delta(ContextPtr ctx, int id, cplx v = 1.0) {
        TwistedKernel k(std::move(ctx));
        k.entries_[id] = v;
        return k;
    }
    static TwistedKernel unit(ContextPtr ctx) { return delta(std::move(ctx), 0); }

    const ContextPtr& context() const { return ctx_; }
    const std::map<int, cplx>& entries() const { return entries_; }
    std::map<int, cplx>& entries() { return entries_; }

    cplx at(int id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? cplx(0.0) : it->second;
    }
    void set(int id, cplx v) { entries_[id] = v; }
    void add(int id, cplx v) { entries_[id] += v; }

    TwistedKernel operator+(const TwistedKernel& o) const {
        check_same(o);
        TwistedKernel r = *this;
        for (auto [id, v] : o.entries_) r.entries_[id] += v;
        return r;
    }
    TwistedKernel operator-(const TwistedKernel& o) const { return *this + o * cplx(-1.0); }
    TwistedKernel operator*(cplx s) const {
        TwistedKernel r = *this;
        for (auto& [id, v] : r.entries_) v *= s;
        return r;
    }

    double max_abs_diff(const TwistedKernel& o) const {
        double d = 0;
        for (auto [id, v] : entries_) d = std::max(d, std::abs(v - o.at(id)));
        for (auto [id, v] : o.entries_) d = std::max(d, std::abs(v - at(id)));
        return d;
    }
    double norm1() const {
        double s = 0;
        for (auto [id, v] : entries_) s += std::abs(v);
        return s;
    }

    void check_same(const TwistedKernel& o) const {
        if (ctx_ != o.ctx_) throw std::invalid_argument("TwistedKernel: kernels from different contexts");
    }

private:
    ContextPtr ctx_;
    std::map<int, cplx> entries_;
};

/// (A*B)(g) = sum_{g1 g2 = g} A(g1) B(g2) sigma(g1,g2)
inline TwistedKernel convolve(const TwistedKernel& A, const TwistedKernel& B) {
    A.check_same(B);
    auto& ctx = *A.context();
    TwistedKernel r(A.context());
    for (auto [i, a] : A.entries())
        for (auto [j, b] : B.entries()) {
            int k = ctx.table().product(i, j);
            r.add(k, a * b * ctx.sigma(i, j));
        }
    return r;
}

/// A*(g) = conj(A(g^-1)) conj(sigma(g, g^-1))
inline TwistedKernel star(const TwistedKernel& A) {
    auto& ctx = *A.context();
    TwistedKernel r(A.context());
    for (auto [i, a] : A.entries()) {
        int gi = ctx.table().inverse(i);
        r.set(gi, std::conj(a) * std::conj(ctx.sigma(gi, i)));
    }
    return r;
}

inline cplx trace(const TwistedKernel& A) { return A.at(0); }

/// (delta_j A)(g) = i abel_j(g) A(g), j = 1..2g
inline TwistedKernel derivation_delta(int j, const TwistedKernel& A) {
    const auto& ctx = *A.context();
    if (j < 1 || j > ctx.rank()) throw std::out_of_range("derivation_delta: index out of range");
    TwistedKernel r(A.context());
    for (auto [i, a] : A.entries()) r.set(i, kI * static_cast<double>(ctx.table()[i].abel[j - 1]) * a);
    return r;
}

// One term g1 g2 g3 = e of a trilinear sum.
struct Triple {
    int i1, i2, i3;
    const GroupElement* g1;
    const GroupElement* g2;
    const GroupElement* g3;
    MoebiusMap m12;  // g1 g2
    cplx q1, q2;     // g1^-1 u, g2 u
    double area;     // oriented area of (u, g1 u, g1 g2 u) = area of (q1, u, q2)
};
using TripleWeight = std::function<double(const Triple&)>;

/// T_w(A0,A1,A2) = sum_{g1 g2 g3 = e} w A0(g1) A1(g2) A2(g3) sigma(g1,g2) sigma(g1 g2, g3)
/// for several weights in a single pass.
inline std::vector<cplx> weighted_trilinear(const std::vector<TripleWeight>& ws, const TwistedKernel& A0,
                                            const TwistedKernel& A1, const TwistedKernel& A2) {
    A0.check_same(A1);
    A0.check_same(A2);
    const auto& ctx = *A0.context();
    const auto& tab = ctx.table();
    const cplx u = ctx.group()->base_point();
    const MagneticField f = ctx.multiplier().field();
    std::vector<std::pair<int, cplx>> e1(A1.entries().begin(), A1.entries().end());
    std::vector<cplx> out(ws.size(), 0.0);
    std::vector<cplx> partial(ws.size());
    for (auto [i1, a0] : A0.entries()) {
        const GroupElement& g1 = tab[i1];
        // translated by g1^-1 the triangle keeps its vertices near u
        const cplx q1 = i1 == 0 ? u : g1.matrix.inverse().apply(u);
        std::fill(partial.begin(), partial.end(), cplx(0.0));
        for (auto [i2, a1] : e1) {
            const GroupElement& g2 = tab[i2];
            MoebiusMap m12 = g1.matrix * g2.matrix;
            auto i3 = tab.find(m12.inverse());
            if (!i3) continue;
            cplx a2 = A2.at(*i3);
            if (a2 == 0.0) continue;
            const cplx q2 = tab.point(i2);
            const cplx v1 = *i3 == 0 ? q2 : q1;  // g1 g2 = e: degenerate
            double area = triangle_area(v1, u, q2);
            // sigma(g1,g2) sigma(g1 g2, g3), the second factor is 1 since g1 g2 g3 = e
            cplx phase = holonomy(f, v1, u, q2);
            Triple t{i1, i2, *i3, &g1, &g2, &tab[*i3], m12, v1, q2, area};
            cplx base = a0 * a1 * a2 * phase;
            for (size_t w = 0; w < ws.size(); ++w) partial[w] += ws[w](t) * base;
        }
        for (size_t w = 0; w < ws.size(); ++w) out[w] += partial[w];
    }
    return out;
}

inline cplx weighted_trilinear(const TripleWeight& w, const TwistedKernel& A0, const TwistedKernel& A1,
                               const TwistedKernel& A2) {
    return weighted_trilinear(std::vector<TripleWeight>{w}, A0, A1, A2)[0];
}

namespace weights {
inline TripleWeight unit() {
    return [](const Triple&) { return 1.0; };
}
inline TripleWeight area() {
    return [](const Triple& t) { return t.area; };
}
/// Weight of c_{j,k} = tr(A0 (d_j A1 d_k A2 - d_k A1 d_j A2)).
inline TripleWeight cjk(int j, int k) {
    return [j, k](const Triple& t) {
        const auto& a2 = t.g2->abel;
        const auto& a3 = t.g3->abel;
        return -static_cast<double>(a2[j - 1] * a3[k - 1] - a2[k - 1] * a3[j - 1]);
    };
}
/// kappa sum_j c_{j,j+g} collapsed into one weight: -kappa s(abel g2, abel g3).
inline TripleWeight kubo(int genus) {
    const double kap = kappa(genus);
    return [kap](const Triple& t) {
        return -kap * static_cast<double>(symplectic_s(t.g2->abel, t.g3->abel));
    };
}
/// Euclidean cocycle on (g1, g2).
inline TripleWeight symp() {
    return [](const Triple& t) {
        std::vector<int> a12(t.g1->abel.size());
        for (size_t i = 0; i < a12.size(); ++i) a12[i] = t.g1->abel[i] + t.g2->abel[i];
        return 0.5 * static_cast<double>(symplectic_s(t.g1->abel, a12));
    };
}
}  // namespace weights

struct CyclicCochainReport {
    cplx value;
    double cyclicity_defect = 0;
    double hochschild_defect = 0;
};

using Trilinear = std::function<cplx(const TwistedKernel&, const TwistedKernel&, const TwistedKernel&)>;
using Bilinear = std::function<cplx(const TwistedKernel&, const TwistedKernel&)>;

/// bc(A0,A1,A2,A3) = c(A0A1,A2,A3) - c(A0,A1A2,A3) + c(A0,A1,A2A3) - c(A3A0,A1,A2)
inline cplx hochschild_b(const Trilinear& c, const TwistedKernel& A0, const TwistedKernel& A1,
                         const TwistedKernel& A2, const TwistedKernel& A3) {
    return c(convolve(A0, A1), A2, A3) - c(A0, convolve(A1, A2), A3) + c(A0, A1, convolve(A2, A3)) -
           c(convolve(A3, A0), A1, A2);
}

/// b psi(A0,A1,A2) = psi(A0A1,A2) - psi(A0,A1A2) + psi(A2A0,A1)
inline cplx hochschild_b(const Bilinear& psi, const TwistedKernel& A0, const TwistedKernel& A1,
                         const TwistedKernel& A2) {
    return psi(convolve(A0, A1), A2) - psi(A0, convolve(A1, A2)) + psi(convolve(A2, A0), A1);
}

inline double cyclicity_defect(const Trilinear& c, const TwistedKernel& A0, const TwistedKernel& A1,
                               const TwistedKernel& A2) {
    return std::abs(c(A0, A1, A2) - c(A2, A0, A1));
}

inline Trilinear cjk_functional(int j, int k) {
    return [j, k](const TwistedKernel& a, const TwistedKernel& b, const TwistedKernel& c) {
        return weighted_trilinear(weights::cjk(j, k), a, b, c);
    };
}

inline CyclicCochainReport cyclic_cjk(int j, int k, const TwistedKernel& A0, const TwistedKernel& A1,
                                      const TwistedKernel& A2,
                                      const std::optional<TwistedKernel>& A3 = std::nullopt) {
    const int r = A0.context()->rank();
    if (j < 1 || j > r || k < 1 || k > r) throw std::out_of_range("cyclic_cjk: index out of range");
    auto c = cjk_functional(j, k);
    CyclicCochainReport rep;
    rep.value = c(A0, A1, A2);
    rep.cyclicity_defect = std::abs(rep.value - c(A2, A0, A1));
    if (A3) rep.hochschild_defect = std::abs(hochschild_b(c, A0, A1, A2, *A3));
    return rep;
}

/// kappa sum_{j=1..g} c_{j,j+g}(A0,A1,A2)
inline cplx tau_K(const TwistedKernel& A0, const TwistedKernel& A1, const TwistedKernel& A2) {
    return weighted_trilinear(weights::kubo(A0.context()->group()->genus), A0, A1, A2);
}

/// Area-weighted cocycle: weight = oriented area of (u, g1 u, g1 g2 u).
inline cplx tau_chern(const TwistedKernel& A0, const TwistedKernel& A1, const TwistedKernel& A2) {
    return weighted_trilinear(weights::area(), A0, A1, A2);
}

/// psi_h(B0,B1) = sum_g h(g) B0(g) B1(g^-1) sigma(g, g^-1)
inline cplx weighted_bilinear(const std::function<double(const MoebiusMap&)>& h, const TwistedKernel& B0,
                              const TwistedKernel& B1) {
    B0.check_same(B1);
    auto& ctx = *B0.context();
    cplx s = 0;
    for (auto [i, b0] : B0.entries()) {
        auto gi = ctx.table().find(ctx.table()[i].matrix.inverse());
        if (!gi) continue;
        cplx b1 = B1.at(*gi);
        if (b1 == 0.0) continue;
        s += h(ctx.table()[i].matrix) * b0 * b1 * ctx.sigma(i, *gi);
    }
    return s;
}

/// Weight w(g1,g2) = h(g1 g2) - h(g1) + h(g2^-1) with b psi_h = T_w.
inline TripleWeight bilinear_coboundary_weight(std::function<double(const MoebiusMap&)> h) {
    return [h](const Triple& t) { return h(t.m12) - h(t.g1->matrix) + h(t.g2->matrix.inverse()); };
}

/// Uniform entries in [-1,1] + i[-1,1] on the radius-R ball.
inline TwistedKernel random_kernel(ContextPtr ctx, int R, std::uint64_t seed) {
    if (R > ctx->ball().radius) throw std::invalid_argument("random_kernel: radius exceeds context ball");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TwistedKernel k(ctx);
    size_t n = R + 1 < static_cast<int>(ctx->ball().shell_offset.size())
                   ? ctx->ball().shell_offset[R + 1]
                   : ctx->ball().size();
    for (size_t i = 0; i < n; ++i) {
        double re = u(rng), im = u(rng);
        k.set(static_cast<int>(i), cplx(re, im));
    }
    return k;
}

/// Evaluates a trilinear functional on the relator fan: for each k the delta
/// kernels at p_k, l_{k+1}, p_{k+1}^-1, divided by the unweighted value.
/// For an area-type weight this reproduces the fan pairing of the weight.
inline double relator_fan_evaluation(const Trilinear& c, ContextPtr ctx) {
    auto grp = ctx->group();
    auto rel = grp->relator();
    auto& tab = ctx->table();
    double sum = 0;
    GroupElement prefix = GroupElement::identity(grp);
    for (size_t k = 0; k + 1 < rel.size(); ++k) {
        prefix = prefix * GroupElement::generator(grp, rel[k]);
        GroupElement l = GroupElement::generator(grp, rel[k + 1]);
        int ip = tab.intern(prefix), il = tab.intern(l), in = tab.intern((prefix * l).inverse());
        auto A0 = TwistedKernel::delta(ctx, ip), A1 = TwistedKernel::delta(ctx, il),
             A2 = TwistedKernel::delta(ctx, in);
        cplx base = weighted_trilinear(weights::unit(), A0, A1, A2);
        sum += (c(A0, A1, A2) / base).real();
    }
    return sum;
}

}  // namespace hyperhall
