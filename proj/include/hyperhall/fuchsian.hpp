#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypgeom.hpp"

namespace hyperhall {

// Letters are signed 1-based generator indices: 1..g are a_1..a_g,
// g+1..2g are b_1..b_g, negative values are inverses.
class SurfaceGroup {
public:
    int genus = 0;
    std::vector<MoebiusMap> gens;  // a_1..a_g, b_1..b_g
    std::vector<MoebiusMap> invs;

    int rank() const { return 2 * genus; }
    cplx base_point() const { return kI; }  // disk origin

    const MoebiusMap& letter(int l) const {
        if (l == 0 || std::abs(l) > rank()) throw std::out_of_range("letter out of range");
        return l > 0 ? gens[l - 1] : invs[-l - 1];
    }

    /// a_1 b_1 a_1^-1 b_1^-1 ... a_g b_g a_g^-1 b_g^-1
    std::vector<int> relator() const {
        std::vector<int> r;
        for (int i = 1; i <= genus; ++i) {
            r.insert(r.end(), {i, genus + i, -i, -(genus + i)});
        }
        return r;
    }

    MoebiusMap word_matrix(const std::vector<int>& w) const {
        MoebiusMap m;
        for (int l : w) m = m * letter(l);
        return m;
    }

    double relator_defect() const {
        return projective_distance(word_matrix(relator()), MoebiusMap::identity());
    }
};

using GroupPtr = std::shared_ptr<const SurfaceGroup>;

namespace detail {
inline Eigen::Matrix2cd su_rot(double phi) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::polar(1.0, phi / 2);
    m(1, 1) = std::polar(1.0, -phi / 2);
    return m;
}
inline Eigen::Matrix2cd su_trans(double t) {
    Eigen::Matrix2cd m;
    m << std::cosh(t / 2), std::sinh(t / 2), std::sinh(t / 2), std::cosh(t / 2);
    return m;
}
}  // namespace detail

/// Side pairings of the regular 4g-gon centred at the disk origin with all
/// vertex angles 2pi/4g. Side k has outward normal at angle -2pi k/4g; the
/// pairing taking side j to side k is rot(phi_k) trans(2h) rot(pi - phi_j).
inline GroupPtr build_genus_g_group(int g) {
    if (g < 2) throw std::invalid_argument("build_genus_g_group: genus must be >= 2");
    const int n = 4 * g;
    const double h = std::acosh(std::cos(kPi / n) / std::sin(kPi / n));
    auto phi = [n](int k) { return -2.0 * kPi * k / n; };
    auto pair = [&](int j, int k) -> Eigen::Matrix2cd {
        return detail::su_rot(phi(k)) * detail::su_trans(2 * h) * detail::su_rot(kPi - phi(j));
    };
    auto grp = std::make_shared<SurfaceGroup>();
    grp->genus = g;
    for (int i = 0; i < g; ++i) grp->gens.push_back(MoebiusMap::from_su11(pair(4 * i + 2, 4 * i)));
    for (int i = 0; i < g; ++i)
        grp->gens.push_back(MoebiusMap::from_su11(pair(4 * i + 1, 4 * i + 3)));
    for (const auto& m : grp->gens) grp->invs.push_back(m.inverse());
    return grp;
}

/// Free reduction of a word.
inline std::vector<int> reduce_word(const std::vector<int>& w) {
    std::vector<int> out;
    out.reserve(w.size());
    for (int l : w) {
        if (!out.empty() && out.back() == -l)
            out.pop_back();
        else
            out.push_back(l);
    }
    return out;
}

class GroupElement {
public:
    GroupPtr group;
    std::vector<int> word;
    MoebiusMap matrix;
    std::vector<int> abel;

    GroupElement() = default;

    static GroupElement identity(GroupPtr grp) {
        GroupElement e;
        e.abel.assign(grp->rank(), 0);
        e.group = std::move(grp);
        return e;
    }
    static GroupElement from_word(GroupPtr grp, const std::vector<int>& w) {
        GroupElement e = identity(grp);
        e.word = reduce_word(w);
        for (int l : e.word) {
            e.matrix = e.matrix * grp->letter(l);
            e.abel[std::abs(l) - 1] += l > 0 ? 1 : -1;
        }
        return e;
    }
    static GroupElement generator(GroupPtr grp, int l) { return from_word(std::move(grp), {l}); }

    int length() const { return static_cast<int>(word.size()); }
    cplx point() const { return matrix.apply(group->base_point()); }

    GroupElement operator*(const GroupElement& o) const {
        if (group != o.group) throw std::invalid_argument("GroupElement: mixed presentations");
        GroupElement r;
        r.group = group;
        std::vector<int> w = word;
        w.insert(w.end(), o.word.begin(), o.word.end());
        r.word = reduce_word(w);
        r.matrix = matrix * o.matrix;
        r.abel.resize(abel.size());
        for (size_t i = 0; i < abel.size(); ++i) r.abel[i] = abel[i] + o.abel[i];
        return r;
    }
    GroupElement inverse() const {
        GroupElement r;
        r.group = group;
        r.word.assign(word.rbegin(), word.rend());
        for (int& l : r.word) l = -l;
        r.matrix = matrix.inverse();
        r.abel.resize(abel.size());
        for (size_t i = 0; i < abel.size(); ++i) r.abel[i] = -abel[i];
        return r;
    }
    /// Deviation of the cached matrix from the product of the word's letters.
    double word_defect() const {
        return projective_distance(matrix, group->word_matrix(word)) / std::max(1.0, matrix.max_abs());
    }
};

// Tolerant lookup of group elements by matrix, identified up to sign.
class FingerprintIndex {
public:
    static constexpr double kQuantum = 1e-6;

    std::optional<int> find(const MoebiusMap& m) const {
        auto n = normalized(m);
        std::array<double, 4> q;
        std::array<std::int64_t, 4> k0, k1;
        for (int i = 0; i < 4; ++i) {
            q[i] = n[i] / kQuantum;
            k0[i] = std::llround(q[i]);
            double frac = q[i] - static_cast<double>(k0[i]);
            k1[i] = std::abs(frac) > 0.45 ? k0[i] + (frac > 0 ? 1 : -1) : k0[i];
        }
        for (int mask = 0; mask < 16; ++mask) {
            Key key;
            bool skip = false;
            for (int i = 0; i < 4; ++i) {
                bool alt = (mask >> i) & 1;
                if (alt && k1[i] == k0[i]) skip = true;
                key[i] = alt ? k1[i] : k0[i];
            }
            if (skip) continue;
            auto it = map_.find(key);
            if (it == map_.end()) continue;
            for (int id : it->second) {
                const MoebiusMap& s = mats_[id];
                if (projective_distance(s, m) < kQuantum * std::max(1.0, m.max_abs())) return id;
            }
        }
        return std::nullopt;
    }

    int insert(const MoebiusMap& m) {
        int id = static_cast<int>(mats_.size());
        mats_.push_back(m);
        auto n = normalized(m);
        Key key;
        for (int i = 0; i < 4; ++i) key[i] = std::llround(n[i] / kQuantum);
        map_[key].push_back(id);
        return id;
    }

    size_t size() const { return mats_.size(); }

    /// Sign normalization: the first entry with |x| > 1e-6 is made positive.
    static std::array<double, 4> normalized(const MoebiusMap& m) {
        std::array<double, 4> e{m.a, m.b, m.c, m.d};
        for (double x : e) {
            if (std::abs(x) > kQuantum) {
                if (x < 0)
                    for (double& y : e) y = -y;
                break;
            }
        }
        return e;
    }

private:
    using Key = std::array<std::int64_t, 4>;
    struct KeyHash {
        size_t operator()(const Key& k) const {
            std::uint64_t h = 1469598103934665603ull;
            for (auto v : k) {
                h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            }
            return static_cast<size_t>(h);
        }
    };
    std::unordered_map<Key, std::vector<int>, KeyHash> map_;
    std::vector<MoebiusMap> mats_;
};

// Interning table of group elements. Ids are stable; new elements are
// appended, so the first entries of a table built by ball_enumerate are the
// ball in breadth-first order.
class ElementTable {
public:
    explicit ElementTable(GroupPtr grp) : group_(std::move(grp)) {}

    const GroupPtr& group() const { return group_; }
    size_t size() const { return elems_.size(); }
    const GroupElement& operator[](int id) const { return elems_[id]; }
    cplx point(int id) const { return points_[id]; }

    std::optional<int> find(const MoebiusMap& m) const { return index_.find(m); }

    int intern(const GroupElement& e) {
        if (auto id = index_.find(e.matrix)) return *id;
        return append(e);
    }
    /// Appends without a lookup; caller guarantees the element is new.
    int append(const GroupElement& e) {
        int id = index_.insert(e.matrix);
        elems_.push_back(e);
        points_.push_back(e.point());
        return id;
    }

    std::optional<int> find_product(int i, int j) const {
        return index_.find(elems_[i].matrix * elems_[j].matrix);
    }
    int product(int i, int j) {
        if (auto id = find_product(i, j)) return *id;
        return append(elems_[i] * elems_[j]);
    }
    int inverse(int i) {
        if (auto id = index_.find(elems_[i].matrix.inverse())) return *id;
        return append(elems_[i].inverse());
    }

private:
    GroupPtr group_;
    std::vector<GroupElement> elems_;
    std::vector<cplx> points_;
    FingerprintIndex index_;
};

using TablePtr = std::shared_ptr<ElementTable>;

struct CayleyBall {
    TablePtr table;
    int radius = 0;
    size_t count = 0;                  // ball elements are ids 0..count-1
    std::vector<size_t> shell_offset;  // ids of word length r start at shell_offset[r]

    size_t size() const { return count; }
    const GroupElement& operator[](int id) const { return (*table)[id]; }
    const GroupPtr& group() const { return table->group(); }
    bool contains(int id) const { return id >= 0 && static_cast<size_t>(id) < count; }

    /// Id of x*y if it lies in the ball.
    std::optional<int> product_in_ball(int i, int j) const {
        auto id = table->find_product(i, j);
        if (id && contains(*id)) return id;
        return std::nullopt;
    }
    std::optional<int> find_in_ball(const MoebiusMap& m) const {
        auto id = table->find(m);
        if (id && contains(*id)) return id;
        return std::nullopt;
    }
};

inline constexpr size_t kDefaultElementBudget = 2'000'000;

/// Breadth-first enumeration of all distinct elements of word length <= R.
/// Within a shell, parents are taken in order and extended by the letters
/// a_1..a_g, b_1..b_g, then their inverses.
inline CayleyBall ball_enumerate(GroupPtr grp, int R, size_t budget = kDefaultElementBudget) {
    if (R < 0) throw std::invalid_argument("ball_enumerate: R must be >= 0");
    CayleyBall ball;
    ball.table = std::make_shared<ElementTable>(grp);
    ball.radius = R;
    ball.table->append(GroupElement::identity(grp));
    ball.shell_offset = {0, 1};
    std::vector<int> letters;
    for (int l = 1; l <= grp->rank(); ++l) letters.push_back(l);
    for (int l = 1; l <= grp->rank(); ++l) letters.push_back(-l);
    std::vector<GroupElement> gen;
    for (int l : letters) gen.push_back(GroupElement::generator(grp, l));

    for (int r = 1; r <= R; ++r) {
        size_t lo = ball.shell_offset[r - 1], hi = ball.shell_offset[r];
        for (size_t p = lo; p < hi; ++p) {
            const GroupElement parent = (*ball.table)[static_cast<int>(p)];
            int last = parent.word.empty() ? 0 : parent.word.back();
            for (size_t li = 0; li < letters.size(); ++li) {
                if (letters[li] == -last) continue;
                GroupElement child = parent * gen[li];
                if (ball.table->find(child.matrix)) continue;
                if (ball.table->size() >= budget)
                    throw ResourceError("ball_enumerate: element budget " + std::to_string(budget) +
                                        " exceeded at radius " + std::to_string(r));
                ball.table->append(child);
            }
        }
        ball.shell_offset.push_back(ball.table->size());
    }
    ball.shell_offset.pop_back();
    ball.count = ball.table->size();
    return ball;
}

/// Magnetic multiplier sigma(x,y) = holonomy(u, xu, xyu), evaluated on the
/// x^-1 translate (x^-1 u, u, yu) so that no vertex is farther from u than
/// max(|x|, |y|).
class Multiplier {
public:
    Multiplier(GroupPtr grp, MagneticField f) : group_(std::move(grp)), field_(f) {}

    const GroupPtr& group() const { return group_; }
    double theta() const { return field_.theta; }
    const MagneticField& field() const { return field_; }

    cplx sigma(const GroupElement& x, const GroupElement& y) const {
        if (x.group != group_ || y.group != group_)
            throw std::invalid_argument("Multiplier: element from another presentation");
        const cplx u = group_->base_point();
        return sigma_points(x.word.empty() ? u : x.matrix.inverse().apply(u), y.point());
    }
    /// sigma from the orbit points x^-1 u and yu.
    cplx sigma_points(cplx xinv_u, cplx yu) const {
        return holonomy(field_, xinv_u, group_->base_point(), yu);
    }

    /// phi(z,gamma) = hol(u, g^-1 u, g^-1 z) conj(tau(u,z)) tau(u, g^-1 z), half-plane z.
    cplx projective_phase(cplx z, const GroupElement& g) const {
        const cplx u = group_->base_point();
        MoebiusMap gi = g.matrix.inverse();
        cplx giu = gi.apply(u), giz = gi.apply(z);
        return holonomy(field_, u, giu, giz) * std::conj(parallel_transport(field_, u, z)) *
               parallel_transport(field_, u, giz);
    }
    cplx projective_phase(const HyperbolicPoint& z, const GroupElement& g) const {
        return projective_phase(z.half(), g);
    }

private:
    GroupPtr group_;
    MagneticField field_;
};

/// (U(g) psi)(z) = phi(z,g) psi(g^-1 z).
using Wavefunction = std::function<cplx(cplx)>;
inline Wavefunction apply_U(const Multiplier& m, const GroupElement& g, Wavefunction psi) {
    MoebiusMap gi = g.matrix.inverse();
    return [m, g, gi, psi](cplx z) { return m.projective_phase(z, g) * psi(gi.apply(z)); };
}

// U(g1)U(g2) = c(g1,g2) U(g1 g2). Measured: c = conj(sigma).
enum class ProjectiveConvention { sigma, sigma_bar };
inline constexpr ProjectiveConvention kProjectiveConvention = ProjectiveConvention::sigma_bar;

inline cplx projective_factor(const Multiplier& m, const GroupElement& x, const GroupElement& y,
                              ProjectiveConvention c = kProjectiveConvention) {
    cplx s = m.sigma(x, y);
    return c == ProjectiveConvention::sigma ? s : std::conj(s);
}

/// |U(g1)U(g2)psi(z) - c U(g1 g2)psi(z)| for psi = 1, i.e. the phase defect.
inline double projective_defect(const Multiplier& m, const GroupElement& x, const GroupElement& y,
                                cplx z, ProjectiveConvention c) {
    cplx lhs = m.projective_phase(z, x) * m.projective_phase(x.matrix.inverse().apply(z), y);
    cplx rhs = projective_factor(m, x, y, c) * m.projective_phase(z, x * y);
    return std::abs(lhs - rhs);
}

/// Decides the convention by sampling random pairs from the ball.
inline ProjectiveConvention detect_projective_convention(const Multiplier& m, const CayleyBall& ball,
                                                         int samples = 200,
                                                         std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, ball.size() - 1);
    std::uniform_real_distribution<double> unif(-0.9, 0.9);
    double ds = 0, db = 0;
    for (int k = 0; k < samples; ++k) {
        const auto& x = ball[static_cast<int>(pick(rng))];
        const auto& y = ball[static_cast<int>(pick(rng))];
        cplx zd(unif(rng) * 0.7, unif(rng) * 0.7);
        cplx z = cayley_inv(zd);
        ds = std::max(ds, projective_defect(m, x, y, z, ProjectiveConvention::sigma));
        db = std::max(db, projective_defect(m, x, y, z, ProjectiveConvention::sigma_bar));
    }
    return db <= ds ? ProjectiveConvention::sigma_bar : ProjectiveConvention::sigma;
}

}  // namespace hyperhall
