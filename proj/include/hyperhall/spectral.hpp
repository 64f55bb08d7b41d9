#pragma once

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "linalg.hpp"
#include "twisted_algebra.hpp"

namespace hyperhall {

// ---------------------------------------------------------------- continuum

struct ComtetSpectrum {
    std::vector<double> discrete;
    double continuum_edge = 0.25;
};

/// Closed-form Landau levels (2k+1)|theta| - k(k+1), k < |theta| - 1/2, and the
/// continuum edge 1/4 + theta^2. These are eigenvalues of the full magnetic
/// Laplacian; see kComtetNormalization.
inline ComtetSpectrum comtet_levels(double theta) {
    const double t = std::abs(theta);
    ComtetSpectrum s;
    for (int k = 0; k < t - 0.5; ++k) s.discrete.push_back((2 * k + 1) * t - k * (k + 1.0));
    s.continuum_edge = 0.25 + t * t;
    return s;
}

// Eigenvalues of H = (1/2)(d - i eta)*(d - i eta) times this factor give the
// closed-form levels. Fixed by the radial oracle below (ratio 2 for every
// theta tested).
inline constexpr double kComtetNormalization = 2.0;

/// Lowest eigenvalues of H restricted to angular momentum m on the geodesic
/// disk of radius R about the base point (Dirichlet), cell-centred finite
/// differences in r with N cells.
inline std::vector<double> radial_landau_levels(double theta, int m, double R, int N, int count) {
    if (N < 8 || R <= 0) throw std::invalid_argument("radial_landau_levels: bad grid");
    const double h = R / (N + 0.5);
    Eigen::VectorXd diag(N), off(N - 1);
    for (int i = 0; i < N; ++i) {
        double r = (i + 0.5) * h;
        double sr = std::sinh(r);
        double pot = m - theta * (std::cosh(r) - 1.0);
        double mass = sr * h;
        double kin = (std::sinh(r + h / 2) + std::sinh(r - h / 2)) / h;
        if (i == 0) kin = std::sinh(r + h / 2) / h;  // no flux through r = 0
        diag(i) = (kin + pot * pot / (sr * sr) * mass) / mass;
        if (i + 1 < N) {
            double r1 = r + h;
            off(i) = -std::sinh(r + h / 2) / h / std::sqrt(mass * std::sinh(r1) * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    std::vector<double> out;
    for (int i = 0; i < std::min(count, N); ++i) out.push_back(0.5 * es.eigenvalues()(i));
    return out;
}

/// Ratio between the closed-form lowest level and the radial-oracle lowest
/// level of H (m = 0).
inline double resolve_comtet_normalization(double theta, double R = 10.0, int N = 4000) {
    auto lv = comtet_levels(theta);
    if (lv.discrete.empty()) throw std::invalid_argument("resolve_comtet_normalization: need |theta| > 1/2");
    return lv.discrete[0] / radial_landau_levels(theta, 0, R, N, 1)[0];
}

struct FdResult {
    std::vector<double> levels;  // eigenvalues of H, ascending
    int Nr = 0, Nphi = 0;
    double R_dom = 0;
    double max_residual = 0;
};

/// Magnetic Laplacian on the geodesic disk of radius R_dom about the base
/// point in geodesic polar coordinates, vector potential theta(cosh r - 1)dphi
/// (curvature opposite to -theta dx/y; the two operators are complex
/// conjugate up to gauge, so the spectra agree), Dirichlet at r = R_dom. Cell-centred in
/// r, fourth-order Peierls stencil in phi. Returns the lowest `count`
/// eigenvalues of H = (1/2) nabla* nabla by shift-invert Lanczos.
inline FdResult continuum_fd_solve(double theta, double R_dom, int mesh, int count = 4) {
    if (mesh < 8 || R_dom <= 0) throw std::invalid_argument("continuum_fd_solve: bad mesh");
    const int Nr = mesh, Np = mesh;
    const double hr = R_dom / (Nr + 0.5), hp = 2 * kPi / Np;
    const Eigen::Index n = static_cast<Eigen::Index>(Nr) * Np;
    auto id = [Np](int i, int j) { return static_cast<Eigen::Index>(i) * Np + ((j % Np) + Np) % Np; };
    std::vector<Eigen::Triplet<cplx>> trip;
    std::vector<double> mass(n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < Nr; ++i) {
        double r = (i + 0.5) * hr;
        double cr = std::sinh(r + hr / 2) * hp / hr;
        double ca = hr / (std::sinh(r) * hp);
        double A = theta * (std::cosh(r) - 1.0);
        for (int j = 0; j < Np; ++j) {
            Eigen::Index p = id(i, j);
            mass[p] = std::sinh(r) * hr * hp;
            diag(p) += cr;
            if (i + 1 < Nr) {
                Eigen::Index q = id(i + 1, j);
                diag(q) += cr;
                trip.emplace_back(p, q, -cr);
                trip.emplace_back(q, p, -cr);
            }
            diag(p) += ca * 30.0 / 12.0;
            const double coef[2] = {-16.0 / 12.0, 1.0 / 12.0};
            for (int d = 1; d <= 2; ++d) {
                Eigen::Index q = id(i, j + d);
                cplx ph = std::polar(1.0, -A * hp * d);
                trip.emplace_back(p, q, coef[d - 1] * ca * ph);
                trip.emplace_back(q, p, coef[d - 1] * ca * std::conj(ph));
            }
        }
    }
    for (Eigen::Index p = 0; p < n; ++p) trip.emplace_back(p, p, diag(p));
    SpMat K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    // symmetric scaling by the mass, then H = S / 2
    Eigen::VectorXd mis(n);
    for (Eigen::Index p = 0; p < n; ++p) mis(p) = 1.0 / std::sqrt(mass[p]);
    SpMat S = mis.cast<cplx>().asDiagonal() * K * mis.cast<cplx>().asDiagonal();
    S = 0.5 * S;
    S.makeCompressed();
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("continuum_fd_solve: factorisation failed");
    auto inv = [&](const Vec& v) -> Vec { return ldlt.solve(v); };
    auto lz = lanczos_largest(inv, n, count, 1e-11);
    FdResult res;
    res.Nr = Nr;
    res.Nphi = Np;
    res.R_dom = R_dom;
    for (int k = 0; k < count; ++k) {
        double lam = 1.0 / lz.values(k);
        res.levels.push_back(lam);
        Vec v = lz.vectors.col(k);
        res.max_residual = std::max(res.max_residual, (S * v - lam * v).norm() / v.norm());
    }
    std::sort(res.levels.begin(), res.levels.end());
    return res;
}

struct FdStudy {
    FdResult coarse, fine;
    double max_relative_change = 0;  // over the two lowest levels
};

/// Solves at `mesh` and `2 mesh`; throws ConvergenceError when the two lowest
/// levels move by more than `max_change` (relative).
inline FdStudy continuum_fd_study(double theta, double R_dom, int mesh, double max_change = 0.01,
                                  int count = 4) {
    FdStudy st;
    st.coarse = continuum_fd_solve(theta, R_dom, mesh, count);
    st.fine = continuum_fd_solve(theta, R_dom, 2 * mesh, count);
    for (int k = 0; k < std::min(2, count); ++k)
        st.max_relative_change = std::max(
            st.max_relative_change, std::abs(st.fine.levels[k] - st.coarse.levels[k]) / std::abs(st.fine.levels[k]));
    if (st.max_relative_change > max_change)
        throw ConvergenceError("continuum_fd_study: mesh " + std::to_string(mesh) +
                               " too coarse, relative change " + std::to_string(st.max_relative_change));
    return st;
}

// ------------------------------------------------------------------ Harper

struct SparseHamiltonian {
    SpMat H;
    double theta = 0;
    int R = 0;
    std::string potential = "none";
    Eigen::Index dim() const { return H.rows(); }
    Mat dense() const { return Mat(H); }
};

/// H = sum over the 2g generators s of the sigma-twisted right translation by
/// s and its adjoint, plus diag(V); hops leaving the ball are dropped.
inline SparseHamiltonian harper_build(const Multiplier& m, const CayleyBall& ball,
                                      const std::optional<RVec>& V = std::nullopt,
                                      const std::string& potential_desc = "none") {
    if (ball.radius < 1) throw std::invalid_argument("harper_build: need R >= 1");
    if (ball.group() != m.group()) throw std::invalid_argument("harper_build: mismatched presentations");
    const int n = static_cast<int>(ball.size());
    const auto& grp = *ball.group();
    std::vector<Eigen::Triplet<cplx>> trip;
    std::vector<cplx> su(grp.rank() + 1);
    for (int s = 1; s <= grp.rank(); ++s) su[s] = grp.letter(s).apply(grp.base_point());
    for (int i = 0; i < n; ++i) {
        const GroupElement& gi = ball[i];
        const cplx giinv_u = gi.matrix.inverse().apply(grp.base_point());
        for (int s = 1; s <= grp.rank(); ++s) {
            MoebiusMap mt = gi.matrix * grp.letter(s);
            auto t = ball.find_in_ball(mt);
            if (!t) continue;
            cplx sg = m.sigma_points(giinv_u, su[s]);
            trip.emplace_back(*t, i, sg);
            trip.emplace_back(i, *t, std::conj(sg));
        }
        if (V) trip.emplace_back(i, i, (*V)(i));
    }
    SparseHamiltonian h;
    h.H.resize(n, n);
    h.H.setFromTriplets(trip.begin(), trip.end());
    h.H.makeCompressed();
    h.theta = m.theta();
    h.R = ball.radius;
    h.potential = V ? potential_desc : "none";
    return h;
}

inline double hermiticity_defect(const SpMat& H) {
    SpMat D = H - SpMat(H.adjoint());
    double d = 0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it) d = std::max(d, std::abs(it.value()));
    return d;
}

inline int max_row_nnz(const SpMat& H) {
    SpMat Ht = H.transpose();  // column-major: count per column of transpose = per row
    int mx = 0;
    for (int k = 0; k < Ht.outerSize(); ++k) {
        int c = 0;
        for (SpMat::InnerIterator it(Ht, k); it; ++it) ++c;
        mx = std::max(mx, c);
    }
    return mx;
}

inline constexpr Eigen::Index kDenseLimit = 4000;

struct SpectrumResult {
    RVec values;  // ascending
    Mat vectors;  // when requested or needed
    RVec ldos;    // |<e|v_k>|^2, identity vertex = basis index 0
    double max_residual = 0;
    bool dense = true;
};

/// Lowest k eigenvalues (all when k <= 0). Dense below kDenseLimit, Lanczos
/// above. Residuals ||Hv - lambda v|| are checked against `tol`.
inline SpectrumResult spectrum(const SparseHamiltonian& h, int k = 0, bool keep_vectors = false,
                               double tol = 1e-8) {
    const Eigen::Index n = h.dim();
    if (k <= 0 || k > n) k = static_cast<int>(n);
    SpectrumResult r;
    if (n < kDenseLimit) {
        auto ep = herm_eig(h.dense(), true);
        r.values = ep.values.head(k);
        r.vectors = ep.vectors.leftCols(k);
    } else {
        auto neg = [&](const Vec& v) -> Vec { return -(h.H * v); };
        auto lz = lanczos_largest(neg, n, k, 1e-12, std::min<Eigen::Index>(n, std::max(400, 6 * k)));
        r.values = -lz.values;
        r.vectors = lz.vectors;
        r.dense = false;
    }
    Mat res = h.H * r.vectors - r.vectors * r.values.cast<cplx>().asDiagonal();
    for (int i = 0; i < k; ++i) r.max_residual = std::max(r.max_residual, res.col(i).norm());
    if (r.max_residual > tol)
        throw ConvergenceError("spectrum: eigenpair residual " + std::to_string(r.max_residual) +
                               " exceeds tolerance");
    r.ldos.resize(k);
    for (int i = 0; i < k; ++i) r.ldos(i) = std::norm(r.vectors(0, i));
    if (!keep_vectors) r.vectors.resize(0, 0);
    return r;
}

/// sup_E |F_a(E) - F_b(E)| for cumulative local densities of states.
inline double cumulative_ldos_distance(const SpectrumResult& a, const SpectrumResult& b) {
    std::vector<std::pair<double, double>> ev;
    for (Eigen::Index i = 0; i < a.values.size(); ++i) ev.push_back({a.values(i), a.ldos(i)});
    for (Eigen::Index i = 0; i < b.values.size(); ++i) ev.push_back({b.values(i), -b.ldos(i)});
    std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return x.first < y.first; });
    double c = 0, sup = 0;
    for (size_t i = 0; i < ev.size(); ++i) {
        c += ev[i].second;
        if (i + 1 == ev.size() || ev[i + 1].first > ev[i].first) sup = std::max(sup, std::abs(c));
    }
    return sup;
}

struct ButterflyRow {
    double theta;
    int index;
    double eigenvalue;
    int R;
};

/// Full Harper spectra over a theta grid. Rows are ordered by grid position
/// then eigenvalue index regardless of the worker count.
inline std::vector<ButterflyRow> butterfly_sweep(const std::vector<double>& thetas, const CayleyBall& ball,
                                                 int workers = 1, const std::optional<RVec>& V = std::nullopt) {
    if (thetas.empty()) throw std::invalid_argument("butterfly_sweep: empty theta grid");
    std::vector<RVec> spectra(thetas.size());
    auto task = [&](size_t t) {
        Multiplier m(ball.group(), MagneticField(thetas[t]));
        spectra[t] = spectrum(harper_build(m, ball, V)).values;
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        for (size_t t = 0; t < thetas.size(); ++t) task(t);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (size_t t = w; t < thetas.size(); t += workers) task(t);
            });
        for (auto& th : pool) th.join();
    }
    std::vector<ButterflyRow> rows;
    for (size_t t = 0; t < thetas.size(); ++t)
        for (Eigen::Index i = 0; i < spectra[t].size(); ++i)
            rows.push_back({thetas[t], static_cast<int>(i), spectra[t](i), ball.radius});
    return rows;
}

struct Gap {
    double lo, hi;
    int below;  // number of eigenvalues <= lo
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

/// Gaps between consecutive eigenvalues wider than min_width.
inline std::vector<Gap> find_gaps(const RVec& sorted, double min_width) {
    std::vector<Gap> g;
    for (Eigen::Index i = 0; i + 1 < sorted.size(); ++i)
        if (sorted(i + 1) - sorted(i) > min_width) g.push_back({sorted(i), sorted(i + 1), static_cast<int>(i + 1)});
    return g;
}

// ---------------------------------------------------------------- disorder

struct DisorderPoint {
    double lambda = 1.0;
    cplx w{1.0, 0.0};
    DisorderPoint(double l, cplx w_) : lambda(l), w(w_) {
        if (!(l > 0)) throw std::invalid_argument("DisorderPoint: lambda must be positive");
        if (std::abs(std::abs(w_) - 1.0) > 1e-12) throw std::invalid_argument("DisorderPoint: |w| must be 1");
    }
};

/// g_{lambda,w}(z) = lambda (1 - |z|^2) / |w - z|^2 for disk z.
inline double disorder_value(const DisorderPoint& d, cplx z) {
    return d.lambda * (1.0 - std::norm(z)) / std::norm(d.w - z);
}

struct DisorderSample {
    RVec values;
    bool singular_warning = false;
};

inline DisorderSample disorder_potential(const DisorderPoint& d, const std::vector<cplx>& disk_points) {
    DisorderSample s;
    s.values.resize(static_cast<Eigen::Index>(disk_points.size()));
    for (size_t i = 0; i < disk_points.size(); ++i) {
        if (!(std::abs(disk_points[i]) < 1.0)) throw DomainError("disorder_potential: vertex outside the disk");
        if (std::abs(d.w - disk_points[i]) < 1e-12) s.singular_warning = true;
        s.values(static_cast<Eigen::Index>(i)) = disorder_value(d, disk_points[i]);
    }
    return s;
}

/// Potential at the orbit points of the ball.
inline DisorderSample disorder_potential(const DisorderPoint& d, const CayleyBall& ball) {
    std::vector<cplx> pts;
    for (size_t i = 0; i < ball.size(); ++i) pts.push_back(cayley(ball.table->point(static_cast<int>(i))));
    return disorder_potential(d, pts);
}

/// Image of the disorder point under gamma = [[alpha, beta],[conj beta, conj alpha]]:
/// (lambda |conj(beta) w + conj(alpha)|^-2, gamma w).
inline DisorderPoint disorder_transform(const DisorderPoint& d, const MoebiusMap& g) {
    Eigen::Matrix2cd s = g.to_su11();
    cplx al = s(0, 0), be = s(0, 1);
    cplx den = std::conj(be) * d.w + std::conj(al);
    cplx gw = (al * d.w + be) / den;
    return DisorderPoint(d.lambda / std::norm(den), gw / std::abs(gw));
}

/// |g_{lambda,w}(gamma^-1 z) - g_{lambda',gamma w}(z)| / g_{lambda',gamma w}(z)
inline double disorder_covariance_residual(const DisorderPoint& d, const MoebiusMap& g, cplx z_disk) {
    cplx zh = cayley_inv(z_disk);
    cplx pre = cayley(g.inverse().apply(zh));
    double lhs = disorder_value(d, pre);
    double rhs = disorder_value(disorder_transform(d, g), z_disk);
    return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
}

// ------------------------------------------------------ projections, pairing

struct SpectralProjection {
    Mat P;
    double fermi = 0;
    Gap gap{0, 0, 0};
    int rank = 0;
    double eig_residual = 0;
};

/// P = chi_{(-inf, E]}(H). Refuses when E is not strictly inside a gap wider
/// than 10x the eigenpair residual and min_gap.
inline SpectralProjection spectral_projection(const SparseHamiltonian& h, double E, double min_gap = 1e-6) {
    if (h.dim() >= kDenseLimit * 4) throw ResourceError("spectral_projection: dimension too large for dense solve");
    auto ep = herm_eig(h.dense(), true);
    const RVec& ev = ep.values;
    Mat res = h.H * ep.vectors - ep.vectors * ev.cast<cplx>().asDiagonal();
    double resid = 0;
    for (Eigen::Index i = 0; i < res.cols(); ++i) resid = std::max(resid, res.col(i).norm());
    int below = 0;
    while (below < ev.size() && ev(below) <= E) ++below;
    double lo = below > 0 ? ev(below - 1) : -std::numeric_limits<double>::infinity();
    double hi = below < ev.size() ? ev(below) : std::numeric_limits<double>::infinity();
    double width = hi - lo;
    double guard = std::max(10 * resid, min_gap);
    if (!(width > guard) || E - lo < 0.5 * guard || hi - E < 0.5 * guard)
        throw GapError("spectral_projection: Fermi level " + std::to_string(E) +
                       " is not inside a spectral gap (neighbours " + std::to_string(lo) + ", " +
                       std::to_string(hi) + ")");
    SpectralProjection sp;
    sp.fermi = E;
    sp.gap = {lo, hi, below};
    sp.rank = below;
    sp.eig_residual = resid;
    sp.P = ep.vectors.leftCols(below) * ep.vectors.leftCols(below).adjoint();
    return sp;
}

inline double projector_defect(const Mat& P) { return (P * P - P).cwiseAbs().maxCoeff(); }
inline double hermitian_defect(const Mat& P) { return (P - P.adjoint()).cwiseAbs().maxCoeff(); }

/// A_P(gamma) = <gamma|P|e>, the column of the identity vertex.
inline TwistedKernel projection_kernel(const Mat& P, ContextPtr ctx) {
    TwistedKernel k(ctx);
    for (Eigen::Index i = 0; i < P.rows(); ++i) k.set(static_cast<int>(i), P(i, 0));
    return k;
}

struct DecayFit {
    std::vector<double> shell_max;  // max |A(gamma)| per word length
    double rate = 0;                // |A| ~ exp(-rate l)
    double r2 = 0;
};

inline DecayFit kernel_decay(const TwistedKernel& A, const CayleyBall& ball) {
    DecayFit f;
    for (size_t r = 0; r < ball.shell_offset.size(); ++r) {
        size_t lo = ball.shell_offset[r], hi = r + 1 < ball.shell_offset.size() ? ball.shell_offset[r + 1] : ball.size();
        double mx = 0;
        for (size_t i = lo; i < hi; ++i) mx = std::max(mx, std::abs(A.at(static_cast<int>(i))));
        f.shell_max.push_back(mx);
    }
    std::vector<double> xs, ys;
    for (size_t r = 0; r < f.shell_max.size(); ++r)
        if (f.shell_max[r] > 0) {
            xs.push_back(static_cast<double>(r));
            ys.push_back(std::log(f.shell_max[r]));
        }
    if (xs.size() < 2) return f;
    double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    f.rate = vx > 0 ? -cov / vx : 0.0;
    f.r2 = (vx > 0 && vy > 0) ? cov * cov / (vx * vy) : 1.0;
    return f;
}

struct PairingReport {
    cplx tau_chern, tau_K;
    cplx value;         // -2 i g tau_chern
    cplx kubo_value;    // i g tau_K
    double nearest = 0;  // nearest element of 2(g-1)Z to Re(value)
    double distance = 0;
};

/// Pairings of the area cocycle and the Kubo cocycle with A_P. The Chern
/// normalisation -2ig maps tau_chern to the scale on which the index lives.
inline PairingReport conductance_pairing(const TwistedKernel& AP) {
    const int g = AP.context()->group()->genus;
    auto v = weighted_trilinear({weights::area(), weights::kubo(g)}, AP, AP, AP);
    PairingReport r;
    r.tau_chern = v[0];
    r.tau_K = v[1];
    r.value = cplx(0, -2.0 * g) * r.tau_chern;
    r.kubo_value = cplx(0, 1.0 * g) * r.tau_K;
    const double step = 2.0 * (g - 1);
    r.nearest = step * std::round(r.value.real() / step);
    r.distance = std::abs(r.value.real() - r.nearest);
    return r;
}

}  // namespace hyperhall
