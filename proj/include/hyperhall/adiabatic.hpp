#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace hyperhall {

// s -> H(s) on [0,1]. The evaluator must also accept s slightly outside
// [0,1] (finite differences at the endpoints).
struct TimeFamily {
    int n = 0;
    std::function<Mat(double)> H;
    double fermi = 0;
    std::string name;
};

struct FamilyCheck {
    double hermiticity = 0;
    double min_gap = 0;  // min over the grid of dist(E, spec H(s)) * 2
    double s_at_min = 0;
    int rank = 0;
};

/// Hermiticity, gap at E and rank constancy on a uniform grid (>= 64 points).
inline FamilyCheck check_family(const TimeFamily& f, int grid = 64) {
    FamilyCheck c;
    c.min_gap = std::numeric_limits<double>::infinity();
    c.rank = -1;
    for (int i = 0; i <= grid; ++i) {
        double s = static_cast<double>(i) / grid;
        Mat H = f.H(s);
        c.hermiticity = std::max(c.hermiticity, (H - H.adjoint()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
        const RVec& ev = es.eigenvalues();
        int below = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev(k) <= f.fermi) ++below;
            dist = std::min(dist, std::abs(ev(k) - f.fermi));
        }
        if (c.rank >= 0 && below != c.rank)
            throw GapError("check_family: rank changes at s = " + std::to_string(s));
        c.rank = below;
        if (2 * dist < c.min_gap) {
            c.min_gap = 2 * dist;
            c.s_at_min = s;
        }
        if (dist < 1e-8) throw GapError("check_family: gap closes at s = " + std::to_string(s));
    }
    return c;
}

/// Spectral projection chi_{(-inf,E]}(H(s)).
inline Mat projection(const TimeFamily& f, double s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(f.H(s));
    int below = 0;
    while (below < es.eigenvalues().size() && es.eigenvalues()(below) <= f.fermi) ++below;
    if (below < es.eigenvalues().size() && std::abs(es.eigenvalues()(below) - f.fermi) < 1e-10)
        throw GapError("projection: Fermi level on the spectrum at s = " + std::to_string(s));
    const auto& V = es.eigenvectors();
    return V.leftCols(below) * V.leftCols(below).adjoint();
}

/// Plain centred difference of P.
inline Mat dP_centered(const TimeFamily& f, double s, double h) {
    return (projection(f, s + h) - projection(f, s - h)) / (2 * h);
}

/// Richardson-extrapolated centred difference, O(h^4).
inline Mat dP(const TimeFamily& f, double s, double h = 1e-3) {
    return (4.0 * dP_centered(f, s, h / 2) - dP_centered(f, s, h)) / 3.0;
}

/// H_a(s) = H(s) + (i/tau)[dP, P]
inline Mat adiabatic_hamiltonian(const TimeFamily& f, double tau, double s) {
    Mat P = projection(f, s), D = dP(f, s);
    return f.H(s) + cplx(0, 1.0 / tau) * (D * P - P * D);
}

struct EvolutionResult {
    std::vector<Mat> U;
    std::vector<double> checkpoints;
    double unitarity_defect = 0;
};

/// i dU/ds = tau H(s) U, U(0) = I. Fourth-order Magnus with two Gauss points
/// per step; each step is an exact exponential of a Hermitian matrix.
inline EvolutionResult evolve(const std::function<Mat(double)>& H, int n, double tau, int steps,
                              int checkpoints = 100) {
    if (!(tau > 0) || steps < 1 || checkpoints < 1 || steps % checkpoints != 0)
        throw std::invalid_argument("evolve: need tau > 0 and steps divisible by checkpoints");
    const double h = 1.0 / steps;
    const double c1 = 0.5 - std::sqrt(3.0) / 6, c2 = 0.5 + std::sqrt(3.0) / 6;
    EvolutionResult r;
    Mat U = Mat::Identity(n, n);
    const int every = steps / checkpoints;
    for (int k = 0; k < steps; ++k) {
        double s = k * h;
        Mat H1 = H(s + c1 * h), H2 = H(s + c2 * h);
        Mat Heff = (tau * h / 2) * (H1 + H2) -
                   cplx(0, tau * tau * std::sqrt(3.0) * h * h / 12) * (H2 * H1 - H1 * H2);
        U = expm_herm(Heff) * U;
        if ((k + 1) % every == 0) {
            r.U.push_back(U);
            r.checkpoints.push_back((k + 1) * h);
            r.unitarity_defect =
                std::max(r.unitarity_defect, (U.adjoint() * U - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
        }
    }
    return r;
}

inline EvolutionResult evolve_physical(const TimeFamily& f, double tau, int steps, int checkpoints = 100) {
    return evolve(f.H, f.n, tau, steps, checkpoints);
}

inline EvolutionResult evolve_adiabatic(const TimeFamily& f, double tau, int steps, int checkpoints = 100) {
    return evolve([&f, tau](double s) { return adiabatic_hamiltonian(f, tau, s); }, f.n, tau, steps,
                  checkpoints);
}

/// ||U(1) at `steps` - U(1) at 2 `steps`||; throws when above `tol`.
inline double step_refinement_defect(const TimeFamily& f, double tau, int steps, double tol = 1e-8) {
    auto a = evolve_physical(f, tau, steps, 1), b = evolve_physical(f, tau, 2 * steps, 1);
    double d = opnorm(a.U.back() - b.U.back());
    if (d > tol)
        throw ConvergenceError("evolve_physical: step refinement changed U(1) by " + std::to_string(d));
    return d;
}

/// max over checkpoints of ||U_a P(0) U_a* - P(s)||
inline double intertwining_defect(const TimeFamily& f, const EvolutionResult& ua) {
    Mat P0 = projection(f, 0.0);
    double d = 0;
    for (size_t k = 0; k < ua.U.size(); ++k)
        d = std::max(d, opnorm(ua.U[k] * P0 * ua.U[k].adjoint() - projection(f, ua.checkpoints[k])));
    return d;
}

/// ||[H_a, P] - (i/tau) dP|| with H_a built from a plain centred difference of
/// step h and dP the Richardson reference.
inline double eom_residual(const TimeFamily& f, double tau, double s, double h) {
    Mat P = projection(f, s), Dh = dP_centered(f, s, h), Dref = dP(f, s, 1e-3);
    Mat Ha = f.H(s) + cplx(0, 1.0 / tau) * (Dh * P - P * Dh);
    return opnorm(Ha * P - P * Ha - cplx(0, 1.0 / tau) * Dref);
}

struct ContourResult {
    Mat X;
    int nodes = 0;
    double doubling_change = 0;
    double commutator_residual = 0;  // ||[dP,P] - [H,X]||
    double gap = 0;
};

/// X(s) = (1/2 pi i) oint R(z) dP R(z) dz over a circle through the gap that
/// encloses the spectrum below E, traversed clockwise so that
/// [dP, P] = [H, X]. Trapezoid rule, nodes doubled until X changes < tol.
inline ContourResult contour_X(const TimeFamily& f, double s, int nodes = 32, double tol = 1e-8,
                               int max_nodes = 1 << 14) {
    Mat H = f.H(s);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const RVec& ev = es.eigenvalues();
    const Mat& V = es.eigenvectors();
    int below = 0;
    while (below < ev.size() && ev(below) <= f.fermi) ++below;
    Mat D = dP(f, s);
    ContourResult r;
    if (below == 0 || below == ev.size()) {  // nothing to enclose or everything
        r.X = Mat::Zero(f.n, f.n);
        return r;
    }
    double lo = ev(below - 1), hi = ev(below);
    r.gap = hi - lo;
    double right = 0.5 * (lo + hi);
    double left = ev(0) - 0.5 * r.gap;
    cplx c = 0.5 * (left + right);
    double rho = 0.5 * (right - left);
    Mat Dt = V.adjoint() * D * V;  // dP in the eigenbasis
    auto integrate = [&](int N) {
        Mat Xt = Mat::Zero(f.n, f.n);
        for (int k = 0; k < N; ++k) {
            cplx e = std::polar(1.0, 2 * kPi * k / N);
            cplx z = c + rho * e;
            Vec rz(f.n);
            for (int a = 0; a < f.n; ++a) rz(a) = 1.0 / (ev(a) - z);
            Xt += e * (rz.asDiagonal() * Dt * rz.asDiagonal());
        }
        // clockwise: -(1/2 pi i) sum f(z) i rho e (2 pi / N)
        return Mat(-(rho / N) * (V * Xt * V.adjoint()));
    };
    Mat X = integrate(nodes);
    while (true) {
        if (2 * nodes > max_nodes) throw ConvergenceError("contour_X: node doubling did not converge");
        Mat X2 = integrate(2 * nodes);
        r.doubling_change = (X2 - X).cwiseAbs().maxCoeff();
        X = X2;
        nodes *= 2;
        if (r.doubling_change < tol) break;
    }
    r.X = X;
    r.nodes = nodes;
    Mat P = V.leftCols(below) * V.leftCols(below).adjoint();
    r.commutator_residual = opnorm((D * P - P * D) - (H * X - X * H));
    return r;
}

struct QatReport {
    std::vector<double> tau, lhs, rhs, scaled, ratio;  // ratio[k] = lhs[k+1]/lhs[k]
    std::vector<double> intertwining;
    double max_unitarity_defect = 0;
    double bound_constant = 0;  // max_s {2||XP|| + ||d(XP) P||}
    double x_norm_times_gap = 0;
    bool bound_holds = true;
    bool ratios_ok = true;     // last three ratios in [0.3, 0.7]
    bool scaled_bounded = true;  // max/min of lhs*tau over the top three < 3
};

/// Steps used for a given tau: enough Magnus steps that tau*h stays small.
inline int default_steps(double tau, int checkpoints = 100) {
    int s = std::max(2000, static_cast<int>(std::ceil(40.0 * tau)));
    return ((s + checkpoints - 1) / checkpoints) * checkpoints;
}

inline QatReport qat_bound_check(const TimeFamily& f, const std::vector<double>& taus, int checkpoints = 100) {
    if (taus.size() < 4) throw std::invalid_argument("qat_bound_check: need at least four tau values");
    check_family(f);
    QatReport rep;
    // bound constant on the checkpoint grid (and s = 0)
    auto XP = [&](double s) { return Mat(contour_X(f, s).X * projection(f, s)); };
    const double hd = 1e-3;
    for (int k = 0; k <= checkpoints; ++k) {
        double s = static_cast<double>(k) / checkpoints;
        Mat P = projection(f, s);
        Mat xp = XP(s);
        Mat d1 = (XP(s + hd) - XP(s - hd)) / (2 * hd), d2 = (XP(s + hd / 2) - XP(s - hd / 2)) / hd;
        Mat dxp = (4.0 * d2 - d1) / 3.0;
        double val = 2 * opnorm(xp) + opnorm(dxp * P);
        rep.bound_constant = std::max(rep.bound_constant, val);
    }
    Mat P0 = projection(f, 0.0);
    for (double tau : taus) {
        int steps = default_steps(tau, checkpoints);
        auto ut = evolve_physical(f, tau, steps, checkpoints);
        auto ua = evolve_adiabatic(f, tau, steps, checkpoints);
        double l = 0;
        for (size_t k = 0; k < ut.U.size(); ++k) l = std::max(l, opnorm((ut.U[k] - ua.U[k]) * P0));
        rep.tau.push_back(tau);
        rep.lhs.push_back(l);
        rep.rhs.push_back(rep.bound_constant / tau);
        rep.scaled.push_back(l * tau);
        rep.intertwining.push_back(intertwining_defect(f, ua));
        rep.max_unitarity_defect =
            std::max({rep.max_unitarity_defect, ut.unitarity_defect, ua.unitarity_defect});
        if (l > rep.bound_constant / tau) rep.bound_holds = false;
    }
    for (size_t k = 0; k + 1 < rep.lhs.size(); ++k) rep.ratio.push_back(rep.lhs[k + 1] / rep.lhs[k]);
    for (size_t k = rep.ratio.size() >= 3 ? rep.ratio.size() - 3 : 0; k < rep.ratio.size(); ++k)
        if (rep.ratio[k] < 0.3 || rep.ratio[k] > 0.7) rep.ratios_ok = false;
    size_t n = rep.scaled.size();
    double mx = *std::max_element(rep.scaled.end() - 3, rep.scaled.end());
    double mn = *std::min_element(rep.scaled.end() - 3, rep.scaled.end());
    rep.scaled_bounded = n >= 3 && mn > 0 && mx / mn < 3.0;
    return rep;
}

// ------------------------------------------------------- conductance algebra

/// First-order variation of chi_{(-inf,E]}(H) under H -> H + a dH, exact
/// perturbation formula in the eigenbasis.
inline Mat projector_derivative(const Mat& H, const Mat& dH, double E) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const RVec& ev = es.eigenvalues();
    const Mat& V = es.eigenvectors();
    Mat W = V.adjoint() * dH * V;
    const Eigen::Index n = H.rows();
    Mat D = Mat::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            bool ia = ev(a) <= E, ib = ev(b) <= E;
            if (ia && !ib) D(a, b) = W(a, b) / (ev(a) - ev(b));
            if (!ia && ib) D(a, b) = W(a, b) / (ev(b) - ev(a));
        }
    return V * D * V.adjoint();
}

// H(s, a) with parameter directions a_1..a_m for the current variations.
struct KuboFamily {
    int n = 0;
    int dirs = 0;
    std::function<Mat(double, const Eigen::VectorXd&)> H;
    double fermi = 0;
};

struct KuboReport {
    double projector_sandwich = 0;   // max_k ||P (d_k P) P||
    double double_commutator = 0;    // max_k ||[P,[P,d_k P]] - d_k P||
    std::vector<cplx> lhs;           // tr(P [d_t P, d_k P])
    std::vector<cplx> rhs;           // i tr((d_k P) H_a)
    std::vector<cplx> discarded;     // i tr(d_k (P H_a))
    std::vector<cplx> current;       // tr(P d_k H)
    Mat conductance;                 // -i tr(P [d_j P, d_k P]), real part
    double conductance_imag = 0;
    double antisymmetry_defect = 0;
};

inline KuboReport kubo_identities(const KuboFamily& fam, double s, double tau, double h = 1e-4) {
    Eigen::VectorXd a0 = Eigen::VectorXd::Zero(fam.dirs);
    auto Hs = [&](double ss, const Eigen::VectorXd& a) { return fam.H(ss, a); };
    auto dH_s = [&](double ss, const Eigen::VectorXd& a) {
        return Mat((Hs(ss + h, a) - Hs(ss - h, a)) / (2 * h));
    };
    auto dH_k = [&](double ss, const Eigen::VectorXd& a, int k) {
        Eigen::VectorXd ap = a, am = a;
        ap(k) += h;
        am(k) -= h;
        return Mat((Hs(ss, ap) - Hs(ss, am)) / (2 * h));
    };
    auto proj = [&](const Mat& H) {
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        int below = 0;
        while (below < es.eigenvalues().size() && es.eigenvalues()(below) <= fam.fermi) ++below;
        return Mat(es.eigenvectors().leftCols(below) * es.eigenvectors().leftCols(below).adjoint());
    };
    auto PHa_at = [&](const Eigen::VectorXd& a) {
        Mat H = Hs(s, a), P = proj(H);
        Mat dsP = projector_derivative(H, dH_s(s, a), fam.fermi);
        Mat Ha = H + cplx(0, 1.0 / tau) * (dsP * P - P * dsP);
        return Mat(P * Ha);
    };

    Mat H = Hs(s, a0), P = proj(H);
    Mat dsP = projector_derivative(H, dH_s(s, a0), fam.fermi);
    Mat dtP = dsP / tau;
    Mat Ha = H + cplx(0, 1.0 / tau) * (dsP * P - P * dsP);
    std::vector<Mat> dk;
    KuboReport r;
    for (int k = 0; k < fam.dirs; ++k) {
        Mat dkH = dH_k(s, a0, k);
        Mat dkP = projector_derivative(H, dkH, fam.fermi);
        dk.push_back(dkP);
        r.projector_sandwich = std::max(r.projector_sandwich, (P * dkP * P).cwiseAbs().maxCoeff());
        Mat c1 = P * dkP - dkP * P;
        r.double_commutator = std::max(r.double_commutator, (P * c1 - c1 * P - dkP).cwiseAbs().maxCoeff());
        r.lhs.push_back((P * (dtP * dkP - dkP * dtP)).trace());
        r.rhs.push_back(kI * (dkP * Ha).trace());
        Eigen::VectorXd ap = a0, am = a0;
        ap(k) += h;
        am(k) -= h;
        r.discarded.push_back(kI * ((PHa_at(ap) - PHa_at(am)) / (2 * h)).trace());
        r.current.push_back((P * dkH).trace());
    }
    r.conductance = Mat::Zero(fam.dirs, fam.dirs);
    for (int j = 0; j < fam.dirs; ++j)
        for (int k = 0; k < fam.dirs; ++k) {
            cplx v = -kI * (P * (dk[j] * dk[k] - dk[k] * dk[j])).trace();
            r.conductance(j, k) = v;
            r.conductance_imag = std::max(r.conductance_imag, std::abs(v.imag()));
        }
    for (int j = 0; j < fam.dirs; ++j)
        for (int k = 0; k < fam.dirs; ++k)
            r.antisymmetry_defect =
                std::max(r.antisymmetry_defect, std::abs(r.conductance(j, k) + r.conductance(k, j)));
    return r;
}

// ------------------------------------------------------------ test families

/// v (s - 1/2) sigma_z + Delta sigma_x, Fermi level 0 (gap 2 Delta at s = 1/2).
inline TimeFamily two_level_family(double v = 2.0, double delta = 1.0) {
    TimeFamily f;
    f.n = 2;
    f.fermi = 0.0;
    f.name = "two-level";
    f.H = [v, delta](double s) {
        Mat H(2, 2);
        H << v * (s - 0.5), delta, delta, -v * (s - 0.5);
        return H;
    };
    return f;
}

/// Harper operator on the radius-R ball with theta(s) = theta0 + s dtheta and
/// a disorder potential whose boundary point rotates, w(s) = exp(i(phi0 + s dphi)).
/// The Fermi level is the centre of the widest gap that stays open on a
/// 65-point grid.
inline TimeFamily harper_family(GroupPtr grp, int R, double theta0, double dtheta, double lambda,
                                double phi0, double dphi) {
    auto ball = std::make_shared<CayleyBall>(ball_enumerate(grp, R));
    TimeFamily f;
    f.n = static_cast<int>(ball->size());
    f.name = "harper";
    f.H = [=](double s) {
        Multiplier m(grp, MagneticField(theta0 + s * dtheta));
        DisorderPoint d(lambda, std::polar(1.0, phi0 + s * dphi));
        RVec V = disorder_potential(d, *ball).values;
        return harper_build(m, *ball, V).dense();
    };
    const int grid = 64;
    std::vector<RVec> spec;
    for (int i = 0; i <= grid; ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(f.H(static_cast<double>(i) / grid), Eigen::EigenvaluesOnly);
        spec.push_back(es.eigenvalues());
    }
    double best = -1;
    for (int k = 1; k < f.n; ++k) {
        double lo = -1e300, hi = 1e300;
        for (const auto& ev : spec) {
            lo = std::max(lo, ev(k - 1));
            hi = std::min(hi, ev(k));
        }
        if (hi - lo > best) {
            best = hi - lo;
            f.fermi = 0.5 * (lo + hi);
        }
    }
    if (best <= 0) throw GapError("harper_family: no gap stays open along the family");
    return f;
}

}  // namespace hyperhall
