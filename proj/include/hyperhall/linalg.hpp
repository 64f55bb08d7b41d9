#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"

namespace hyperhall {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<std::complex<double>>;

struct EigenPairs {
    RVec values;  // ascending
    Mat vectors;  // columns, empty when values only
};

namespace detail {

inline void zheevr_all(Mat A, bool vectors, EigenPairs& r) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    Mat Z(vectors ? n : 1, vectors ? n : 1);
    std::vector<lapack_int> isuppz(2 * static_cast<size_t>(n));
    lapack_int found = 0;
    lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'A', 'L', n,
                                     reinterpret_cast<lapack_complex_double*>(A.data()), n, 0, 0, 0, 0, 0, &found,
                                     r.values.data(), reinterpret_cast<lapack_complex_double*>(Z.data()),
                                     static_cast<lapack_int>(Z.rows()), isuppz.data());
    if (info != 0 || found != n) throw ConvergenceError("zheevr failed, info = " + std::to_string(info));
    if (vectors) r.vectors = std::move(Z);
}

}  // namespace detail

/// Dense Hermitian eigensolver on the lower triangle. Eigenpairs come from
/// divide and conquer (zheevd); some OpenBLAS builds return wrong vectors
/// there, so the residual is checked and MRRR (zheevr) is used instead when
/// it fails. Values only go straight to zheevr.
inline EigenPairs herm_eig(const Mat& H, bool vectors = true) {
    if (H.rows() != H.cols()) throw std::invalid_argument("herm_eig: matrix must be square");
    EigenPairs r;
    const lapack_int n = static_cast<lapack_int>(H.rows());
    r.values.resize(n);
    if (n == 0) return r;
    if (!vectors) {
        detail::zheevr_all(H, false, r);
        return r;
    }
    Mat A = H;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                     reinterpret_cast<lapack_complex_double*>(A.data()), n, r.values.data());
    if (info == 0) {
        double scale = std::max(1.0, H.cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(n));
        Mat res = H * A - A * r.values.cast<std::complex<double>>().asDiagonal();
        if (res.colwise().norm().maxCoeff() <= 1e-11 * scale) {
            r.vectors = std::move(A);
            return r;
        }
    }
    detail::zheevr_all(H, true, r);
    return r;
}

/// exp(-i t H) for Hermitian H.
inline Mat expm_herm(const Mat& H, double t = 1.0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec ph = (es.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0, -t)).array().exp();
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline double opnorm(const Mat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues()(0);
}

struct LanczosResult {
    RVec values;
    Mat vectors;
    int iterations = 0;
    double max_residual = 0;
};

/// Largest-magnitude end of the spectrum of a Hermitian operator via Lanczos
/// with full reorthogonalisation. `op` maps v -> Op v. Returns the k largest
/// (algebraic) Ritz pairs; the Krylov space grows until all k converge.
inline LanczosResult lanczos_largest(const std::function<Vec(const Vec&)>& op, Eigen::Index n, int k,
                                     double tol = 1e-10, int max_dim = 0, unsigned seed = 12345) {
    if (k <= 0 || k > n) throw std::invalid_argument("lanczos: need 0 < k <= n");
    if (max_dim <= 0) max_dim = static_cast<int>(std::min<Eigen::Index>(n, 600));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::complex<double>(unif(rng), unif(rng));
    v.normalize();
    Mat Q(n, max_dim);
    std::vector<double> alpha, beta;
    LanczosResult res;
    int m = 0;
    int next_check = std::min(max_dim, std::max(2 * k + 20, 40));
    while (true) {
        Q.col(m) = v;
        Vec w = op(v);
        double a = std::real(v.dot(w));
        alpha.push_back(a);
        // full reorthogonalisation, twice
        for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).adjoint() * w);
        double b = w.norm();
        ++m;
        bool breakdown = b < 1e-14;
        if (m == next_check || m == max_dim || breakdown || m == n) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            int kk = std::min(k, m);
            // Ritz residual estimate |b * last component|
            double worst = 0;
            for (int i = 0; i < kk; ++i) worst = std::max(worst, std::abs(b * es.eigenvectors()(m - 1, m - 1 - i)));
            double scale = std::max(1.0, std::abs(es.eigenvalues()(m - 1)));
            if (worst <= tol * scale || breakdown || m == n || m == max_dim) {
                if (kk < k || (worst > tol * scale && !(breakdown || m == n)))
                    throw ConvergenceError("lanczos: no convergence after " + std::to_string(m) +
                                           " steps, residual estimate " + std::to_string(worst));
                res.values.resize(k);
                res.vectors.resize(n, k);
                for (int i = 0; i < k; ++i) {
                    res.values(i) = es.eigenvalues()(m - 1 - i);
                    res.vectors.col(i) =
                        Q.leftCols(m) * es.eigenvectors().col(m - 1 - i).cast<std::complex<double>>();
                }
                res.iterations = m;
                return res;
            }
            next_check = std::min(max_dim, m + std::max(20, m / 2));
        }
        beta.push_back(b);
        v = w / b;
    }
}

}  // namespace hyperhall
