#pragma once

#include "pcaewc/types.hpp"

#include <cmath>
#include <cstdlib>

namespace pcaewc {

/// Orthonormal loading matrix plus the retained spectrum.
struct PcaModel {
    Matrix loadings;         // m x l, orthonormal columns
    Index n_components = 0;  // l
    Vector score_variances;  // retained eigenvalues, descending
    Index n_train = 0;
};

/// Column means and sample standard deviations (divisor N-1).
inline Scaler fit_scaler(const DataMatrix& X) {
    const Index n = X.n_samples();
    const Index m = X.n_vars();
    Scaler s;
    s.mean = Vector::Zero(m);
    s.std = Vector::Zero(m);
    for (Index j = 0; j < m; ++j) {
        double sum = 0.0;
        for (Index i = 0; i < n; ++i) sum += X.values(i, j);
        s.mean[j] = sum / static_cast<double>(n);
    }
    for (Index j = 0; j < m; ++j) {
        double ss = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double d = X.values(i, j) - s.mean[j];
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        // constant columns land at 0 up to rounding in the mean
        if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) throw ZeroVarianceColumn(j);
        s.std[j] = sd;
    }
    return s;
}

inline DataMatrix apply_scaler(const Scaler& s, const DataMatrix& X) {
    if (X.n_vars() != s.n_vars())
        throw DimensionMismatch("apply_scaler: scaler has " + std::to_string(s.n_vars()) +
                                " variables, data has " + std::to_string(X.n_vars()));
    Matrix out = (X.values.rowwise() - s.mean.transpose()).array().rowwise() /
                 s.std.transpose().array();
    return DataMatrix(std::move(out));
}

/// Inverse of apply_scaler.
inline DataMatrix invert_scaler(const Scaler& s, const DataMatrix& Xs) {
    if (Xs.n_vars() != s.n_vars()) throw DimensionMismatch("invert_scaler: dimension mismatch");
    Matrix out = (Xs.values.array().rowwise() * s.std.transpose().array()).rowwise() +
                 s.mean.transpose().array();
    return DataMatrix(std::move(out));
}

namespace detail {

/// Flip each column so its largest-magnitude entry is positive (first index on ties).
inline void fix_column_signs(Matrix& P) {
    for (Index j = 0; j < P.cols(); ++j) {
        Index imax = 0;
        double amax = -1.0;
        for (Index i = 0; i < P.rows(); ++i) {
            const double a = std::abs(P(i, j));
            if (a > amax) {
                amax = a;
                imax = i;
            }
        }
        if (P(imax, j) < 0.0) P.col(j) = -P.col(j);
    }
}

}  // namespace detail

/// PCA on standardized data: eigendecomposition of X'X/(N-1), component count
/// by cumulative percent variance (smallest k whose retained fraction reaches
/// the threshold).
inline PcaModel fit_pca(const DataMatrix& Xs, double cpv_threshold = 0.95) {
    if (!(cpv_threshold > 0.0 && cpv_threshold <= 1.0))
        throw DimensionMismatch("fit_pca: cpv_threshold must be in (0, 1]");
    const Index n = Xs.n_samples();
    const Index m = Xs.n_vars();
    Matrix cov = (Xs.values.transpose() * Xs.values) / static_cast<double>(n - 1);
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw RankDeficient("fit_pca: eigendecomposition failed");

    // ascending in Eigen; reverse to descending
    Vector evals = eig.eigenvalues().reverse();
    Matrix evecs = eig.eigenvectors().rowwise().reverse();

    const double total = evals.sum();
    if (!(total > 0.0)) throw RankDeficient("fit_pca: covariance has no positive spectrum");
    Index l = m;
    double cum = 0.0;
    for (Index k = 0; k < m; ++k) {
        cum += evals[k];
        if (cum / total >= cpv_threshold) {
            l = k + 1;
            break;
        }
    }
    for (Index k = 0; k < l; ++k)
        if (!(evals[k] > 0.0))
            throw RankDeficient("fit_pca: fewer than " + std::to_string(l) +
                                " positive eigenvalues");

    PcaModel model;
    model.loadings = evecs.leftCols(l);
    detail::fix_column_signs(model.loadings);
    model.n_components = l;
    model.score_variances = evals.head(l);
    model.n_train = n;
    return model;
}

/// Reconstruction loss tr(Xs'Xs) - tr(P'Xs'Xs P); zero when the columns of Xs
/// lie in span(P).
inline double pca_loss(const Matrix& P, const DataMatrix& Xs) {
    if (P.rows() != Xs.n_vars())
        throw DimensionMismatch("pca_loss: loadings have " + std::to_string(P.rows()) +
                                " rows, data has " + std::to_string(Xs.n_vars()) + " variables");
    const Matrix XP = Xs.values * P;
    return Xs.values.squaredNorm() - XP.squaredNorm();
}

}  // namespace pcaewc
