#pragma once

#include "pcaewc/pca.hpp"
#include "pcaewc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace pcaewc {

struct ControlLimits {
    double t2_limit = 0.0;
    double spe_limit = 0.0;
    double alpha = 0.99;
};

struct StatisticSeries {
    std::vector<double> t2;
    std::vector<double> spe;
    std::vector<std::uint8_t> alarms;  // alarms[i] == (t2[i] > t2_limit) || (spe[i] > spe_limit)
};

/// Score covariance (P'X'XP)/(N-1) of the block the model was fitted/solved on.
inline Matrix score_covariance(const Matrix& P, const DataMatrix& Xs_train) {
    if (P.rows() != Xs_train.n_vars()) throw DimensionMismatch("score_covariance: shape mismatch");
    const Matrix scores = Xs_train.values * P;
    Matrix cov = (scores.transpose() * scores) / static_cast<double>(Xs_train.n_samples() - 1);
    return 0.5 * (cov + cov.transpose());
}

/// Inverse of the l x l score covariance; refuses condition numbers above 1e12.
inline Matrix score_covariance_inverse(const Matrix& score_cov) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(score_cov);
    if (eig.info() != Eigen::Success)
        throw SingularScoreCovariance("score covariance eigendecomposition failed");
    const Vector ev = eig.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw SingularScoreCovariance("score covariance condition number exceeds 1e12");
    return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

/// Hotelling T^2 of one standardized sample.
inline double t2_statistic(const Vector& x, const Matrix& P, const Matrix& score_cov_inv) {
    if (x.size() != P.rows()) throw DimensionMismatch("t2_statistic: sample dimension mismatch");
    const Vector y = P.transpose() * x;
    return y.dot(score_cov_inv * y);
}

inline double t2_statistic(const Vector& x, const PcaModel& model, const DataMatrix& Xs_train) {
    const Matrix inv = score_covariance_inverse(score_covariance(model.loadings, Xs_train));
    return t2_statistic(x, model.loadings, inv);
}

/// Squared prediction error x'(I - PP')x of one standardized sample.
inline double spe_statistic(const Vector& x, const Matrix& P) {
    if (x.size() != P.rows()) throw DimensionMismatch("spe_statistic: sample dimension mismatch");
    const Vector r = x - P * (P.transpose() * x);
    return r.squaredNorm();
}

inline std::vector<double> t2_series(const DataMatrix& Xs, const Matrix& P,
                                     const Matrix& score_cov_inv) {
    std::vector<double> out(static_cast<std::size_t>(Xs.n_samples()));
    const Matrix scores = Xs.values * P;
    for (Index i = 0; i < Xs.n_samples(); ++i) {
        const Vector y = scores.row(i).transpose();
        out[static_cast<std::size_t>(i)] = y.dot(score_cov_inv * y);
    }
    return out;
}

inline std::vector<double> spe_series(const DataMatrix& Xs, const Matrix& P) {
    std::vector<double> out(static_cast<std::size_t>(Xs.n_samples()));
    const Matrix recon = (Xs.values * P) * P.transpose();
    for (Index i = 0; i < Xs.n_samples(); ++i)
        out[static_cast<std::size_t>(i)] = (Xs.values.row(i) - recon.row(i)).squaredNorm();
    return out;
}

/// Gaussian-kernel KDE quantile: Silverman bandwidth, 2048-point grid over
/// [min - 3h, max + 3h], closed-form CDF as the mean of Gaussian CDFs.
/// Returns the smallest grid value whose estimated CDF reaches alpha.
inline double kde_threshold(std::span<const double> values, double alpha) {
    if (values.size() < 30) throw InsufficientData("kde_threshold: need at least 30 values");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("kde_threshold: alpha must be in (0, 1)");
    const std::size_t n = values.size();
    double mean = 0.0;
    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw InsufficientData("kde_threshold: non-finite value");
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DegenerateSample("kde_threshold: sample has zero spread");

    const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    constexpr int kGrid = 2048;
    const double g0 = lo - 3.0 * h;
    const double g1 = hi + 3.0 * h;
    const double dg = (g1 - g0) / static_cast<double>(kGrid - 1);
    const double inv_h_sqrt2 = 1.0 / (h * std::numbers::sqrt2);

    auto cdf_at = [&](int idx) {
        const double g = g0 + dg * static_cast<double>(idx);
        double acc = 0.0;
        for (double v : values) acc += 0.5 * (1.0 + std::erf((g - v) * inv_h_sqrt2));
        return acc / static_cast<double>(n);
    };

    // CDF is monotone in the grid value; binary search for the first crossing.
    int a = 0, b = kGrid - 1;
    while (a < b) {
        const int mid = a + (b - a) / 2;
        if (cdf_at(mid) >= alpha)
            b = mid;
        else
            a = mid + 1;
    }
    return g0 + dg * static_cast<double>(a);
}

/// OR-rule detection: a sample alarms when either statistic exceeds its limit.
inline StatisticSeries detect(const std::vector<double>& t2, const std::vector<double>& spe,
                              const ControlLimits& limits) {
    if (t2.size() != spe.size()) throw LengthMismatch("detect: series lengths differ");
    StatisticSeries s;
    s.t2 = t2;
    s.spe = spe;
    s.alarms.resize(t2.size());
    for (std::size_t i = 0; i < t2.size(); ++i)
        s.alarms[i] = (t2[i] > limits.t2_limit) || (spe[i] > limits.spe_limit) ? 1 : 0;
    return s;
}

}  // namespace pcaewc
