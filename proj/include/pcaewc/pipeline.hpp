#pragma once

#include "pcaewc/dc.hpp"
#include "pcaewc/ewc.hpp"
#include "pcaewc/monitoring.hpp"
#include "pcaewc/pca.hpp"
#include "pcaewc/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace pcaewc {

/// Penalty weights. With auto_mode set, lambda is scaled to the data energy
/// as m / tr(F).
struct LambdaConfig {
    double lambda_mode = 0.0;
    double lambda_prior = 1e-3;
    bool auto_mode = true;

    double resolve(const Matrix& fisher) const {
        if (!auto_mode) return lambda_mode;
        const double tr = fisher.trace();
        return tr > 0.0 ? static_cast<double>(fisher.rows()) / tr : 1.0;
    }
};

/// Everything needed to monitor one mode: scaler, loadings, penalty state,
/// the training score covariance, and the control limits.
struct ModeModelState {
    PcaModel pca;
    EwcState ewc;
    ControlLimits limits;
    Scaler scaler;
    Matrix score_cov;  // l x l, from the block the loadings were solved on
    int mode_index = 1;
    std::string label;
};

struct ModeChangeReport {
    bool changed = false;
    Vector mean_shift;  // standardized deviations of window means
    Vector std_ratio;   // window std / reference std
};

inline constexpr double kDefaultMeanTol = 0.5;
inline const double kDefaultStdTol = std::log(1.5);

namespace detail {

/// Per-statistic KDE level: the confidence is split across the two statistics
/// so the OR rule controls the family false-alarm rate at 1 - alpha, plus one
/// binomial standard error to cover quantile estimation noise.
inline double statistic_level(double alpha, std::size_t n) {
    const double a = 1.0 - (1.0 - alpha) / 2.0;
    const double adj = a + std::sqrt(a * (1.0 - a) / static_cast<double>(n));
    return std::min(adj, 1.0 - 1e-12);
}

inline ControlLimits training_limits(const std::vector<double>& t2, const std::vector<double>& spe,
                                     double alpha) {
    const double level = statistic_level(alpha, t2.size());
    ControlLimits limits;
    limits.t2_limit = kde_threshold(t2, level);
    limits.spe_limit = kde_threshold(spe, level);
    limits.alpha = alpha;
    return limits;
}

/// Retained spectrum of a solved (non-eigenbasis) loading matrix: the
/// eigenvalues of its training score covariance, descending.
inline Vector score_spectrum(const Matrix& score_cov) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(score_cov, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().reverse();
}

}  // namespace detail

/// Fit the first mode by plain PCA and seed the penalty state from its data.
inline ModeModelState train_initial(const DataMatrix& X1, double cpv_threshold,
                                    const LambdaConfig& lambdas, double alpha = 0.99,
                                    std::string label = "Model A") {
    ModeModelState state;
    state.scaler = fit_scaler(X1);
    const DataMatrix Xs = apply_scaler(state.scaler, X1);
    state.pca = fit_pca(Xs, cpv_threshold);
    const Matrix fisher = fisher_matrix(Xs);
    const double lambda = lambdas.resolve(fisher);
    state.ewc = make_ewc_state(fisher, state.pca.loadings, lambda, lambdas.lambda_prior);
    state.score_cov = score_covariance(state.pca.loadings, Xs);
    const Matrix inv = score_covariance_inverse(state.score_cov);
    state.limits = detail::training_limits(t2_series(Xs, state.pca.loadings, inv),
                                           spe_series(Xs, state.pca.loadings), alpha);
    state.mode_index = 1;
    state.label = std::move(label);
    return state;
}

/// Absorb a new mode: solve for loadings against the accumulated penalty,
/// then roll the penalty state forward. The component count is inherited.
inline ModeModelState continual_update(const ModeModelState& state, const DataMatrix& X_new,
                                       const LambdaConfig& lambda_new, const DcConfig& cfg = {},
                                       int target_mode_index = -1) {
    const int next_index = state.mode_index + 1;
    if (target_mode_index >= 0 && target_mode_index != next_index)
        throw ModeOrderViolation("continual_update: state is at mode " +
                                 std::to_string(state.mode_index) + ", cannot jump to mode " +
                                 std::to_string(target_mode_index));

    ModeModelState out;
    out.scaler = fit_scaler(X_new);
    const DataMatrix Xs = apply_scaler(out.scaler, X_new);
    if (Xs.n_vars() != state.ewc.anchor.rows())
        throw DimensionMismatch("continual_update: variable count changed between modes");

    const DcSolution sol = solve(state.ewc, Xs, cfg);

    const Matrix fisher = fisher_matrix(Xs);
    const double lambda = lambda_new.resolve(fisher);
    out.ewc = update_omega(state.ewc, fisher, lambda, sol.loadings);

    out.pca.loadings = sol.loadings;
    out.pca.n_components = state.pca.n_components;
    out.pca.n_train = Xs.n_samples();
    out.score_cov = score_covariance(sol.loadings, Xs);
    out.pca.score_variances = detail::score_spectrum(out.score_cov);

    const Matrix inv = score_covariance_inverse(out.score_cov);
    out.limits = detail::training_limits(t2_series(Xs, sol.loadings, inv),
                                         spe_series(Xs, sol.loadings), state.limits.alpha);
    out.mode_index = next_index;
    out.label = "Model " + std::string(1, static_cast<char>('A' + next_index - 1));
    return out;
}

/// Standardize a test block (optionally with a caller-supplied scaler) and
/// compute the detection series against the state's limits.
inline StatisticSeries monitor_block(const ModeModelState& state, const DataMatrix& X_test,
                                     const std::optional<Scaler>& scaler_override = {}) {
    const Scaler& sc = scaler_override ? *scaler_override : state.scaler;
    const DataMatrix Xs = apply_scaler(sc, X_test);
    const Matrix inv = score_covariance_inverse(state.score_cov);
    return detect(t2_series(Xs, state.pca.loadings, inv), spe_series(Xs, state.pca.loadings),
                  state.limits);
}

/// Compare a window's moments against a reference scaler, in reference-
/// standardized units.
inline ModeChangeReport detect_mode_change(const Scaler& reference, const DataMatrix& window,
                                           double mean_tol = kDefaultMeanTol,
                                           double std_tol = kDefaultStdTol) {
    if (window.n_samples() < 30)
        throw InsufficientData("detect_mode_change: window needs at least 30 samples");
    if (window.n_vars() != reference.n_vars())
        throw DimensionMismatch("detect_mode_change: variable count mismatch");
    const Scaler w = fit_scaler(window);
    ModeChangeReport report;
    report.mean_shift = (w.mean - reference.mean).cwiseQuotient(reference.std);
    report.std_ratio = w.std.cwiseQuotient(reference.std);
    const double max_shift = report.mean_shift.cwiseAbs().maxCoeff();
    const double max_log_ratio = report.std_ratio.array().log().abs().maxCoeff();
    report.changed = max_shift > mean_tol || max_log_ratio > std_tol;
    return report;
}

/// Scaler for monitoring a newly active mode: means re-estimated from the
/// normal window, standard deviations kept from the reference unless the
/// window's ratio breaches the tolerance.
inline Scaler refresh_scaler(const Scaler& reference, const DataMatrix& window,
                             double std_tol = kDefaultStdTol) {
    if (window.n_vars() != reference.n_vars())
        throw DimensionMismatch("refresh_scaler: variable count mismatch");
    const Scaler w = fit_scaler(window);
    Scaler out;
    out.mean = w.mean;
    out.std = reference.std;
    for (Index j = 0; j < w.n_vars(); ++j)
        if (std::abs(std::log(w.std[j] / reference.std[j])) > std_tol) out.std[j] = w.std[j];
    return out;
}

}  // namespace pcaewc
