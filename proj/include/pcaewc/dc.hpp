#pragma once

#include "pcaewc/ewc.hpp"
#include "pcaewc/pca.hpp"
#include "pcaewc/types.hpp"

#include <utility>
#include <vector>

namespace pcaewc {

struct DcConfig {
    double epsilon = 1e-10;  // convergence tolerance on ||P_{k+1} - P_k||_F^2
    int max_iters = 500;
    bool record_trace = false;
};

struct DcSolution {
    Matrix loadings;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // J(P_k), recorded when requested
    std::vector<double> step_norm_trace;  // ||P_{k+1} - P_k||_F^2
};

/// Full objective J(P) = reconstruction loss on the new block plus the
/// quadratic penalty against the anchored state.
inline double objective(const Matrix& P, const DataMatrix& Xs2, const EwcState& state) {
    return pca_loss(P, Xs2) + ewc_loss(P, state);
}

/// Subgradient of the concave part's negation, 2 * Xs2'Xs2 * P_k.
inline Matrix subgradient(const DataMatrix& Xs2, const Matrix& P_k) {
    if (P_k.rows() != Xs2.n_vars()) throw DimensionMismatch("subgradient: shape mismatch");
    return 2.0 * (Xs2.values.transpose() * (Xs2.values * P_k));
}

namespace detail {

/// Closest matrix with orthonormal columns: W * I_{m,l} * V' from the SVD.
inline Matrix polar_factor(const Matrix& R) {
    if (!R.allFinite()) throw SvdFailure("polar_factor: non-finite target");
    Eigen::BDCSVD<Matrix> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw SvdFailure("polar_factor: SVD did not converge");
    return svd.matrixU() * svd.matrixV().transpose();
}

/// Target of one convex subproblem. The penalty's quadratic term is shifted
/// by c = lambda_max(Omega) into the linearized part (tr(P'WP) = c*l -
/// tr(P'(cI-W)P) on the Stiefel manifold), which keeps the surrogate a true
/// majorizer and the iteration monotone for any anchor and weight.
inline Matrix dc_target(const Matrix& omega_anchor, const Matrix& omega, double omega_lmax,
                        const Matrix& XtX, const Matrix& P_k) {
    return omega_anchor + XtX * P_k + omega_lmax * P_k - omega * P_k;
}

inline double omega_spectral_max(const Matrix& omega) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(omega, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

}  // namespace detail

/// One iteration: build the subproblem target R_k and return its polar factor.
inline Matrix dc_step(const EwcState& state, const DataMatrix& Xs2, const Matrix& P_k) {
    if (P_k.rows() != Xs2.n_vars() || P_k.rows() != state.omega.rows())
        throw DimensionMismatch("dc_step: shape mismatch");
    const Matrix XtX = Xs2.values.transpose() * Xs2.values;
    const double c = detail::omega_spectral_max(state.omega);
    return detail::polar_factor(
        detail::dc_target(state.omega * state.anchor, state.omega, c, XtX, P_k));
}

/// Iterate from P_0 = anchor until the squared step norm falls below epsilon
/// or max_iters is reached.
inline DcSolution solve(const EwcState& state, const DataMatrix& Xs2, const DcConfig& cfg = {}) {
    if (!(cfg.epsilon > 0.0) || cfg.max_iters < 1)
        throw DimensionMismatch("solve: invalid DcConfig");
    if (state.anchor.rows() != Xs2.n_vars())
        throw DimensionMismatch("solve: anchor and data dimensions differ");

    const Matrix XtX = Xs2.values.transpose() * Xs2.values;
    const Matrix omega_anchor = state.omega * state.anchor;
    const double c = detail::omega_spectral_max(state.omega);

    DcSolution sol;
    Matrix P = state.anchor;
    for (int k = 0; k < cfg.max_iters; ++k) {
        Matrix P_next = detail::polar_factor(detail::dc_target(omega_anchor, state.omega, c, XtX, P));
        const double step = (P_next - P).squaredNorm();
        P = std::move(P_next);
        sol.iterations = k + 1;
        if (cfg.record_trace) {
            sol.objective_trace.push_back(objective(P, Xs2, state));
            sol.step_norm_trace.push_back(step);
        }
        if (step < cfg.epsilon) {
            sol.converged = true;
            break;
        }
    }
    sol.loadings = std::move(P);
    return sol;
}

}  // namespace pcaewc
