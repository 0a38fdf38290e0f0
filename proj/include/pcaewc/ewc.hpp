#pragma once

#include "pcaewc/types.hpp"

namespace pcaewc {

/// Quadratic penalty state carried across modes: the accumulated importance
/// matrix, the loadings it anchors to, and the weights that built it.
struct EwcState {
    Matrix omega;          // m x m, symmetric positive definite
    Matrix anchor;         // m x l, orthonormal columns
    double lambda_mode = 0.0;
    double lambda_prior = 0.0;
    int mode_count = 0;
};

/// Empirical second-moment matrix X'X/N, the curvature surrogate of the
/// reconstruction loss.
inline Matrix fisher_matrix(const DataMatrix& Xs) {
    Matrix f = (Xs.values.transpose() * Xs.values) / static_cast<double>(Xs.n_samples());
    return 0.5 * (f + f.transpose());
}

/// Omega = (lambda * F + lambda_prior * I) / 2.
inline Matrix make_omega(const Matrix& F, double lambda_mode, double lambda_prior) {
    if (F.rows() != F.cols()) throw DimensionMismatch("make_omega: F must be square");
    if (!(lambda_prior > 0.0)) throw NonPositivePrior("make_omega: lambda_prior must be > 0");
    if (lambda_mode < 0.0) throw Error("make_omega: lambda_mode must be >= 0");
    return 0.5 * (lambda_mode * F +
                  lambda_prior * Matrix::Identity(F.rows(), F.cols()));
}

inline EwcState make_ewc_state(const Matrix& F, const Matrix& anchor, double lambda_mode,
                               double lambda_prior) {
    if (anchor.rows() != F.rows())
        throw DimensionMismatch("make_ewc_state: anchor rows must match F");
    EwcState state;
    state.omega = make_omega(F, lambda_mode, lambda_prior);
    state.anchor = anchor;
    state.lambda_mode = lambda_mode;
    state.lambda_prior = lambda_prior;
    state.mode_count = 1;
    return state;
}

/// Absorb one more mode: Omega += lambda_new * F_new / 2, anchor moves to the
/// latest optimal loadings.
inline EwcState update_omega(const EwcState& state, const Matrix& F_new, double lambda_new,
                             const Matrix& new_anchor) {
    if (F_new.rows() != state.omega.rows() || F_new.cols() != state.omega.cols())
        throw DimensionMismatch("update_omega: F_new shape mismatch");
    if (new_anchor.rows() != state.anchor.rows() || new_anchor.cols() != state.anchor.cols())
        throw DimensionMismatch("update_omega: anchor shape mismatch");
    if (lambda_new < 0.0) throw Error("update_omega: lambda_new must be >= 0");
    EwcState out = state;
    out.omega = state.omega + 0.5 * lambda_new * F_new;
    out.anchor = new_anchor;
    out.lambda_mode = lambda_new;
    out.mode_count = state.mode_count + 1;
    return out;
}

/// tr((P - anchor)' Omega (P - anchor)); zero iff P equals the anchor.
inline double ewc_loss(const Matrix& P, const EwcState& state) {
    if (P.rows() != state.anchor.rows() || P.cols() != state.anchor.cols())
        throw DimensionMismatch("ewc_loss: P and anchor shapes differ");
    const Matrix d = P - state.anchor;
    return (d.transpose() * state.omega * d).trace();
}

}  // namespace pcaewc
