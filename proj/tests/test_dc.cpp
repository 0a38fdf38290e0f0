#include "pcaewc/dc.hpp"
#include "pcaewc/pipeline.hpp"
#include "pcaewc/simgen.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace pcaewc;

namespace {

EwcState pipeline_state(std::uint64_t seed, Index n, Index m, Index l, double lambda_scale) {
    Rng rng(seed);
    const DataMatrix x1 = oracles::random_standardized_block(n, m, rng);
    const PcaModel pca = fit_pca(x1, 1.0);
    const Matrix f = fisher_matrix(x1);
    Matrix anchor = pca.loadings.leftCols(l);
    const double lambda = lambda_scale * static_cast<double>(m) / f.trace();
    return make_ewc_state(f, anchor, lambda, 1e-3);
}

}  // namespace

TEST_CASE("objective: convex/concave split agrees with loss-sum route") {
    Rng rng(41);
    for (int t = 0; t < 10; ++t) {
        const Index m = 6, l = 2;
        const EwcState state = pipeline_state(400 + static_cast<std::uint64_t>(t), 80, m, l, 1.0);
        const DataMatrix xs2 = oracles::random_standardized_block(80, m, rng);
        const Matrix p = oracles::random_orthonormal(m, l, rng);

        const Matrix xtx = xs2.values.transpose() * xs2.values;
        const double g = (p.transpose() * state.omega * p).trace() -
                         2.0 * (p.transpose() * state.omega * state.anchor).trace();
        const double h = (p.transpose() * xtx * p).trace();
        const double constant =
            xtx.trace() + (state.anchor.transpose() * state.omega * state.anchor).trace();
        CHECK(objective(p, xs2, state) == doctest::Approx(g - h + constant).epsilon(1e-9));
    }
}

TEST_CASE("objective: vanishing penalty leaves the reconstruction loss") {
    Rng rng(43);
    const DataMatrix xs2 = oracles::random_standardized_block(100, 5, rng);
    const PcaModel opt = fit_pca(xs2, 0.8);
    EwcState state;
    state.omega = 0.5 * 1e-12 * Matrix::Identity(5, 5);
    state.anchor = oracles::random_orthonormal(5, opt.n_components, rng);
    state.lambda_prior = 1e-12;
    CHECK(objective(opt.loadings, xs2, state) ==
          doctest::Approx(pca_loss(opt.loadings, xs2)).epsilon(1e-6));
}

TEST_CASE("objective: at the anchor the penalty term is zero") {
    const EwcState state = pipeline_state(47, 90, 6, 3, 1.0);
    Rng rng(48);
    const DataMatrix xs2 = oracles::random_standardized_block(90, 6, rng);
    CHECK(objective(state.anchor, xs2, state) ==
          doctest::Approx(pca_loss(state.anchor, xs2)).epsilon(1e-12));
}

TEST_CASE("subgradient: identity second moment gives 2P") {
    // four orthogonal rows of norm 1 make X'X exactly I
    Matrix x(4, 4);
    x.setZero();
    x(0, 0) = 1, x(1, 1) = 1, x(2, 2) = 1, x(3, 3) = 1;
    const DataMatrix xs(x);
    Rng rng(51);
    const Matrix p = oracles::random_orthonormal(4, 2, rng);
    CHECK((subgradient(xs, p) - 2.0 * p).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("subgradient: matches central finite differences of the concave part") {
    Rng rng(53);
    const DataMatrix xs = oracles::random_standardized_block(60, 4, rng);
    const Matrix p = oracles::random_orthonormal(4, 2, rng);
    const Matrix grad = subgradient(xs, p);
    const Matrix xtx = xs.values.transpose() * xs.values;
    auto h_of = [&](const Matrix& q) { return (q.transpose() * xtx * q).trace(); };
    const double eps = 1e-6;
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 2; ++j) {
            Matrix plus = p, minus = p;
            plus(i, j) += eps;
            minus(i, j) -= eps;
            const double fd = (h_of(plus) - h_of(minus)) / (2.0 * eps);
            CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("polar factor: orthonormal input is its own factor") {
    Rng rng(61);
    const Matrix q = oracles::random_orthonormal(6, 3, rng);
    CHECK((detail::polar_factor(q) - q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("polar factor: positive diagonal target maps to the truncated identity") {
    Matrix r = Matrix::Zero(5, 2);
    r(0, 0) = 3.0;
    r(1, 1) = 0.25;
    const Matrix p = detail::polar_factor(r);
    Matrix expected = Matrix::Zero(5, 2);
    expected(0, 0) = 1.0;
    expected(1, 1) = 1.0;
    CHECK((p - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dc_step: no random orthonormal candidate is closer to the target") {
    Rng rng(63);
    const Index m = 6, l = 2;
    const EwcState state = pipeline_state(64, 70, m, l, 1.0);
    const DataMatrix xs2 = oracles::random_standardized_block(70, m, rng);
    const Matrix pk = oracles::random_orthonormal(m, l, rng);

    const Matrix xtx = xs2.values.transpose() * xs2.values;
    const double c = detail::omega_spectral_max(state.omega);
    const Matrix target = detail::dc_target(state.omega * state.anchor, state.omega, c, xtx, pk);
    const Matrix step = dc_step(state, xs2, pk);
    const double best = (step - target).norm();
    for (int t = 0; t < 10000; ++t) {
        const Matrix cand = oracles::random_orthonormal(m, l, rng);
        CHECK(best <= (cand - target).norm() + 1e-12);
    }
}

TEST_CASE("solve: rejects an invalid configuration") {
    const EwcState state = pipeline_state(75, 50, 4, 2, 1.0);
    Rng rng(76);
    const DataMatrix xs2 = oracles::random_standardized_block(50, 4, rng);
    DcConfig bad;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(solve(state, xs2, bad), DimensionMismatch);
    bad.epsilon = 1e-10;
    bad.max_iters = 0;
    CHECK_THROWS_AS(solve(state, xs2, bad), DimensionMismatch);
}

TEST_CASE("dc_step: non-finite data is rejected") {
    const EwcState state = pipeline_state(65, 50, 4, 2, 1.0);
    Rng rng(66);
    DataMatrix xs2 = oracles::random_standardized_block(50, 4, rng);
    xs2.values(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(dc_step(state, xs2, state.anchor), SvdFailure);
}

TEST_CASE("solve: rerunning the anchor's own mode stays close and converges fast") {
    // two independent draws from the same process mode
    const DataMatrix raw1 = generate_block(1, 1000, 670);
    const DataMatrix raw2 = generate_block(1, 1000, 671);
    const DataMatrix x1 = apply_scaler(fit_scaler(raw1), raw1);
    const DataMatrix x2 = apply_scaler(fit_scaler(raw2), raw2);
    const PcaModel pca = fit_pca(x1, 0.998);
    const Matrix f = fisher_matrix(x1);
    const EwcState state =
        make_ewc_state(f, pca.loadings, static_cast<double>(f.rows()) / f.trace(), 1e-3);
    const DcSolution sol = solve(state, x2);
    CHECK(sol.converged);
    CHECK(sol.iterations <= 10);
    CHECK((sol.loadings - pca.loadings).norm() <= 0.5);
}

TEST_CASE("solve: lambda -> 0 recovers the plain principal subspace") {
    Rng rng(69);
    for (int t = 0; t < 5; ++t) {
        const Index m = 6, l = 2;
        const Matrix anchor = oracles::random_orthonormal(m, l, rng);
        const DataMatrix xs2 = oracles::random_standardized_block(200, m, rng);
        EwcState state;
        state.omega = make_omega(Matrix::Zero(m, m), 0.0, 1e-8);
        state.anchor = anchor;
        state.lambda_prior = 1e-8;
        DcConfig cfg;
        cfg.epsilon = 1e-14;
        cfg.max_iters = 5000;
        const DcSolution sol = solve(state, xs2, cfg);
        const Matrix plain = fit_pca(xs2, 1.0).loadings.leftCols(l);
        CHECK(oracles::largest_principal_angle(sol.loadings, plain) < 1e-3);
    }
}

TEST_CASE("solve: lambda -> infinity pins the anchor") {
    for (int t = 0; t < 5; ++t) {
        const EwcState state = pipeline_state(700 + static_cast<std::uint64_t>(t), 150, 7, 3, 1e8);
        Rng rng(800 + static_cast<std::uint64_t>(t));
        const DataMatrix xs2 = oracles::random_standardized_block(150, 7, rng);
        const DcSolution sol = solve(state, xs2);
        CHECK((sol.loadings - state.anchor).norm() < 1e-3);
    }
}

TEST_CASE("solve: objective trace is monotone and iterates stay orthonormal") {
    Rng rng(71);
    for (int t = 0; t < 10; ++t) {
        const Index m = 5 + (t % 4), l = 1 + (t % 3);
        // adversarial anchor unrelated to the penalty curvature
        const Matrix anchor = oracles::random_orthonormal(m, l, rng);
        Matrix b(m, m);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j) b(i, j) = rng.normal();
        EwcState state;
        state.omega = b * b.transpose() * std::pow(10.0, 1 + t % 4) +
                      1e-3 * Matrix::Identity(m, m);
        state.anchor = anchor;
        state.lambda_prior = 1e-3;
        const DataMatrix xs2 = oracles::random_standardized_block(100, m, rng);

        DcConfig cfg;
        cfg.record_trace = true;
        const DcSolution sol = solve(state, xs2, cfg);
        REQUIRE(!sol.objective_trace.empty());
        CHECK(sol.objective_trace[0] <= objective(state.anchor, xs2, state) + 1e-9);
        for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
            CHECK(sol.objective_trace[k] <= sol.objective_trace[k - 1] + 1e-9);

        Matrix p = state.anchor;
        for (int k = 0; k < 5; ++k) {
            p = dc_step(state, xs2, p);
            CHECK((p.transpose() * p - Matrix::Identity(l, l)).norm() <= 1e-10);
        }
    }
}

TEST_CASE("solve: returns at the first step below epsilon") {
    const DataMatrix raw1 = generate_block(1, 800, 730);
    const DataMatrix raw2 = generate_block(2, 800, 731);
    const DataMatrix x1 = apply_scaler(fit_scaler(raw1), raw1);
    const DataMatrix xs2 = apply_scaler(fit_scaler(raw2), raw2);
    const PcaModel pca = fit_pca(x1, 0.998);
    const Matrix f = fisher_matrix(x1);
    const EwcState state =
        make_ewc_state(f, pca.loadings, static_cast<double>(f.rows()) / f.trace(), 1e-3);
    DcConfig cfg;
    cfg.record_trace = true;
    const DcSolution sol = solve(state, xs2, cfg);
    REQUIRE(sol.converged);
    REQUIRE(sol.step_norm_trace.size() == static_cast<std::size_t>(sol.iterations));
    CHECK(sol.step_norm_trace.back() < cfg.epsilon);
    for (std::size_t k = 0; k + 1 < sol.step_norm_trace.size(); ++k)
        CHECK(sol.step_norm_trace[k] >= cfg.epsilon);
    // the returned loadings are themselves a fixed point of the step map
    const Matrix next = dc_step(state, xs2, sol.loadings);
    CHECK((next - sol.loadings).squaredNorm() < 10.0 * cfg.epsilon);

    SUBCASE("max_iters reached leaves converged unset without throwing") {
        DcConfig one;
        one.epsilon = 1e-30;
        one.max_iters = 1;
        const DcSolution s1 = solve(state, xs2, one);
        CHECK_FALSE(s1.converged);
        CHECK(s1.iterations == 1);
    }
}
