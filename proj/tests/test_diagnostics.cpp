#include "aidsfit/diagnostics.hpp"
#include "aidsfit/synth.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace aidsfit;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// S_ij written out from the share equation, independent of the
// elasticity code path.
MatrixXd slutsky_oracle(const CoefficientSet& c, const EvalPoint& at) {
    const Index n = at.shares.size();
    const VectorXd price_effect = c.alpha + c.gamma * at.log_prices;
    MatrixXd s(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            s(i, j) = c.gamma(i, j) - (i == j ? at.shares(i) : 0.0) - c.beta(i) * price_effect(j) +
                      (at.shares(i) + c.beta(i)) * at.shares(j);
        }
    }
    return 0.5 * (s + s.transpose());
}

CoefficientSet peaked(double scale) {
    CoefficientSet c = CoefficientSet::zeros(4);
    c.alpha.setConstant(0.25);
    VectorXd v(4);
    v << 1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0;
    c.gamma = scale * v * v.transpose();
    return c;
}

EvalPoint uniform_point() {
    EvalPoint p;
    p.shares = VectorXd::Constant(4, 0.25);
    p.log_prices = VectorXd::Zero(4);
    return p;
}

}  // namespace

TEST_CASE("cobb-douglas slutsky matrix is negative semidefinite") {
    CoefficientSet c = CoefficientSet::zeros(4);
    c.alpha.setConstant(0.25);
    const EvalPoint at = uniform_point();
    const MatrixXd s = slutsky_matrix(c, at);
    MatrixXd expected(4, 4);
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) expected(i, j) = 0.25 * (0.25 - (i == j ? 1.0 : 0.0));
    }
    CHECK((s - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(oracle::max_eigenvalue(s) <= 1e-8);
    CHECK(slutsky_nsd(c, at));
}

TEST_CASE("single good slutsky scalar") {
    CoefficientSet c = CoefficientSet::zeros(1);
    c.alpha << 1.0;
    EvalPoint at;
    at.shares = VectorXd::Ones(1);
    at.log_prices = VectorXd::Zero(1);
    CHECK(slutsky_matrix(c, at)(0, 0) == doctest::Approx(0.0));
    CHECK(slutsky_nsd(c, at));
}

TEST_CASE("slutsky matrix agrees with the closed form") {
    const auto panel = fixtures::synthetic(4, 160, 0.005, 31);
    const auto fit = fit_aids(panel, {});
    for (std::size_t t : {0u, 50u, 159u}) {
        EvalPoint at = observation_point(panel, t);
        at.shares = fit.fitted_shares.row(static_cast<Index>(t)).transpose();
        const MatrixXd s = slutsky_matrix(fit.coefficients, at);
        CHECK((s - slutsky_oracle(fit.coefficients, at)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(s.rowwise().sum().cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("sign flip threshold of a peaked own-price coefficient") {
    // Fails once gamma_11 exceeds w_1 (1 - w_1) = 0.1875.
    const EvalPoint at = uniform_point();
    CHECK(slutsky_nsd(peaked(0.17), at));
    CHECK(oracle::max_eigenvalue(slutsky_matrix(peaked(0.17), at)) <= 1e-8);
    CHECK_FALSE(slutsky_nsd(peaked(0.20), at));
    CHECK(oracle::max_eigenvalue(slutsky_matrix(peaked(0.20), at)) > 1e-8);
}

TEST_CASE("regular synthetic panel passes both checks") {
    const auto panel = fixtures::synthetic(4, 160, 0.005, 32);
    const auto fit = fit_aids(panel, {});
    const auto r = check_regularity(fit, panel);
    CHECK(r.monotonicity_pct == 100.0);
    CHECK(r.concavity_pct == 100.0);
    CHECK(r.monotone.size() == 160);
    CHECK(r.concave.size() == 160);
}

TEST_CASE("noiseless default truth is concave") {
    const auto panel = fixtures::synthetic(4, 160, 0.0, 33);
    const auto fit = fit_aids(panel, {});
    CHECK(check_concavity(fit, panel).concavity_pct == 100.0);
}

TEST_CASE("concavity-violating panel") {
    auto cfg = default_config(4, 80, 0.0, 34);
    cfg.truth = peaked(0.4);
    cfg.price_process.log_start.setZero();
    const auto panel = fixtures::shares_of(generate(cfg));
    const auto fit = fit_aids(panel, {});
    const auto r = check_regularity(fit, panel);
    CHECK(r.monotonicity_pct == 100.0);
    CHECK(r.concavity_pct < 100.0);
}

TEST_CASE("single monotonicity violation") {
    const auto panel = fixtures::synthetic(3, 40, 0.005, 35);
    FitResult fit = fit_aids(panel, {});
    fit.fitted_shares(7, 0) = -0.01;
    fit.fitted_shares(7, 1) += 0.01;
    const auto r = check_monotonicity(fit);
    CHECK(r.monotonicity_pct == doctest::Approx(100.0 * 39.0 / 40.0));
    CHECK_FALSE(r.monotone[7]);

    const auto c = check_concavity(fit, panel);
    CHECK(c.degenerate[7]);
    CHECK_FALSE(c.concave[7]);
    CHECK(c.concavity_pct <= 100.0 * 39.0 / 40.0);
}
