#include "aidsfit/elasticity.hpp"
#include "aidsfit/errors.hpp"
#include "aidsfit/indices.hpp"
#include "aidsfit/synth.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace aidsfit;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

CoefficientSet two_goods() {
    CoefficientSet c = CoefficientSet::zeros(2);
    c.alpha << 0.5, 0.5;
    c.beta << 0.1, -0.1;
    c.gamma << 0.05, -0.05, -0.05, 0.05;
    return c;
}

EvalPoint point(std::initializer_list<double> w, std::initializer_list<double> lnp) {
    EvalPoint p;
    p.shares = Eigen::Map<const VectorXd>(w.begin(), static_cast<Index>(w.size()));
    p.log_prices = Eigen::Map<const VectorXd>(lnp.begin(), static_cast<Index>(lnp.size()));
    return p;
}

// Shares of the nonlinear model at one point.
VectorXd shares_at(const CoefficientSet& c, const VectorXd& lnp, double lnx, double alpha0) {
    const double lnpi = translog_at(c.alpha, c.gamma, lnp, alpha0);
    return c.alpha + c.gamma * lnp + c.beta * (lnx - lnpi);
}

double log_quantity(const CoefficientSet& c, const VectorXd& lnp, double lnx, double alpha0, Index i) {
    return std::log(shares_at(c, lnp, lnx, alpha0)(i)) + lnx - lnp(i);
}

}  // namespace

TEST_CASE("cobb-douglas demands have unit own-price elasticity") {
    CoefficientSet c = CoefficientSet::zeros(3);
    c.alpha << 0.2, 0.3, 0.5;
    const auto e = marshallian(c, point({0.2, 0.3, 0.5}, {0.1, 0.2, 0.3}));
    CHECK((e + MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((expenditure(c, point({0.2, 0.3, 0.5}, {0, 0, 0})).array() - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("hand-evaluated elasticities") {
    const auto e = marshallian(two_goods(), point({0.5, 0.5}, {0, 0}));
    CHECK(e(0, 0) == doctest::Approx(-1.0));
    CoefficientSet c = CoefficientSet::zeros(2);
    c.alpha << 0.5, 0.5;
    c.beta << 0.05, -0.05;
    CHECK(expenditure(c, point({0.25, 0.75}, {0, 0}))(0) == doctest::Approx(1.2));
}

TEST_CASE("degenerate shares are rejected") {
    CHECK_THROWS_AS(marshallian(two_goods(), point({1e-7, 1.0 - 1e-7}, {0, 0})), DegenerateShareError);
    CHECK_THROWS_AS(expenditure(two_goods(), point({0.0, 1.0}, {0, 0})), DegenerateShareError);
    CHECK_THROWS_AS(marshallian(two_goods(), point({0.5, 0.5}, {0, 0, 0})), DimensionError);
}

TEST_CASE("elasticities match finite differences of the nonlinear demand") {
    const CoefficientSet c = default_truth(4);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 1.0);
    const double alpha0 = 0.3;
    const double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        VectorXd lnp(4);
        for (Index j = 0; j < 4; ++j) lnp(j) = 0.5 * z(rng);
        const double lnx = std::log(1000.0) + 0.3 * z(rng);
        EvalPoint at;
        at.log_prices = lnp;
        at.shares = shares_at(c, lnp, lnx, alpha0);
        const MatrixXd e = marshallian(c, at);
        const VectorXd eta = expenditure(c, at);
        for (Index i = 0; i < 4; ++i) {
            for (Index j = 0; j < 4; ++j) {
                const double fd = oracle::central(
                    [&](double x) {
                        VectorXd p = lnp;
                        p(j) = x;
                        return log_quantity(c, p, lnx, alpha0, i);
                    },
                    lnp(j), h);
                CHECK(std::abs(fd - e(i, j)) <= 1e-5 * std::max(1.0, std::abs(e(i, j))));
            }
            const double fd = oracle::central(
                [&](double x) { return log_quantity(c, lnp, x, alpha0, i); }, lnx, h);
            CHECK(std::abs(fd - eta(i)) <= 1e-5 * std::max(1.0, std::abs(eta(i))));
        }
    }
}

TEST_CASE("aggregation identities at a fitted solution") {
    const auto panel = fixtures::synthetic(4, 160, 0.005, 22);
    const auto fit = fit_aids(panel, {});
    const EvalPoint at = mean_point(panel);
    const MatrixXd e = marshallian(fit.coefficients, at);
    const VectorXd eta = expenditure(fit.coefficients, at);
    CHECK(std::abs(at.shares.dot(eta) - 1.0) < 1e-10);
    const VectorXd cournot = e.rowwise().sum() + eta;
    CHECK(cournot.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("delta-method gradient matches finite differences in coefficient space") {
    const auto panel = fixtures::synthetic(4, 160, 0.005, 23);
    ModelSpec spec;
    spec.model = ModelId::model_2;
    const auto fit = fit_aids(panel, spec);
    const auto layout = fit.layout();
    const EvalPoint at = mean_point(panel);
    const MatrixXd grad = elasticity_gradients(fit.coefficients, layout, fit.dropped_good, at);
    const MatrixXd full = to_matrix(fit.coefficients, layout);
    MatrixXd retained(3, layout.columns);
    for (Index r = 0, g = 0; g < 4; ++g) {
        if (g != static_cast<Index>(fit.dropped_good)) retained.row(r++) = full.row(g);
    }
    const VectorXd base = stack_coefficients(retained);
    auto values = [&](const VectorXd& v) {
        const auto c = complete_coefficients(unstack_coefficients(v, 3), spec, 4);
        const MatrixXd e = marshallian(c, at);
        const MatrixXd et = e.transpose();
        VectorXd out(20);
        out.head(16) = Eigen::Map<const VectorXd>(et.data(), 16);
        out.tail(4) = expenditure(c, at);
        return out;
    };
    const double h = 1e-5;
    for (Index p = 0; p < base.size(); ++p) {
        VectorXd up = base, down = base;
        up(p) += h;
        down(p) -= h;
        const VectorXd fd = (values(up) - values(down)) / (2.0 * h);
        CHECK((fd - grad.col(p)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("standard error of an expenditure elasticity") {
    const auto panel = fixtures::synthetic(3, 100, 0.005, 24);
    FitResult fit = fit_aids(panel, {});
    const auto layout = fit.layout();
    const double v = 4e-4;
    fit.coefficient_covariance.setZero();
    // Variance on beta of the first retained equation (good 0) only.
    fit.coefficient_covariance(0 * layout.columns + layout.real_expenditure(),
                               0 * layout.columns + layout.real_expenditure()) = v;
    const EvalPoint at = mean_point(panel);
    const auto se = std_errors(fit, at);
    CHECK(se.expenditure_se(0) == doctest::Approx(std::sqrt(v) / at.shares(0)));
    // The dropped good's beta is minus the sum of the retained ones.
    CHECK(se.expenditure_se(2) == doctest::Approx(std::sqrt(v) / at.shares(2)));
    CHECK(se.expenditure_se(1) == 0.0);
}

TEST_CASE("zero covariance codes every estimate as significant") {
    const auto panel = fixtures::synthetic(3, 60, 0.005, 25);
    FitResult fit = fit_aids(panel, {});
    fit.coefficient_covariance.setZero();
    const auto se = std_errors(fit, mean_point(panel));
    CHECK(se.marshallian_se.isZero());
    for (const auto& row : se.marshallian_codes) {
        for (const auto& code : row) CHECK(code == "***");
    }
    for (const auto& code : se.expenditure_codes) CHECK(code == "***");
}

TEST_CASE("non positive semidefinite covariance is rejected") {
    const auto panel = fixtures::synthetic(3, 60, 0.005, 26);
    FitResult fit = fit_aids(panel, {});
    fit.coefficient_covariance(0, 0) = -1.0;
    CHECK_THROWS_AS(std_errors(fit, mean_point(panel)), NumericalError);
}

TEST_CASE("significance codes follow two-sided normal p-values") {
    CHECK(significance_code(0.0005) == "***");
    CHECK(significance_code(0.005) == "**");
    CHECK(significance_code(0.02) == "*");
    CHECK(significance_code(0.07) == ".");
    CHECK(significance_code(0.5) == "");
    CHECK(significance_code(0.001) == "**");

    const auto panel = fixtures::synthetic(4, 160, 0.005, 27);
    const auto fit = fit_aids(panel, {});
    const auto se = std_errors(fit, mean_point(panel));
    const MatrixXd e = marshallian(fit.coefficients, mean_point(panel));
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) {
            const double p = std::erfc(std::abs(e(i, j) / se.marshallian_se(i, j)) / std::sqrt(2.0));
            CHECK(se.marshallian_p(i, j) == doctest::Approx(p));
            CHECK(se.marshallian_codes[i][j] == significance_code(p));
        }
    }
}

TEST_CASE("classification") {
    ElasticityReport r;
    r.goods = {"a", "b", "c", "d"};
    r.expenditure = (VectorXd(4) << 1.499, 0.808, 1.0, -0.2).finished();
    r.marshallian = MatrixXd::Zero(4, 4);
    r.marshallian(0, 0) = -2.639;
    r.marshallian(1, 1) = -0.650;
    r.marshallian(0, 3) = -0.330;
    r.marshallian(0, 1) = 0.138;
    classify(r);
    CHECK(r.good_classes[0] == GoodClass::luxury);
    CHECK(r.good_classes[1] == GoodClass::necessity);
    CHECK(r.good_classes[2] == GoodClass::necessity);
    CHECK(r.good_classes[3] == GoodClass::inferior);
    CHECK(r.pair_classes[0][3] == PairClass::complement);
    CHECK(r.pair_classes[0][1] == PairClass::substitute);
    CHECK(r.pair_classes[0][2] == PairClass::independent);
    CHECK(r.own_price_elastic[0]);
    CHECK_FALSE(r.own_price_elastic[1]);
    CHECK(to_string(GoodClass::luxury) == "luxury");
}

TEST_CASE("per-observation report averages the observation elasticities") {
    const auto panel = fixtures::synthetic(3, 50, 0.005, 28);
    const auto fit = fit_aids(panel, {});
    const auto rep = elasticity_report(fit, panel, EvalMode::per_observation);
    MatrixXd sum = MatrixXd::Zero(3, 3);
    for (std::size_t t = 0; t < 50; ++t) sum += marshallian(fit.coefficients, observation_point(panel, t));
    CHECK((rep.marshallian - sum / 50.0).cwiseAbs().maxCoeff() < 1e-12);
    const auto mean_rep = elasticity_report(fit, panel);
    CHECK(mean_rep.mode == EvalMode::sample_mean);
    CHECK(mean_rep.good_classes.size() == 3);
}
