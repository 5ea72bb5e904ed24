#include "aidsfit/errors.hpp"
#include "aidsfit/sur.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace aidsfit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Noisy {
    LinearSystem system;
    MatrixXd truth;
};

// m equations, k regressors (intercept + k-1 normal draws), correlated errors.
Noisy noisy_system(int T, int m, int k, double noise, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Noisy out;
    out.system.design.resize(T, k);
    for (int t = 0; t < T; ++t) {
        out.system.design(t, 0) = 1.0;
        for (int c = 1; c < k; ++c) out.system.design(t, c) = z(rng);
    }
    out.truth.resize(m, k);
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c < k; ++c) out.truth(i, c) = 0.1 * (i + 1) - 0.05 * c;
    }
    MatrixXd mix = MatrixXd::Identity(m, m);
    for (int i = 1; i < m; ++i) mix(i, i - 1) = 0.6;
    MatrixXd e(T, m);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < m; ++i) e(t, i) = noise * z(rng);
    }
    out.system.responses = out.system.design * out.truth.transpose() + e * mix.transpose();
    for (int i = 0; i < m; ++i) out.system.equation_labels.push_back("eq" + std::to_string(i));
    return out;
}

// Symmetry of coefficient (0, 2) and (1, 1) in a two-equation system: the
// cross-price pattern of a share system with two retained goods.
RestrictionSet cross_equal(int k) {
    RestrictionSet r{MatrixXd::Zero(1, 2 * k), VectorXd::Zero(1)};
    r.matrix(0, 0 * k + 2) = 1.0;
    r.matrix(0, 1 * k + 1) = -1.0;
    return r;
}

struct Kkt {
    VectorXd coefficients;
    MatrixXd covariance;
};

// Restricted GLS with a fixed weighting by the bordered (Lagrange) system.
Kkt restricted_gls(const LinearSystem& s, const RestrictionSet& r, const MatrixXd& sigma) {
    const auto m = s.n_equations();
    const auto k = s.n_regressors();
    const MatrixXd w = sigma.inverse();
    const MatrixXd ztz = s.design.transpose() * s.design;
    const MatrixXd zty = s.design.transpose() * s.responses;  // k x m
    const auto p = m * k;
    MatrixXd a(p, p);
    VectorXd rhs(p);
    for (Eigen::Index i = 0; i < m; ++i) {
        rhs.segment(i * k, k).setZero();
        for (Eigen::Index j = 0; j < m; ++j) {
            a.block(i * k, j * k, k, k) = w(i, j) * ztz;
            rhs.segment(i * k, k) += w(i, j) * zty.col(j);
        }
    }
    const auto q = r.rows();
    MatrixXd kkt = MatrixXd::Zero(p + q, p + q);
    kkt.topLeftCorner(p, p) = a;
    kkt.topRightCorner(p, q) = r.matrix.transpose();
    kkt.bottomLeftCorner(q, p) = r.matrix;
    VectorXd b(p + q);
    b << rhs, r.rhs;
    const MatrixXd inv = kkt.inverse();
    return {(inv * b).head(p), inv.topLeftCorner(p, p)};
}

}  // namespace

TEST_CASE("identity weighting without restrictions is equation-by-equation OLS") {
    const auto n = noisy_system(60, 3, 4, 0.3, 1);
    FitOptions opt;
    opt.weighting = Weighting::identity;
    const auto fit = fit_restricted(n.system, RestrictionSet::none(12), opt);
    const MatrixXd expected = oracle::ols(n.system.design, n.system.responses);
    CHECK((fit.coefficients - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("unrestricted FGLS with common regressors equals OLS") {
    const auto n = noisy_system(60, 3, 4, 0.3, 2);
    const auto fit = fit_restricted(n.system, RestrictionSet::none(12));
    const MatrixXd expected = oracle::ols(n.system.design, n.system.responses);
    CHECK((fit.coefficients - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("restrictions hold exactly") {
    const auto n = noisy_system(50, 2, 4, 0.5, 3);
    const auto r = cross_equal(4);
    for (auto w : {Weighting::identity, Weighting::fgls_once, Weighting::fgls_iterated}) {
        FitOptions opt;
        opt.weighting = w;
        const auto fit = fit_restricted(n.system, r, opt);
        const VectorXd resid = r.matrix * fit.stacked() - r.rhs;
        CHECK(resid.cwiseAbs().maxCoeff() < 1e-10);
        CHECK(fit.coefficients(0, 2) == doctest::Approx(fit.coefficients(1, 1)).epsilon(1e-12));
    }
}

TEST_CASE("non-zero restriction right-hand side") {
    const auto n = noisy_system(50, 2, 3, 0.5, 4);
    RestrictionSet r{MatrixXd::Zero(1, 6), VectorXd::Constant(1, 0.25)};
    r.matrix(0, 0) = 1.0;
    r.matrix(0, 3) = 1.0;
    const auto fit = fit_restricted(n.system, r);
    CHECK(fit.coefficients(0, 0) + fit.coefficients(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("iterated FGLS is a fixed point of restricted GLS") {
    const auto n = noisy_system(80, 2, 4, 0.4, 5);
    const auto r = cross_equal(4);
    const auto fit = fit_restricted(n.system, r);
    // One more weighted step from the converged state, solved independently.
    const Kkt next = restricted_gls(n.system, r, fit.residual_covariance);
    CHECK((next.coefficients - fit.stacked()).cwiseAbs().maxCoeff() < 1e-7);
    // At the fixed point the sandwich collapses to the restricted GLS covariance.
    const double scale = next.covariance.cwiseAbs().maxCoeff();
    CHECK((fit.coefficient_covariance - next.covariance).cwiseAbs().maxCoeff() < 1e-6 * scale);
    CHECK(fit.trace.back() < 1e-8);
}

TEST_CASE("noiseless system is recovered exactly") {
    auto n = noisy_system(40, 3, 4, 0.0, 6);
    const auto fit = fit_restricted(n.system, RestrictionSet::none(12));
    CHECK((fit.coefficients - n.truth).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.exact_fit);
    CHECK(std::isinf(fit.log_likelihood));
}

TEST_CASE("non-convergence carries the trace") {
    const auto n = noisy_system(30, 3, 4, 0.5, 7);
    RestrictionSet r{MatrixXd::Zero(1, 12), VectorXd::Zero(1)};
    r.matrix(0, 1) = 1.0;
    r.matrix(0, 5) = -1.0;
    FitOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-300;
    try {
        fit_restricted(n.system, r, opt);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.trace().size() == 1);
    }
}

TEST_CASE("nearly singular residual covariance") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 1.0);
    LinearSystem s;
    const int T = 200;
    s.design.resize(T, 2);
    s.responses.resize(T, 2);
    for (int t = 0; t < T; ++t) {
        s.design(t, 0) = 1.0;
        s.design(t, 1) = z(rng);
        s.responses(t, 0) = z(rng);
        s.responses(t, 1) = s.responses(t, 0) + 3e-7 * z(rng);
    }
    CHECK_THROWS_WITH_AS(fit_restricted(s, RestrictionSet::none(4)),
                         doctest::Contains("condition number"), NumericalError);
}

TEST_CASE("system validation") {
    auto n = noisy_system(5, 2, 5, 0.1, 9);
    CHECK_THROWS_AS(fit_restricted(n.system, RestrictionSet::none(10)), InsufficientDataError);

    auto z = noisy_system(30, 2, 3, 0.1, 10);
    z.system.design.col(2).setZero();
    CHECK_THROWS_AS(fit_restricted(z.system, RestrictionSet::none(6)), IdentificationError);

    auto d = noisy_system(30, 2, 3, 0.1, 11);
    d.system.design.col(2) = d.system.design.col(1);
    CHECK_THROWS_AS(fit_restricted(d.system, RestrictionSet::none(6)), IdentificationError);

    auto w = noisy_system(30, 2, 3, 0.1, 12);
    CHECK_THROWS_AS(fit_restricted(w.system, RestrictionSet::none(5)), DimensionError);
}

TEST_CASE("gaussian log-likelihood") {
    MatrixXd e(2, 1);
    e << -1.0, 1.0;
    CHECK(gaussian_log_likelihood(e) == doctest::Approx(-2.8379).epsilon(1e-4));

    std::mt19937_64 rng(13);
    std::normal_distribution<double> z(0.0, 1.0);
    MatrixXd r(20, 3);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = z(rng);
    const double c = 2.5;
    const double base = gaussian_log_likelihood(r);
    CHECK(gaussian_log_likelihood(c * r) ==
          doctest::Approx(base - 20.0 * 3.0 * std::log(c)).epsilon(1e-12));
    CHECK(gaussian_log_likelihood(r) == base);

    CHECK_THROWS_AS(gaussian_log_likelihood(MatrixXd::Zero(5, 2)), NumericalError);
    CHECK_THROWS_AS(gaussian_log_likelihood(MatrixXd::Ones(2, 2)), DimensionError);
}

TEST_CASE("stacking is equation-major") {
    MatrixXd b(2, 3);
    b << 1, 2, 3, 4, 5, 6;
    const VectorXd v = stack_coefficients(b);
    CHECK(v(0) == 1);
    CHECK(v(2) == 3);
    CHECK(v(3) == 4);
    CHECK(unstack_coefficients(v, 2) == b);
}
