#include "aidsfit/errors.hpp"
#include "aidsfit/indices.hpp"

#include <doctest.h>

#include <cmath>

using namespace aidsfit;

TEST_CASE("stone index") {
    Eigen::MatrixXd w(1, 2), lnp(1, 2);
    w << 0.25, 0.75;
    lnp << 1.0, 2.0;
    const auto s = stone_index(w, lnp);
    CHECK(s.kind == IndexKind::stone);
    CHECK(s.values(0) == doctest::Approx(1.75));
}

TEST_CASE("translog index by hand") {
    Eigen::VectorXd a(2);
    a << 0.5, 0.5;
    Eigen::MatrixXd g(2, 2);
    g << 0.1, -0.1, -0.1, 0.1;
    Eigen::MatrixXd lnp(1, 2);
    lnp << std::log(2.0), 0.0;
    // 0.5 ln 2 + 0.5 * 0.1 (ln 2)^2
    const double expected = 0.5 * std::log(2.0) + 0.05 * std::log(2.0) * std::log(2.0);
    CHECK(translog_index(a, g, lnp).values(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.37059).epsilon(1e-5));
    CHECK(translog_index(a, g, lnp, 0.3).values(0) == doctest::Approx(expected + 0.3));
    CHECK(translog_at(a, g, lnp.row(0).transpose()) == doctest::Approx(expected));
}

TEST_CASE("translog reduces to the stone form with gamma zero and equal shares") {
    Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    Eigen::MatrixXd lnp = Eigen::MatrixXd::Random(5, 3);
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(5, 3, 1.0 / 3.0);
    const auto tl = translog_index(a, Eigen::MatrixXd::Zero(3, 3), lnp);
    const auto st = stone_index(w, lnp);
    CHECK((tl.values - st.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("translog is homogeneous of degree one in prices under the restrictions") {
    Eigen::VectorXd a(3);
    a << 0.2, 0.3, 0.5;
    Eigen::MatrixXd g(3, 3);
    g << 0.1, -0.04, -0.06, -0.04, 0.07, -0.03, -0.06, -0.03, 0.09;
    Eigen::MatrixXd lnp(1, 3);
    lnp << 0.3, -0.2, 1.1;
    const double c = 0.7;
    const Eigen::MatrixXd shifted = lnp.array() + c;
    CHECK(translog_index(a, g, shifted).values(0) ==
          doctest::Approx(translog_index(a, g, lnp).values(0) + c).epsilon(1e-12));
}

TEST_CASE("cobb-douglas aggregate") {
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    Eigen::MatrixXd lnp(1, 2);
    lnp << std::log(2.0), std::log(5.0);
    CHECK(cobb_douglas_q(b, lnp).values(0) == doctest::Approx(2.0));
    Eigen::VectorXd half(2);
    half << 0.5, -0.5;
    Eigen::MatrixXd lnp2(1, 2);
    lnp2 << std::log(4.0), 0.0;
    CHECK(cobb_douglas_q(half, lnp2).values(0) == doctest::Approx(2.0));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK(cobb_douglas_q(zero, lnp).values(0) == doctest::Approx(1.0));
}

TEST_CASE("index shape errors") {
    Eigen::MatrixXd w(2, 2), lnp(2, 3);
    w.setConstant(0.5);
    lnp.setZero();
    CHECK_THROWS_AS(stone_index(w, lnp), DimensionError);
    Eigen::VectorXd a(2);
    a << 0.5, 0.5;
    CHECK_THROWS_AS(translog_index(a, Eigen::MatrixXd::Zero(3, 3), lnp), DimensionError);
    CHECK_THROWS_AS(cobb_douglas_q(a, lnp), DimensionError);
}
