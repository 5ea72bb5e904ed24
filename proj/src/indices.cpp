#include "aidsfit/indices.hpp"

#include "aidsfit/errors.hpp"

#include <cmath>
#include <string>

namespace aidsfit {

namespace {

void require_columns(Eigen::Index expected, const Eigen::MatrixXd& log_prices, const char* what) {
    if (log_prices.cols() != expected) {
        throw DimensionError(std::string(what) + " has " + std::to_string(expected) +
                             " entries but log prices have " + std::to_string(log_prices.cols()) +
                             " columns");
    }
}

}  // namespace

PriceIndexSeries stone_index(const Eigen::MatrixXd& shares, const Eigen::MatrixXd& log_prices) {
    if (shares.rows() != log_prices.rows() || shares.cols() != log_prices.cols()) {
        throw DimensionError("shares and log prices differ in shape");
    }
    PriceIndexSeries out;
    out.kind = IndexKind::stone;
    out.values = shares.cwiseProduct(log_prices).rowwise().sum();
    return out;
}

PriceIndexSeries translog_index(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& gamma,
                                const Eigen::MatrixXd& log_prices, double alpha0) {
    require_columns(alpha.size(), log_prices, "alpha");
    if (gamma.rows() != alpha.size() || gamma.cols() != alpha.size()) {
        throw DimensionError("gamma must be n x n with n = size of alpha");
    }
    PriceIndexSeries out;
    out.kind = IndexKind::translog;
    out.alpha0 = alpha0;
    // Row-wise quadratic form: diag(L gamma L').
    const Eigen::MatrixXd lg = log_prices * gamma.transpose();
    out.values = (log_prices * alpha).array() + alpha0 +
                 0.5 * lg.cwiseProduct(log_prices).rowwise().sum().array();
    return out;
}

PriceIndexSeries cobb_douglas_q(const Eigen::VectorXd& beta, const Eigen::MatrixXd& log_prices) {
    require_columns(beta.size(), log_prices, "beta");
    PriceIndexSeries out;
    out.kind = IndexKind::cobb_douglas;
    out.values = (log_prices * beta).array().exp();
    return out;
}

double translog_at(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& gamma,
                   const Eigen::VectorXd& log_prices, double alpha0) {
    if (alpha.size() != log_prices.size() || gamma.rows() != alpha.size() ||
        gamma.cols() != alpha.size()) {
        throw DimensionError("translog_at: inconsistent sizes");
    }
    return alpha0 + alpha.dot(log_prices) + 0.5 * log_prices.dot(gamma * log_prices);
}

}  // namespace aidsfit
