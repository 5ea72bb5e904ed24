#pragma once

#include <Eigen/Dense>

namespace aidsfit {

enum class IndexKind { stone, translog, cobb_douglas };

/// One value per week. Stone and translog series hold ln P; the
/// Cobb-Douglas series holds the level Q (> 0).
struct PriceIndexSeries {
    IndexKind kind = IndexKind::stone;
    Eigen::VectorXd values;
    double alpha0 = 0.0;  // translog only
};

/// ln P*_t = sum_i w_it ln p_it.
PriceIndexSeries stone_index(const Eigen::MatrixXd& shares, const Eigen::MatrixXd& log_prices);

/// ln P_t = alpha0 + sum_i alpha_i ln p_it + 1/2 sum_ij gamma_ij ln p_it ln p_jt.
PriceIndexSeries translog_index(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& gamma,
                                const Eigen::MatrixXd& log_prices, double alpha0 = 0.0);

/// Q_t = prod_j p_jt^beta_j.
PriceIndexSeries cobb_douglas_q(const Eigen::VectorXd& beta, const Eigen::MatrixXd& log_prices);

/// Translog ln P at a single log-price vector.
double translog_at(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& gamma,
                   const Eigen::VectorXd& log_prices, double alpha0 = 0.0);

}  // namespace aidsfit
