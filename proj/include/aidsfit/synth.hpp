#pragma once

#include "aidsfit/model_spec.hpp"
#include "aidsfit/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace aidsfit {

/// Independent Gaussian random walks in log prices.
struct PriceProcess {
    Eigen::VectorXd log_start;   // ln p at week 0
    Eigen::VectorXd volatility;  // step SD per good
    std::uint64_t seed = 1;
};

/// ln X_t = ln(mean) + volatility * z_t, z_t iid standard normal.
struct ExpenditureProcess {
    double mean = 1000.0;
    double volatility = 0.15;
    std::uint64_t seed = 2;
};

struct SynthConfig {
    CoefficientSet truth;
    std::size_t weeks = 160;
    PriceProcess price_process;
    ExpenditureProcess expenditure_process;
    double noise_sd = 0.0;
    std::uint64_t noise_seed = 3;
    double alpha0 = 0.0;
    double trig_period = 4.0;
    int max_retries = 100;  // per observation
    std::string region = "synthetic";
    std::vector<std::string> goods;  // default good_1..good_n
};

/// Draws a panel from the share equations of `truth`.
///
/// Nonzero shifters in `truth` enter as in the design matrix (week index
/// t = 0..T-1); the quadratic term uses Q from the truth beta.
/// Disturbances are drawn in n-1 dimensions and rotated onto the
/// sum-zero subspace. An observation whose shares leave (0, 1) is redrawn;
/// after `max_retries` GenerationError is thrown.
MarketPanel generate(const SynthConfig& config);

/// Noise-free shares implied by `truth` at the given log prices and log
/// expenditures (T x n).
Eigen::MatrixXd model_shares(const CoefficientSet& truth, const Eigen::MatrixXd& log_prices,
                             const Eigen::VectorXd& log_expenditure, double alpha0,
                             double trig_period);

/// Canonical restriction-consistent truth with interior shares.
CoefficientSet default_truth(std::size_t n);

/// default_truth(n) with the default processes, seeds derived from `seed`.
SynthConfig default_config(std::size_t n, std::size_t weeks, double noise_sd, std::uint64_t seed);

}  // namespace aidsfit
