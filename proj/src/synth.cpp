#include "aidsfit/synth.hpp"

#include "aidsfit/errors.hpp"
#include "aidsfit/indices.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace aidsfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_truth(const CoefficientSet& c) {
    const auto n = static_cast<Index>(c.n_goods());
    if (n < 2) throw GenerationError("synthetic truth needs at least two goods");
    auto sized = [n](const VectorXd& v) { return v.size() == n; };
    if (!sized(c.beta) || !sized(c.lambda) || !sized(c.trig_cos) || !sized(c.trig_sin) ||
        !sized(c.trend) || !sized(c.logx) || c.gamma.rows() != n || c.gamma.cols() != n) {
        throw GenerationError("synthetic truth has inconsistent dimensions");
    }
    const double worst = restriction_residuals(c).max();
    if (!(worst <= 1e-12)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "synthetic truth violates the restrictions by %.3g", worst);
        throw GenerationError(buf);
    }
}

// Orthonormal basis (n x n-1) of the vectors summing to zero.
MatrixXd sum_zero_basis(Index n) {
    MatrixXd h = MatrixXd::Zero(n, n - 1);
    for (Index k = 1; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double scale = 1.0 / std::sqrt(kd * (kd + 1.0));
        h.col(k - 1).head(k).setConstant(scale);
        h(k, k - 1) = -kd * scale;
    }
    return h;
}

}  // namespace

MatrixXd model_shares(const CoefficientSet& truth, const MatrixXd& log_prices,
                      const VectorXd& log_expenditure, double alpha0, double trig_period) {
    const Index T = log_prices.rows();
    const auto n = static_cast<Index>(truth.n_goods());
    if (log_prices.cols() != n || log_expenditure.size() != T) {
        throw DimensionError("model_shares inputs disagree in shape");
    }
    const VectorXd lnp_index = translog_index(truth.alpha, truth.gamma, log_prices, alpha0).values;
    const VectorXd q = cobb_douglas_q(truth.beta, log_prices).values;
    const double omega = 2.0 * std::numbers::pi / trig_period;
    MatrixXd w(T, n);
    for (Index t = 0; t < T; ++t) {
        const double td = static_cast<double>(t);
        const double real = log_expenditure(t) - lnp_index(t);
        w.row(t) = (truth.alpha + truth.gamma * log_prices.row(t).transpose() + truth.beta * real +
                    truth.lambda * (real * real / q(t)) + truth.trig_cos * std::cos(omega * td) +
                    truth.trig_sin * std::sin(omega * td) + truth.trend * td +
                    truth.logx * log_expenditure(t))
                       .transpose();
    }
    return w;
}

MarketPanel generate(const SynthConfig& config) {
    const auto& truth = config.truth;
    check_truth(truth);
    const auto n = static_cast<Index>(truth.n_goods());
    const auto T = static_cast<Index>(config.weeks);
    if (T < 1) throw GenerationError("synthetic panel needs at least one week");
    if (!(config.noise_sd >= 0.0)) throw GenerationError("noise_sd must be non-negative");
    const auto& pp = config.price_process;
    if (pp.log_start.size() != n || pp.volatility.size() != n) {
        throw GenerationError("price process does not match the number of goods");
    }
    if (!(config.expenditure_process.mean > 0.0)) {
        throw GenerationError("mean expenditure must be positive");
    }

    std::mt19937_64 price_rng(pp.seed);
    std::mt19937_64 expenditure_rng(config.expenditure_process.seed);
    std::mt19937_64 noise_rng(config.noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    MatrixXd log_prices(T, n);
    VectorXd level = pp.log_start;
    for (Index t = 0; t < T; ++t) {
        if (t > 0) {
            for (Index j = 0; j < n; ++j) level(j) += pp.volatility(j) * normal(price_rng);
        }
        log_prices.row(t) = level.transpose();
    }
    VectorXd log_x(T);
    const double log_mean = std::log(config.expenditure_process.mean);
    for (Index t = 0; t < T; ++t) {
        log_x(t) = log_mean + config.expenditure_process.volatility * normal(expenditure_rng);
    }

    const MatrixXd base = model_shares(truth, log_prices, log_x, config.alpha0, config.trig_period);
    const MatrixXd basis = sum_zero_basis(n);
    MatrixXd shares(T, n);
    VectorXd z(n - 1);
    for (Index t = 0; t < T; ++t) {
        bool ok = false;
        for (int attempt = 0; attempt <= config.max_retries && !ok; ++attempt) {
            VectorXd w = base.row(t).transpose();
            if (config.noise_sd > 0.0) {
                for (Index k = 0; k < n - 1; ++k) z(k) = config.noise_sd * normal(noise_rng);
                w += basis * z;
            }
            ok = (w.array() > 0.0).all() && (w.array() < 1.0).all();
            if (ok) shares.row(t) = w.transpose();
            if (config.noise_sd == 0.0) break;
        }
        if (!ok) {
            throw GenerationError("week " + std::to_string(t + 1) +
                                  ": shares left (0, 1) after " +
                                  std::to_string(config.max_retries) +
                                  " retries; use a smaller noise_sd or a tamer truth");
        }
    }

    std::vector<std::string> goods = config.goods;
    if (goods.empty()) {
        for (Index j = 0; j < n; ++j) goods.push_back("good_" + std::to_string(j + 1));
    }
    if (static_cast<Index>(goods.size()) != n) {
        throw GenerationError("good labels do not match the number of goods");
    }
    std::vector<std::string> weeks;
    for (Index t = 0; t < T; ++t) weeks.push_back(std::to_string(t + 1));

    const MatrixXd prices = log_prices.array().exp();
    const VectorXd x = log_x.array().exp();
    const MatrixXd quantities = (shares.array().colwise() * x.array()) / prices.array();
    return MarketPanel(config.region, std::move(goods), std::move(weeks), prices, quantities);
}

CoefficientSet default_truth(std::size_t n) {
    if (n < 2) throw SpecificationError("default_truth needs at least two goods");
    CoefficientSet c = CoefficientSet::zeros(n);
    const auto ni = static_cast<Index>(n);
    if (n == 2) {
        c.alpha << 0.5, 0.5;
        c.beta << 0.05, -0.05;
        c.gamma << 0.05, -0.05, -0.05, 0.05;
    } else if (n == 4) {
        c.alpha << 0.10, 0.40, 0.20, 0.30;
        c.beta << 0.02, -0.03, -0.01, 0.02;
        c.gamma << 0.04, -0.01, -0.02, -0.01,
                   -0.01, 0.08, -0.03, -0.04,
                   -0.02, -0.03, 0.07, -0.02,
                   -0.01, -0.04, -0.02, 0.07;
    } else {
        const double nd = static_cast<double>(n);
        c.alpha.setConstant(1.0 / nd);
        for (Index i = 0; i < ni; ++i) {
            c.beta(i) = 0.02 * (static_cast<double>(i) - 0.5 * (nd - 1.0)) / nd;
        }
        // Small negative multiple of the centering matrix: symmetric, zero
        // row sums, negative semidefinite.
        const double g = 0.05 / nd;
        c.gamma = -g * (MatrixXd::Identity(ni, ni) - MatrixXd::Constant(ni, ni, 1.0 / nd));
    }
    return c;
}

SynthConfig default_config(std::size_t n, std::size_t weeks, double noise_sd, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.truth = default_truth(n);
    cfg.weeks = weeks;
    cfg.noise_sd = noise_sd;
    const auto ni = static_cast<Index>(n);
    cfg.price_process.log_start = VectorXd::Zero(ni);
    if (n == 4) cfg.price_process.log_start << std::log(20.0), std::log(14.5), std::log(9.0), std::log(7.4);
    cfg.price_process.volatility = VectorXd::Constant(ni, 0.03);
    cfg.price_process.seed = seed;
    cfg.expenditure_process.seed = seed + 1;
    cfg.noise_seed = seed + 2;
    return cfg;
}

}  // namespace aidsfit
