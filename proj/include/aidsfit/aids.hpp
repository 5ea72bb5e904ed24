#pragma once

#include "aidsfit/errors.hpp"
#include "aidsfit/model_spec.hpp"
#include "aidsfit/panel.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aidsfit {

struct Convergence {
    int iterations = 0;
    double final_delta = 0.0;
    bool converged = false;
    std::vector<double> trace;  // max-abs change of retained coefficients per iteration
};

struct FitResult {
    ModelSpec spec;
    std::vector<std::string> goods;
    std::size_t dropped_good = 0;
    std::size_t n_weeks = 0;
    CoefficientSet coefficients;
    /// Covariance of the retained coefficients, vec order of the (n-1) x k
    /// retained matrix (equation-major).
    Eigen::MatrixXd coefficient_covariance;
    Eigen::MatrixXd residual_covariance;
    double log_likelihood = 0.0;
    /// Free coefficients after restrictions plus the m(m+1)/2 residual
    /// covariance parameters.
    int n_free_parameters = 0;
    Eigen::VectorXd translog_index;
    Eigen::MatrixXd fitted_shares;
    Convergence convergence;
    Eigen::VectorXd r2_shares;      // NaN where the observed series is constant
    Eigen::VectorXd r2_quantities;
    std::optional<Eigen::VectorXd> stage1_beta;  // Model_1 only
    bool exact_fit = false;

    DesignLayout layout() const { return layout_for(spec.model, goods.size()); }
};

/// Thrown when the outer iteration hits ille_max_iter. Holds the last
/// (non-final) estimate.
class IlleConvergenceError : public ConvergenceError {
public:
    IlleConvergenceError(const std::string& what, std::vector<double> trace,
                         std::shared_ptr<const FitResult> partial)
        : ConvergenceError(what, std::move(trace)), partial_(std::move(partial)) {}

    const std::shared_ptr<const FitResult>& partial() const noexcept { return partial_; }

private:
    std::shared_ptr<const FitResult> partial_;
};

/// Iterated linear least squares: start from the Stone index, fit the
/// restricted system by iterated FGLS, rebuild the translog index from the
/// completed alpha and gamma, repeat until the coefficients settle.
///
/// Model_1 needs a stage-1 beta for Q; when absent a Model_4 fit on the
/// same panel supplies it.
FitResult fit_aids(const SharePanel& panel, const ModelSpec& spec,
                   std::optional<Eigen::VectorXd> stage1_beta = std::nullopt);

/// Fitted shares from coefficients on the model's own design. Rows sum to 1.
Eigen::MatrixXd predict_shares(const SharePanel& panel, const FitResult& fit);

struct RSquared {
    Eigen::VectorXd shares;
    Eigen::VectorXd quantities;
};

/// 1 - SSR/SST per good for shares and for implied quantities
/// q_hat = w_hat X / p. No clamping: large negative values are kept.
/// Throws DataError when an observed series has zero variance.
RSquared r_squared(const FitResult& fit, const SharePanel& panel);

struct LRResult {
    double stat = 0.0;
    int df = 0;
    double p_value = 1.0;
    /// stat < 0: the richer model fits worse, usually a convergence symptom.
    bool negative_stat = false;
};

LRResult lr_test(const FitResult& full, const FitResult& nested);

/// P(chi2_df > stat).
double chi_square_upper_tail(double stat, double df);

}  // namespace aidsfit
