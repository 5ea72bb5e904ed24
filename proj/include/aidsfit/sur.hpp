#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace aidsfit {

/// m equations sharing one T x k regressor matrix.
struct LinearSystem {
    Eigen::MatrixXd responses;  // T x m
    Eigen::MatrixXd design;     // T x k
    std::vector<std::string> equation_labels;

    Eigen::Index n_obs() const noexcept { return design.rows(); }
    Eigen::Index n_equations() const noexcept { return responses.cols(); }
    Eigen::Index n_regressors() const noexcept { return design.cols(); }
};

/// Exact linear restrictions R * vec(B) = c.
///
/// vec(B) stacks the coefficient matrix B (m x k) equation by equation:
/// coefficient (i, c) sits at position i * k + c.
struct RestrictionSet {
    Eigen::MatrixXd matrix;  // r x (m*k)
    Eigen::VectorXd rhs;     // r

    static RestrictionSet none(Eigen::Index n_params) {
        return {Eigen::MatrixXd(0, n_params), Eigen::VectorXd(0)};
    }
    Eigen::Index rows() const noexcept { return matrix.rows(); }
};

enum class Weighting { identity, fgls_once, fgls_iterated };

struct FitOptions {
    Weighting weighting = Weighting::fgls_iterated;
    double tol = 1e-8;
    int max_iter = 100;
    /// Return the last iterate (converged = false) instead of throwing
    /// when max_iter is reached.
    bool allow_unconverged = false;
};

struct LinearFit {
    Eigen::MatrixXd coefficients;            // m x k
    Eigen::MatrixXd coefficient_covariance;  // (m*k) x (m*k), vec(B) order
    Eigen::MatrixXd residuals;               // T x m
    Eigen::MatrixXd residual_covariance;     // m x m, denominator T
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> trace;  // max-abs coefficient change per FGLS step
    /// Residuals vanish (to rounding) in at least one direction; the
    /// likelihood is unbounded and reported as +inf.
    bool exact_fit = false;

    Eigen::VectorXd stacked() const;
};

/// vec(B) in equation-major order, and its inverse.
Eigen::VectorXd stack_coefficients(const Eigen::MatrixXd& coefficients);
Eigen::MatrixXd unstack_coefficients(const Eigen::VectorXd& stacked, Eigen::Index n_equations);

/// Restricted (F)GLS for a system with common regressors.
///
/// Restrictions hold exactly: the estimator works on the null space of R.
/// Each weighted step solves the whitened stacked problem by QR. With
/// fgls_iterated the residual covariance and coefficients alternate until
/// the largest coefficient change drops below `tol`.
///
/// The covariance returned is the sandwich
///   N H^-1 N' (W S W (x) Z'Z) N H^-1 N',  H = N' (W (x) Z'Z) N,
/// with W the final weighting and S the final residual covariance; it
/// reduces to N H^-1 N' at an FGLS fixed point.
LinearFit fit_restricted(const LinearSystem& system, const RestrictionSet& restrictions,
                         const FitOptions& options = {});

/// Concentrated Gaussian log-likelihood
///   -T/2 (m ln 2pi + ln det S + m),  S = E'E / T.
double gaussian_log_likelihood(const Eigen::MatrixXd& residuals);

}  // namespace aidsfit
