#include "aidsfit/sur.hpp"

#include "aidsfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

namespace aidsfit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Residual-covariance eigenvalues below kExactFitRatio * (response variance)
// are rounding noise: the equations are fitted exactly in that direction.
constexpr double kExactFitRatio = 1e-14;
// Beyond this condition number the weighting matrix is treated as singular.
constexpr double kMaxCondition = 1e12;
constexpr double kRankThreshold = 1e-11;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

void validate(const LinearSystem& system, const RestrictionSet& restrictions) {
    const Index T = system.n_obs();
    const Index m = system.n_equations();
    const Index k = system.n_regressors();
    if (system.responses.rows() != T) {
        throw DimensionError("responses have " + std::to_string(system.responses.rows()) +
                             " rows but design has " + std::to_string(T));
    }
    if (m < 1 || k < 1) throw DimensionError("system needs at least one equation and regressor");
    if (T <= k) {
        throw InsufficientDataError("need more observations (" + std::to_string(T) +
                                    ") than regressors (" + std::to_string(k) + ")");
    }
    if (!system.design.allFinite() || !system.responses.allFinite()) {
        throw NumericalError("system contains non-finite values");
    }
    for (Index c = 0; c < k; ++c) {
        if (system.design.col(c).cwiseAbs().maxCoeff() == 0.0) {
            throw IdentificationError("design column " + std::to_string(c) + " is all zero");
        }
    }
    if (restrictions.matrix.cols() != m * k) {
        throw DimensionError("restriction matrix has " + std::to_string(restrictions.matrix.cols()) +
                             " columns, expected m*k = " + std::to_string(m * k));
    }
    if (restrictions.rhs.size() != restrictions.matrix.rows()) {
        throw DimensionError("restriction right-hand side length does not match its rows");
    }
    if (restrictions.matrix.rows() >= m * k) {
        throw IdentificationError("too many restrictions for the number of coefficients");
    }
}

struct Reparameterization {
    MatrixXd basis;       // (m*k) x p, orthonormal null space of R
    VectorXd particular;  // satisfies R b0 = c
};

Reparameterization null_space(const RestrictionSet& restrictions, Index n_params) {
    const Index r = restrictions.rows();
    if (r == 0) {
        return {MatrixXd::Identity(n_params, n_params), VectorXd::Zero(n_params)};
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(restrictions.matrix.transpose());
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < r) {
        throw IdentificationError("restriction matrix is rank deficient (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(r) +
                                  " rows)");
    }
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n_params, n_params);
    Reparameterization out;
    out.basis = q.rightCols(n_params - r);
    const MatrixXd& R = restrictions.matrix;
    out.particular = R.transpose() * (R * R.transpose()).ldlt().solve(restrictions.rhs);
    return out;
}

struct Weight {
    MatrixXd whitener;  // P with W = P'P
    MatrixXd inverse;   // W
    bool degenerate = false;
    bool all_exact = false;
};

Weight identity_weight(Index m) {
    return {MatrixXd::Identity(m, m), MatrixXd::Identity(m, m), false, false};
}

Weight weight_from(const MatrixXd& sigma, double scale) {
    if (!sigma.allFinite()) throw NumericalError("residual covariance has non-finite entries");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
    VectorXd lambda = es.eigenvalues();
    const double tiny = kExactFitRatio * scale;
    const double lmax = lambda.maxCoeff();
    const Index m = sigma.rows();
    if (lmax <= tiny) {
        Weight w = identity_weight(m);
        w.degenerate = true;
        w.all_exact = true;
        return w;
    }
    double smallest = lmax;
    for (Index i = 0; i < m; ++i) {
        if (lambda(i) > tiny) smallest = std::min(smallest, lambda(i));
    }
    if (lmax / smallest > kMaxCondition) {
        throw NumericalError("singular weighting matrix: residual covariance condition number " +
                             format_double(lmax / smallest));
    }
    Weight w;
    for (Index i = 0; i < m; ++i) {
        if (lambda(i) <= tiny) {
            // Exactly fitted direction: any positive weight gives the same
            // solution; reuse the best-determined real one.
            lambda(i) = smallest;
            w.degenerate = true;
        }
    }
    const MatrixXd& v = es.eigenvectors();
    w.whitener = lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    w.inverse = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
    return w;
}

struct Step {
    MatrixXd coefficients;
    MatrixXd h_inverse;  // (N' (W (x) Z'Z) N)^-1
};

Step weighted_step(const LinearSystem& system, const Reparameterization& rp, const Weight& weight) {
    const Index T = system.n_obs();
    const Index m = system.n_equations();
    const MatrixXd& Z = system.design;

    // Whitened stacked problem: y~ = vec(Y P'), X~ = P (x) Z.
    const MatrixXd y_white = system.responses * weight.whitener.transpose();
    VectorXd y(m * T);
    for (Index i = 0; i < m; ++i) y.segment(i * T, T) = y_white.col(i);
    const MatrixXd x = kron(weight.whitener, Z);
    const MatrixXd a = x * rp.basis;
    const VectorXd rhs = y - x * rp.particular;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < a.cols()) {
        throw IdentificationError("restricted normal equations are rank deficient (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(a.cols()) +
                                  " free coefficients)");
    }
    const VectorXd theta = qr.solve(rhs);
    const VectorXd b = rp.particular + rp.basis * theta;

    const Index p = a.cols();
    const MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
    const auto& perm = qr.colsPermutation();
    Step out;
    out.h_inverse = perm * (r_inv * r_inv.transpose()) * perm.transpose();
    out.coefficients = unstack_coefficients(b, m);
    return out;
}

double response_scale(const MatrixXd& y) {
    const double T = static_cast<double>(y.rows());
    const MatrixXd centered = y.rowwise() - y.colwise().mean();
    double scale = centered.squaredNorm() / (T * static_cast<double>(y.cols()));
    if (scale <= 0.0) scale = y.squaredNorm() / (T * static_cast<double>(y.cols()));
    return scale > 0.0 ? scale : 1.0;
}

}  // namespace

VectorXd stack_coefficients(const MatrixXd& coefficients) {
    const MatrixXd t = coefficients.transpose();
    return Eigen::Map<const VectorXd>(t.data(), t.size());
}

MatrixXd unstack_coefficients(const VectorXd& stacked, Index n_equations) {
    const Index k = stacked.size() / n_equations;
    return Eigen::Map<const MatrixXd>(stacked.data(), k, n_equations).transpose();
}

VectorXd LinearFit::stacked() const { return stack_coefficients(coefficients); }

LinearFit fit_restricted(const LinearSystem& system, const RestrictionSet& restrictions,
                         const FitOptions& options) {
    validate(system, restrictions);
    const Index T = system.n_obs();
    const Index m = system.n_equations();
    const Index k = system.n_regressors();
    const auto rp = null_space(restrictions, m * k);
    const double scale = response_scale(system.responses);

    auto residuals_of = [&](const MatrixXd& b) -> MatrixXd {
        return system.responses - system.design * b.transpose();
    };
    auto covariance_of = [&](const MatrixXd& e) -> MatrixXd {
        return (e.transpose() * e) / static_cast<double>(T);
    };

    LinearFit fit;
    Weight weight = identity_weight(m);
    Step step = weighted_step(system, rp, weight);
    MatrixXd resid = residuals_of(step.coefficients);
    MatrixXd sigma = covariance_of(resid);
    fit.iterations = 1;

    if (options.weighting != Weighting::identity) {
        const int cap = options.weighting == Weighting::fgls_once ? 1 : options.max_iter;
        bool converged = false;
        for (int it = 0; it < cap; ++it) {
            const Weight next = weight_from(sigma, scale);
            if (next.all_exact) {
                converged = true;
                break;
            }
            weight = next;
            Step updated = weighted_step(system, rp, weight);
            const double delta =
                (stack_coefficients(updated.coefficients) - stack_coefficients(step.coefficients))
                    .cwiseAbs()
                    .maxCoeff();
            fit.trace.push_back(delta);
            step = std::move(updated);
            resid = residuals_of(step.coefficients);
            sigma = covariance_of(resid);
            ++fit.iterations;
            if (options.weighting == Weighting::fgls_once || delta < options.tol) {
                converged = true;
                break;
            }
        }
        fit.converged = converged;
        if (!converged && !options.allow_unconverged) {
            throw ConvergenceError("iterated FGLS did not converge in " +
                                       std::to_string(options.max_iter) + " iterations (last change " +
                                       format_double(fit.trace.back()) + ")",
                                   fit.trace);
        }
    }

    fit.coefficients = step.coefficients;
    fit.residuals = resid;
    fit.residual_covariance = sigma;

    const MatrixXd ztz = system.design.transpose() * system.design;
    const MatrixXd wsw = weight.inverse * sigma * weight.inverse;
    const MatrixXd meat = rp.basis.transpose() * kron(wsw, ztz) * rp.basis;
    const MatrixXd cov_theta = step.h_inverse * meat * step.h_inverse;
    fit.coefficient_covariance = rp.basis * cov_theta * rp.basis.transpose();
    fit.coefficient_covariance =
        0.5 * (fit.coefficient_covariance + fit.coefficient_covariance.transpose());

    Eigen::SelfAdjointEigenSolver<MatrixXd> final_es(sigma, Eigen::EigenvaluesOnly);
    if (final_es.eigenvalues().minCoeff() <= kExactFitRatio * scale) {
        fit.exact_fit = true;
        fit.log_likelihood = std::numeric_limits<double>::infinity();
    } else {
        fit.log_likelihood = gaussian_log_likelihood(resid);
    }
    return fit;
}

double gaussian_log_likelihood(const MatrixXd& residuals) {
    const Index T = residuals.rows();
    const Index m = residuals.cols();
    if (T <= m) {
        throw DimensionError("log-likelihood needs more observations than equations");
    }
    const MatrixXd sigma = residuals.transpose() * residuals / static_cast<double>(T);
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("residual covariance is singular; log-likelihood undefined");
    }
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    if (!std::isfinite(log_det)) {
        throw NumericalError("residual covariance is singular; log-likelihood undefined");
    }
    const double md = static_cast<double>(m);
    return -0.5 * static_cast<double>(T) * (md * std::log(2.0 * std::numbers::pi) + log_det + md);
}

}  // namespace aidsfit
