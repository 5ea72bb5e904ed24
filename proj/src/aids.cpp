#include "aidsfit/aids.hpp"

#include "aidsfit/indices.hpp"
#include "aidsfit/sur.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdio>
#include <limits>

namespace aidsfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

template <class F>
LinearFit with_iteration_context(int iteration, F&& fit) {
    const std::string where = "ILLE iteration " + std::to_string(iteration) + ": ";
    try {
        return fit();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(where + e.what(), e.trace());
    } catch (const IdentificationError& e) {
        throw IdentificationError(where + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    } catch (const InsufficientDataError& e) {
        throw InsufficientDataError(where + e.what());
    }
}

// Constant up to rounding (shares rebuilt from p q / X are not exact).
bool constant_series(const VectorXd& v) {
    return v.maxCoeff() - v.minCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff();
}

double r2(const VectorXd& observed, const VectorXd& fitted) {
    if (constant_series(observed)) return std::numeric_limits<double>::quiet_NaN();
    const double mean = observed.mean();
    const double sst = (observed.array() - mean).square().sum();
    const double ssr = (observed - fitted).squaredNorm();
    return 1.0 - ssr / sst;
}

RSquared r_squared_unchecked(const MatrixXd& fitted_shares, const SharePanel& panel) {
    const auto n = static_cast<Index>(panel.n_goods());
    const auto& market = panel.source();
    const MatrixXd fitted_q = (fitted_shares.array().colwise() * panel.total_expenditure().array()) /
                              market.prices().array();
    RSquared out;
    out.shares.resize(n);
    out.quantities.resize(n);
    for (Index i = 0; i < n; ++i) {
        out.shares(i) = r2(panel.shares().col(i), fitted_shares.col(i));
        out.quantities(i) = r2(market.quantities().col(i), fitted_q.col(i));
    }
    return out;
}

MatrixXd fitted_from(const SharePanel& panel, const ModelSpec& spec, const CoefficientSet& coeffs,
                     const VectorXd& log_price_index, const std::optional<VectorXd>& stage1_beta) {
    const auto layout = layout_for(spec.model, panel.n_goods());
    VectorXd q;
    if (layout.quadratic >= 0) q = cobb_douglas_q(*stage1_beta, panel.log_prices()).values;
    const VectorXd log_x = panel.total_expenditure().array().log();
    const MatrixXd z =
        design_matrix(layout, panel.log_prices(), log_x, log_price_index, q, spec.trig_period);
    return z * to_matrix(coeffs, layout).transpose();
}

}  // namespace

FitResult fit_aids(const SharePanel& panel, const ModelSpec& spec,
                   std::optional<VectorXd> stage1_beta) {
    const std::size_t n = panel.n_goods();
    validate(spec, n);
    if (spec.model == ModelId::model_1 && !stage1_beta) {
        ModelSpec base = spec;
        base.model = ModelId::model_4;
        stage1_beta = fit_aids(panel, base).coefficients.beta;
    }
    if (spec.model != ModelId::model_1 && stage1_beta) {
        throw SpecificationError("stage-1 beta is only used by Model_1");
    }

    const auto layout = layout_for(spec.model, n);
    const auto restrictions = restrictions_for(spec, n);
    const Index m = static_cast<Index>(n) - 1;
    // Early outer steps may stop FGLS at its cap; the accepted step may not.
    const FitOptions inner{Weighting::fgls_iterated, spec.fgls_tol, spec.fgls_max_iter, true};

    VectorXd log_price_index = stone_index(panel.shares(), panel.log_prices()).values;
    LinearFit last;
    CoefficientSet coeffs;
    VectorXd previous;
    Convergence conv;

    for (int iter = 0; iter < spec.ille_max_iter; ++iter) {
        const LinearSystem system = build_design(panel, spec, log_price_index, stage1_beta);
        last = with_iteration_context(
            iter, [&] { return fit_restricted(system, restrictions, inner); });
        coeffs = complete_coefficients(last, spec, n);
        log_price_index =
            translog_index(coeffs.alpha, coeffs.gamma, panel.log_prices(), spec.alpha0).values;
        const VectorXd current = last.stacked();
        ++conv.iterations;
        if (previous.size() == current.size()) {
            conv.final_delta = (current - previous).cwiseAbs().maxCoeff();
            conv.trace.push_back(conv.final_delta);
            if (conv.final_delta < spec.ille_tol) {
                if (!last.converged) {
                    throw ConvergenceError("ILLE iteration " + std::to_string(iter) +
                                               ": iterated FGLS did not converge in " +
                                               std::to_string(spec.fgls_max_iter) +
                                               " iterations (last change " +
                                               format_double(last.trace.back()) + ")",
                                           last.trace);
                }
                conv.converged = true;
                break;
            }
        }
        previous = current;
    }

    FitResult result;
    result.spec = spec;
    result.goods = panel.source().goods();
    result.dropped_good = spec.dropped(n);
    result.n_weeks = panel.n_weeks();
    result.coefficients = coeffs;
    result.coefficient_covariance = last.coefficient_covariance;
    result.residual_covariance = last.residual_covariance;
    result.log_likelihood = last.log_likelihood;
    result.exact_fit = last.exact_fit;
    result.n_free_parameters = static_cast<int>(m * layout.columns - restrictions.rows() +
                                                m * (m + 1) / 2);
    result.translog_index = log_price_index;
    result.stage1_beta = stage1_beta;
    result.fitted_shares = fitted_from(panel, spec, coeffs, log_price_index, stage1_beta);
    const auto rsq = r_squared_unchecked(result.fitted_shares, panel);
    result.r2_shares = rsq.shares;
    result.r2_quantities = rsq.quantities;
    result.convergence = conv;

    if (!conv.converged) {
        const std::string message =
            "ILLE did not converge in " + std::to_string(spec.ille_max_iter) +
            " iterations (last change " + format_double(conv.final_delta) + ")";
        throw IlleConvergenceError(message, conv.trace,
                                   std::make_shared<const FitResult>(std::move(result)));
    }
    return result;
}

MatrixXd predict_shares(const SharePanel& panel, const FitResult& fit) {
    if (panel.n_goods() != fit.goods.size() || panel.n_weeks() != fit.n_weeks) {
        throw DimensionError("fit and panel disagree in shape");
    }
    return fitted_from(panel, fit.spec, fit.coefficients, fit.translog_index, fit.stage1_beta);
}

RSquared r_squared(const FitResult& fit, const SharePanel& panel) {
    if (panel.n_goods() != fit.goods.size() || panel.n_weeks() != fit.n_weeks) {
        throw DimensionError("fit and panel disagree in shape");
    }
    const auto n = static_cast<Index>(panel.n_goods());
    const auto& market = panel.source();
    for (Index i = 0; i < n; ++i) {
        const auto& name = market.goods()[static_cast<std::size_t>(i)];
        if (constant_series(panel.shares().col(i))) {
            throw DataError("R-squared undefined for good '" + name + "': constant observed shares");
        }
        if (constant_series(market.quantities().col(i))) {
            throw DataError("R-squared undefined for good '" + name +
                            "': constant observed quantities");
        }
    }
    return r_squared_unchecked(fit.fitted_shares, panel);
}

double chi_square_upper_tail(double stat, double df) {
    if (!(df > 0.0)) throw SpecificationError("chi-square degrees of freedom must be positive");
    if (!(stat > 0.0)) return 1.0;
    if (std::isinf(stat)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * stat);
}

LRResult lr_test(const FitResult& full, const FitResult& nested) {
    if (full.goods != nested.goods || full.n_weeks != nested.n_weeks) {
        throw SpecificationError("likelihood-ratio test needs two fits on the same panel");
    }
    if (!std::isfinite(full.log_likelihood) || !std::isfinite(nested.log_likelihood)) {
        throw NumericalError("likelihood-ratio test needs finite log-likelihoods");
    }
    LRResult out;
    out.df = full.n_free_parameters - nested.n_free_parameters;
    out.stat = 2.0 * (full.log_likelihood - nested.log_likelihood);
    if (out.df == 0 && full.log_likelihood == nested.log_likelihood) {
        // Degenerate comparison of a model with itself.
        out.stat = 0.0;
        out.p_value = 1.0;
        return out;
    }
    if (out.df <= 0) {
        throw SpecificationError("nested model must have fewer free parameters (df = " +
                                 std::to_string(out.df) + ")");
    }
    out.negative_stat = out.stat < 0.0;
    out.p_value = chi_square_upper_tail(out.stat, out.df);
    return out;
}

}  // namespace aidsfit
