#include "aidsfit/elasticity.hpp"

#include "aidsfit/errors.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace aidsfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kMinShare = 1e-6;

void check_point(const CoefficientSet& coeffs, const EvalPoint& at) {
    const auto n = static_cast<Index>(coeffs.n_goods());
    if (at.shares.size() != n || at.log_prices.size() != n) {
        throw DimensionError("evaluation point does not match the number of goods");
    }
    for (Index i = 0; i < n; ++i) {
        if (!(at.shares(i) >= kMinShare)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "share of good %ld is %.3g, below %.0e",
                          static_cast<long>(i), at.shares(i), kMinShare);
            throw DegenerateShareError(buf);
        }
    }
}

double two_sided_p(double estimate, double se) {
    if (!std::isfinite(estimate)) return std::numeric_limits<double>::quiet_NaN();
    if (se == 0.0) return 0.0;
    return std::erfc(std::abs(estimate / se) / std::numbers::sqrt2);
}

void check_covariance(const MatrixXd& cov) {
    if (cov.size() == 0) return;
    if (!cov.allFinite()) throw NumericalError("coefficient covariance has non-finite entries");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (lo < -1e-10 * std::max(hi, 1e-300) && lo < -1e-300) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "coefficient covariance is not positive semidefinite (min eigenvalue %.3g)",
                      lo);
        throw NumericalError(buf);
    }
}

}  // namespace

EvalPoint mean_point(const SharePanel& panel) {
    EvalPoint p;
    p.shares = panel.shares().colwise().mean();
    p.log_prices = panel.log_prices().colwise().mean();
    return p;
}

EvalPoint observation_point(const SharePanel& panel, std::size_t t) {
    if (t >= panel.n_weeks()) throw DimensionError("observation index out of range");
    EvalPoint p;
    p.shares = panel.shares().row(static_cast<Index>(t)).transpose();
    p.log_prices = panel.log_prices().row(static_cast<Index>(t)).transpose();
    p.observation = t;
    return p;
}

MatrixXd marshallian(const CoefficientSet& coeffs, const EvalPoint& at) {
    check_point(coeffs, at);
    const auto n = static_cast<Index>(coeffs.n_goods());
    // d ln P / d ln p_j without alpha0.
    const VectorXd price_effect = coeffs.alpha + coeffs.gamma * at.log_prices;
    MatrixXd e(n, n);
    for (Index i = 0; i < n; ++i) {
        const double w = at.shares(i);
        for (Index j = 0; j < n; ++j) {
            e(i, j) = (i == j ? -1.0 : 0.0) + coeffs.gamma(i, j) / w -
                      coeffs.beta(i) / w * price_effect(j);
        }
    }
    return e;
}

VectorXd expenditure(const CoefficientSet& coeffs, const EvalPoint& at) {
    check_point(coeffs, at);
    return VectorXd::Ones(at.shares.size()) + coeffs.beta.cwiseQuotient(at.shares);
}

MatrixXd elasticity_gradients(const CoefficientSet& coeffs, const DesignLayout& layout,
                              std::size_t dropped_good, const EvalPoint& at) {
    check_point(coeffs, at);
    const Index n = layout.n_goods;
    const Index k = layout.columns;
    const Index m = n - 1;
    const auto d = static_cast<Index>(dropped_good);
    const VectorXd price_effect = coeffs.alpha + coeffs.gamma * at.log_prices;
    const Index beta_col = layout.real_expenditure();

    // Gradients with respect to the full n x k matrix, one row per
    // elasticity, flattened row-major (good, column).
    MatrixXd full = MatrixXd::Zero(n * n + n, n * k);
    auto at_full = [&](Index row, Index good, Index col) -> double& {
        return full(row, good * k + col);
    };
    for (Index i = 0; i < n; ++i) {
        const double w = at.shares(i);
        for (Index j = 0; j < n; ++j) {
            const Index row = i * n + j;
            at_full(row, i, layout.price(j)) += 1.0 / w;
            at_full(row, i, beta_col) += -price_effect(j) / w;
            at_full(row, j, DesignLayout::intercept) += -coeffs.beta(i) / w;
            for (Index kk = 0; kk < n; ++kk) {
                at_full(row, j, layout.price(kk)) += -coeffs.beta(i) / w * at.log_prices(kk);
            }
        }
        at_full(n * n + i, i, beta_col) += 1.0 / w;
    }

    // Chain through completion: the dropped row is minus the sum of the
    // retained rows (plus a constant).
    MatrixXd out(n * n + n, m * k);
    Index r = 0;
    for (Index g = 0; g < n; ++g) {
        if (g == d) continue;
        out.middleCols(r * k, k) = full.middleCols(g * k, k) - full.middleCols(d * k, k);
        ++r;
    }
    return out;
}

std::string_view significance_code(double p) {
    if (!(p == p)) return "";
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    if (p < 0.1) return ".";
    return "";
}

ElasticityErrors std_errors(const FitResult& fit, std::span<const EvalPoint> points) {
    if (points.empty()) throw DimensionError("std_errors needs at least one evaluation point");
    const auto layout = fit.layout();
    const Index n = layout.n_goods;
    const Index m = n - 1;
    if (fit.coefficient_covariance.rows() != m * layout.columns ||
        fit.coefficient_covariance.cols() != m * layout.columns) {
        throw DimensionError("coefficient covariance does not match the model layout");
    }
    check_covariance(fit.coefficient_covariance);

    MatrixXd grad = MatrixXd::Zero(n * n + n, m * layout.columns);
    MatrixXd eps = MatrixXd::Zero(n, n);
    VectorXd eta = VectorXd::Zero(n);
    for (const auto& p : points) {
        grad += elasticity_gradients(fit.coefficients, layout, fit.dropped_good, p);
        eps += marshallian(fit.coefficients, p);
        eta += expenditure(fit.coefficients, p);
    }
    const double count = static_cast<double>(points.size());
    grad /= count;
    eps /= count;
    eta /= count;

    const MatrixXd gv = grad * fit.coefficient_covariance;
    ElasticityErrors out;
    out.marshallian_se.resize(n, n);
    out.marshallian_p.resize(n, n);
    out.expenditure_se.resize(n);
    out.expenditure_p.resize(n);
    out.marshallian_codes.assign(static_cast<std::size_t>(n),
                                 std::vector<std::string>(static_cast<std::size_t>(n)));
    out.expenditure_codes.assign(static_cast<std::size_t>(n), std::string{});

    auto se_of = [&](Index row) {
        double var = gv.row(row).dot(grad.row(row));
        const double scale = gv.row(row).cwiseAbs().dot(grad.row(row).cwiseAbs());
        if (var < 0.0) {
            if (var < -1e-10 * std::max(scale, 1e-300)) {
                throw NumericalError("negative delta-method variance");
            }
            var = 0.0;
        }
        return std::sqrt(var);
    };
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double se = se_of(i * n + j);
            out.marshallian_se(i, j) = se;
            out.marshallian_p(i, j) = two_sided_p(eps(i, j), se);
            out.marshallian_codes[i][j] = significance_code(out.marshallian_p(i, j));
        }
        const double se = se_of(n * n + i);
        out.expenditure_se(i) = se;
        out.expenditure_p(i) = two_sided_p(eta(i), se);
        out.expenditure_codes[i] = significance_code(out.expenditure_p(i));
    }
    return out;
}

ElasticityErrors std_errors(const FitResult& fit, const EvalPoint& at) {
    return std_errors(fit, std::span<const EvalPoint>(&at, 1));
}

std::string_view to_string(GoodClass c) {
    switch (c) {
        case GoodClass::luxury: return "luxury";
        case GoodClass::necessity: return "necessity";
        case GoodClass::inferior: return "inferior";
    }
    return "";
}

std::string_view to_string(PairClass c) {
    switch (c) {
        case PairClass::substitute: return "substitute";
        case PairClass::complement: return "complement";
        case PairClass::independent: return "independent";
    }
    return "";
}

void classify(ElasticityReport& report) {
    const auto n = static_cast<std::size_t>(report.expenditure.size());
    report.good_classes.resize(n);
    report.own_price_elastic.resize(n);
    report.pair_classes.assign(n, std::vector<PairClass>(n, PairClass::independent));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Index>(i);
        const double eta = report.expenditure(ii);
        report.good_classes[i] = eta > 1.0   ? GoodClass::luxury
                                 : eta >= 0.0 ? GoodClass::necessity
                                              : GoodClass::inferior;
        report.own_price_elastic[i] = std::abs(report.marshallian(ii, ii)) > 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double e = report.marshallian(ii, static_cast<Index>(j));
            report.pair_classes[i][j] = e > 0.0   ? PairClass::substitute
                                        : e < 0.0 ? PairClass::complement
                                                  : PairClass::independent;
        }
    }
}

ElasticityReport elasticity_report(const FitResult& fit, const SharePanel& panel, EvalMode mode) {
    ElasticityReport report;
    report.goods = fit.goods;
    report.mode = mode;
    std::vector<EvalPoint> points;
    if (mode == EvalMode::sample_mean) {
        points.push_back(mean_point(panel));
    } else {
        for (std::size_t t = 0; t < panel.n_weeks(); ++t) points.push_back(observation_point(panel, t));
    }
    const auto n = static_cast<Index>(fit.goods.size());
    report.marshallian = MatrixXd::Zero(n, n);
    report.expenditure = VectorXd::Zero(n);
    for (const auto& p : points) {
        report.marshallian += marshallian(fit.coefficients, p);
        report.expenditure += expenditure(fit.coefficients, p);
    }
    report.marshallian /= static_cast<double>(points.size());
    report.expenditure /= static_cast<double>(points.size());
    report.errors = std_errors(fit, points);
    classify(report);
    return report;
}

}  // namespace aidsfit
