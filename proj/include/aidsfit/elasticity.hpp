#pragma once

#include "aidsfit/aids.hpp"
#include "aidsfit/model_spec.hpp"
#include "aidsfit/panel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aidsfit {

/// Shares and log prices at which elasticities are evaluated.
struct EvalPoint {
    Eigen::VectorXd shares;
    Eigen::VectorXd log_prices;
    std::optional<std::size_t> observation;  // empty: sample mean
};

/// Sample-mean shares and sample-mean log prices.
EvalPoint mean_point(const SharePanel& panel);
EvalPoint observation_point(const SharePanel& panel, std::size_t t);

/// Marshallian elasticities
///   e_ij = -d_ij + g_ij / w_i - (b_i / w_i) (a_j + sum_k g_jk ln p_k).
/// Only alpha, beta and gamma enter; shifters act as intercept shifts.
/// Throws DegenerateShareError if some w_i < 1e-6.
Eigen::MatrixXd marshallian(const CoefficientSet& coeffs, const EvalPoint& at);

/// Expenditure elasticities eta_i = 1 + b_i / w_i.
Eigen::VectorXd expenditure(const CoefficientSet& coeffs, const EvalPoint& at);

/// Jacobian of (vec_rowmajor(marshallian), expenditure) with respect to
/// the retained coefficients in vec(B) order, EvalPoint held fixed.
/// Rows: n*n Marshallian entries (i*n + j) then n expenditure entries.
Eigen::MatrixXd elasticity_gradients(const CoefficientSet& coeffs, const DesignLayout& layout,
                                     std::size_t dropped_good, const EvalPoint& at);

/// R-style significance legend from a two-sided p-value.
std::string_view significance_code(double p_value);

struct ElasticityErrors {
    Eigen::MatrixXd marshallian_se;
    Eigen::VectorXd expenditure_se;
    Eigen::MatrixXd marshallian_p;
    Eigen::VectorXd expenditure_p;
    std::vector<std::vector<std::string>> marshallian_codes;
    std::vector<std::string> expenditure_codes;
};

/// Delta-method standard errors and significance codes. With several
/// points the elasticities and gradients are averaged across them.
ElasticityErrors std_errors(const FitResult& fit, const EvalPoint& at);
ElasticityErrors std_errors(const FitResult& fit, std::span<const EvalPoint> points);

enum class GoodClass { luxury, necessity, inferior };
enum class PairClass { substitute, complement, independent };

std::string_view to_string(GoodClass c);
std::string_view to_string(PairClass c);

enum class EvalMode { sample_mean, per_observation };

struct ElasticityReport {
    std::vector<std::string> goods;
    EvalMode mode = EvalMode::sample_mean;
    Eigen::MatrixXd marshallian;
    Eigen::VectorXd expenditure;
    ElasticityErrors errors;

    // Filled by classify().
    std::vector<GoodClass> good_classes;
    std::vector<std::vector<PairClass>> pair_classes;  // diagonal entries unused
    std::vector<bool> own_price_elastic;
};

/// Luxury if eta > 1, necessity if 0 <= eta <= 1 (the eta = 1 boundary is
/// a necessity), inferior if eta < 0. Pairs: substitutes if e_ij > 0,
/// complements if e_ij < 0. Own price elastic if |e_ii| > 1.
void classify(ElasticityReport& report);

ElasticityReport elasticity_report(const FitResult& fit, const SharePanel& panel,
                                   EvalMode mode = EvalMode::sample_mean);

}  // namespace aidsfit
