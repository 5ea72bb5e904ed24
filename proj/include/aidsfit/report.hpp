#pragma once

#include "aidsfit/aids.hpp"
#include "aidsfit/diagnostics.hpp"
#include "aidsfit/elasticity.hpp"
#include "aidsfit/panel.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace aidsfit {

/// printf-style fixed notation; NaN and infinities spelled out.
std::string format_fixed(double value, int digits);
/// Full round-trip precision for machine-readable CSV.
std::string format_exact(double value);
/// Four decimals, or "<2e-16" below double epsilon.
std::string format_p_value(double p);

// Summary statistics (rows Minimum, Maximum, Mean, SD, CV(%); quantity
// columns then price columns).
std::string summary_csv(const SummaryTable& table);
std::string summary_markdown(const SummaryTable& table);
nlohmann::ordered_json to_json(const SummaryTable& table);

nlohmann::ordered_json to_json(const CoefficientSet& coeffs);
nlohmann::ordered_json to_json(const RegularityReport& report);
nlohmann::ordered_json to_json(const FitResult& fit, const RegularityReport* regularity = nullptr);

/// R-squared of shares and quantities, one column pair per model (percent).
std::string r2_csv(const std::vector<const FitResult*>& fits);
std::string r2_markdown(const std::string& region, const std::vector<const FitResult*>& fits);

struct LRRow {
    std::string label;
    int n_params = 0;
    double log_likelihood = 0.0;
    std::optional<LRResult> test;  // empty for the reference row
};

struct LRTable {
    std::string region;
    std::string title;
    std::vector<LRRow> rows;
};

/// Reference row first, then each nested model tested against it.
LRTable lr_table(std::string region, std::string title, const FitResult& reference,
                 const std::vector<const FitResult*>& nested);
std::string lr_csv(const std::vector<LRTable>& tables);
std::string lr_markdown(const std::vector<LRTable>& tables);
nlohmann::ordered_json to_json(const LRTable& table);

struct RegionElasticities {
    std::string region;
    ModelId model = ModelId::model_4;
    ElasticityReport report;
    RegularityReport regularity;
};

/// Min, mean, max and sample SD across regions, per good: n price columns
/// plus the expenditure column.
struct ElasticitySummary {
    std::vector<std::string> goods;
    std::vector<std::string> regions;
    std::vector<Eigen::VectorXd> min, mean, max, sd;  // one per good, length n+1
};

ElasticitySummary summarize_elasticities(const std::vector<RegionElasticities>& regions);

/// Stacked layout: one row per (good, region).
std::string elasticity_csv(const std::vector<RegionElasticities>& regions);
std::string elasticity_markdown(const std::vector<RegionElasticities>& regions);
std::string elasticity_summary_csv(const ElasticitySummary& summary);
std::string elasticity_summary_markdown(const ElasticitySummary& summary);
std::string regularity_csv(const std::vector<RegionElasticities>& regions);
nlohmann::ordered_json to_json(const RegionElasticities& region);
nlohmann::ordered_json to_json(const ElasticitySummary& summary);

}  // namespace aidsfit
