#include "aidsfit/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace aidsfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& cells, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += sep;
        out += cells[i];
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::vector<std::string> quoted;
    for (const auto& c : cells) quoted.push_back(csv_field(c));
    return join(quoted, ",") + "\n";
}

std::string md_row(const std::vector<std::string>& cells) {
    return "| " + join(cells, " | ") + " |\n";
}

std::string md_rule(std::size_t columns) {
    std::string out = "|";
    for (std::size_t i = 0; i < columns; ++i) out += "---|";
    return out + "\n";
}

ordered_json vec_json(const VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

ordered_json mat_json(const MatrixXd& m) {
    ordered_json a = ordered_json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

ordered_json flags_json(const std::vector<bool>& flags) {
    ordered_json a = ordered_json::array();
    for (bool f : flags) a.push_back(f);
    return a;
}

const char* const kStatNames[] = {"Minimum", "Maximum", "Mean", "SD", "CV(%)"};

double stat_of(const SeriesStats& s, int which) {
    switch (which) {
        case 0: return s.min;
        case 1: return s.max;
        case 2: return s.mean;
        case 3: return s.sd;
        default: return s.cv;
    }
}

std::vector<std::string> summary_header(const SummaryTable& t) {
    std::vector<std::string> h{"statistic"};
    for (const auto& g : t.goods) h.push_back("quantity_" + g);
    for (const auto& g : t.goods) h.push_back("price_" + g);
    return h;
}

double percent(double r) { return 100.0 * r; }

std::string with_code(double value, double p, int digits) {
    return format_fixed(value, digits) + std::string(significance_code(p));
}

}  // namespace

std::string format_fixed(double value, int digits) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    std::string s = buf;
    // Avoid "-0.000".
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

std::string format_exact(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string format_p_value(double p) {
    if (std::isnan(p)) return "NaN";
    if (p < std::numeric_limits<double>::epsilon()) return "<2e-16";
    return format_fixed(p, 4);
}

std::string summary_csv(const SummaryTable& table) {
    std::string out = csv_row(summary_header(table));
    for (int s = 0; s < 5; ++s) {
        std::vector<std::string> row{kStatNames[s]};
        for (const auto& q : table.quantities) row.push_back(format_exact(stat_of(q, s)));
        for (const auto& p : table.prices) row.push_back(format_exact(stat_of(p, s)));
        out += csv_row(row);
    }
    return out;
}

std::string summary_markdown(const SummaryTable& table) {
    std::string out = "## Summary statistics: " + table.region + "\n\n";
    std::vector<std::string> head{""};
    for (const auto& g : table.goods) head.push_back("Q " + g);
    for (const auto& g : table.goods) head.push_back("P " + g);
    out += md_row(head) + md_rule(head.size());
    for (int s = 0; s < 5; ++s) {
        std::vector<std::string> row{kStatNames[s]};
        for (const auto& q : table.quantities) row.push_back(format_fixed(stat_of(q, s), 2));
        for (const auto& p : table.prices) row.push_back(format_fixed(stat_of(p, s), 2));
        out += md_row(row);
    }
    return out;
}

ordered_json to_json(const SummaryTable& table) {
    ordered_json j;
    j["region"] = table.region;
    j["goods"] = table.goods;
    auto stats = [](const std::vector<SeriesStats>& v) {
        ordered_json a = ordered_json::array();
        for (const auto& s : v) {
            a.push_back({{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"sd", s.sd},
                         {"cv", s.cv}});
        }
        return a;
    };
    j["quantities"] = stats(table.quantities);
    j["prices"] = stats(table.prices);
    return j;
}

ordered_json to_json(const CoefficientSet& c) {
    ordered_json j;
    j["alpha"] = vec_json(c.alpha);
    j["beta"] = vec_json(c.beta);
    j["gamma"] = mat_json(c.gamma);
    j["lambda"] = vec_json(c.lambda);
    j["trig_cos"] = vec_json(c.trig_cos);
    j["trig_sin"] = vec_json(c.trig_sin);
    j["trend"] = vec_json(c.trend);
    j["log_expenditure"] = vec_json(c.logx);
    return j;
}

ordered_json to_json(const RegularityReport& r) {
    ordered_json j;
    j["monotonicity_pct"] = r.monotonicity_pct;
    j["concavity_pct"] = r.concavity_pct;
    j["monotone"] = flags_json(r.monotone);
    j["concave"] = flags_json(r.concave);
    j["degenerate"] = flags_json(r.degenerate);
    return j;
}

ordered_json to_json(const FitResult& fit, const RegularityReport* regularity) {
    ordered_json j;
    j["model"] = to_string(fit.spec.model);
    j["goods"] = fit.goods;
    j["dropped_good"] = fit.goods.at(fit.dropped_good);
    j["weeks"] = fit.n_weeks;
    j["converged"] = fit.convergence.converged;
    j["iterations"] = fit.convergence.iterations;
    j["final_delta"] = fit.convergence.final_delta;
    j["trace"] = fit.convergence.trace;
    j["exact_fit"] = fit.exact_fit;
    j["log_likelihood"] = fit.log_likelihood;  // null when infinite
    j["n_free_parameters"] = fit.n_free_parameters;
    ordered_json spec;
    spec["alpha0"] = fit.spec.alpha0;
    spec["trig_period"] = fit.spec.trig_period;
    spec["ille_tol"] = fit.spec.ille_tol;
    spec["ille_max_iter"] = fit.spec.ille_max_iter;
    spec["homogeneity"] = fit.spec.restrictions.homogeneity;
    spec["symmetry"] = fit.spec.restrictions.symmetry;
    j["spec"] = spec;
    j["coefficients"] = to_json(fit.coefficients);
    if (fit.stage1_beta) j["stage1_beta"] = vec_json(*fit.stage1_beta);
    j["coefficient_covariance"] = mat_json(fit.coefficient_covariance);
    j["residual_covariance"] = mat_json(fit.residual_covariance);
    j["r2_shares"] = vec_json(fit.r2_shares);
    j["r2_quantities"] = vec_json(fit.r2_quantities);
    if (regularity) j["regularity"] = to_json(*regularity);
    return j;
}

std::string r2_csv(const std::vector<const FitResult*>& fits) {
    std::vector<std::string> head{"good"};
    for (const auto* f : fits) {
        head.push_back(to_string(f->spec.model) + "_shares");
        head.push_back(to_string(f->spec.model) + "_quantities");
    }
    std::string out = csv_row(head);
    if (fits.empty()) return out;
    const auto& goods = fits.front()->goods;
    for (std::size_t i = 0; i < goods.size(); ++i) {
        std::vector<std::string> row{goods[i]};
        for (const auto* f : fits) {
            row.push_back(format_exact(f->r2_shares(static_cast<Index>(i))));
            row.push_back(format_exact(f->r2_quantities(static_cast<Index>(i))));
        }
        out += csv_row(row);
    }
    return out;
}

std::string r2_markdown(const std::string& region, const std::vector<const FitResult*>& fits) {
    std::string out = "## R-squared (%): " + region + "\n\n";
    std::vector<std::string> head{"good"};
    for (const auto* f : fits) {
        head.push_back(to_string(f->spec.model) + " Es");
        head.push_back(to_string(f->spec.model) + " Qt");
    }
    out += md_row(head) + md_rule(head.size());
    if (fits.empty()) return out;
    const auto& goods = fits.front()->goods;
    for (std::size_t i = 0; i < goods.size(); ++i) {
        std::vector<std::string> row{goods[i]};
        for (const auto* f : fits) {
            row.push_back(format_fixed(percent(f->r2_shares(static_cast<Index>(i))), 1));
            row.push_back(format_fixed(percent(f->r2_quantities(static_cast<Index>(i))), 1));
        }
        out += md_row(row);
    }
    out += "\nEs = expenditure shares, Qt = quantities.\n";
    return out;
}

LRTable lr_table(std::string region, std::string title, const FitResult& reference,
                 const std::vector<const FitResult*>& nested) {
    LRTable t;
    t.region = std::move(region);
    t.title = std::move(title);
    t.rows.push_back({to_string(reference.spec.model), reference.n_free_parameters,
                      reference.log_likelihood, std::nullopt});
    for (const auto* f : nested) {
        t.rows.push_back({to_string(f->spec.model), f->n_free_parameters, f->log_likelihood,
                          lr_test(reference, *f)});
    }
    return t;
}

std::string lr_csv(const std::vector<LRTable>& tables) {
    std::string out = csv_row({"region", "table", "model", "n_params", "log_lik", "df", "chisq",
                               "p_value", "code"});
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            std::vector<std::string> row{t.region, t.title, r.label, std::to_string(r.n_params),
                                         format_exact(r.log_likelihood)};
            if (r.test) {
                row.push_back(std::to_string(-r.test->df));
                row.push_back(format_exact(r.test->stat));
                row.push_back(format_exact(r.test->p_value));
                row.push_back(std::string(significance_code(r.test->p_value)));
            } else {
                row.insert(row.end(), {"", "", "", ""});
            }
            out += csv_row(row);
        }
    }
    return out;
}

std::string lr_markdown(const std::vector<LRTable>& tables) {
    std::string out;
    for (const auto& t : tables) {
        out += "## " + t.title + ": " + t.region + "\n\n";
        const std::vector<std::string> head{"", "#Df", "LogLik", "Df", "Chisq", "Pr(>Chisq)"};
        out += md_row(head) + md_rule(head.size());
        bool negative = false;
        for (const auto& r : t.rows) {
            std::vector<std::string> row{r.label, std::to_string(r.n_params),
                                         format_fixed(r.log_likelihood, 1)};
            if (r.test) {
                row.push_back(std::to_string(-r.test->df));
                row.push_back(format_fixed(r.test->stat, 4));
                row.push_back(format_p_value(r.test->p_value) +
                              std::string(significance_code(r.test->p_value)));
                negative = negative || r.test->negative_stat;
            } else {
                row.insert(row.end(), {"", "", ""});
            }
            out += md_row(row);
        }
        out += "\nSignif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
        if (negative) {
            out += "Warning: a negative statistic means the larger model fits worse; check convergence.\n";
        }
        out += "\n";
    }
    return out;
}

ordered_json to_json(const LRTable& t) {
    ordered_json j;
    j["region"] = t.region;
    j["title"] = t.title;
    j["rows"] = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json row;
        row["model"] = r.label;
        row["n_params"] = r.n_params;
        row["log_likelihood"] = r.log_likelihood;
        if (r.test) {
            row["df"] = -r.test->df;
            row["chisq"] = r.test->stat;
            row["p_value"] = r.test->p_value;
            row["code"] = std::string(significance_code(r.test->p_value));
            row["negative_stat"] = r.test->negative_stat;
        }
        j["rows"].push_back(row);
    }
    return j;
}

ElasticitySummary summarize_elasticities(const std::vector<RegionElasticities>& regions) {
    ElasticitySummary s;
    if (regions.empty()) return s;
    s.goods = regions.front().report.goods;
    const auto n = static_cast<Index>(s.goods.size());
    const auto count = static_cast<double>(regions.size());
    for (const auto& r : regions) s.regions.push_back(r.region);
    for (Index i = 0; i < n; ++i) {
        VectorXd lo = VectorXd::Constant(n + 1, std::numeric_limits<double>::infinity());
        VectorXd hi = -lo;
        VectorXd sum = VectorXd::Zero(n + 1);
        std::vector<VectorXd> rows;
        for (const auto& r : regions) {
            VectorXd v(n + 1);
            v.head(n) = r.report.marshallian.row(i).transpose();
            v(n) = r.report.expenditure(i);
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
            sum += v;
            rows.push_back(v);
        }
        const VectorXd mean = sum / count;
        VectorXd ss = VectorXd::Zero(n + 1);
        for (const auto& v : rows) ss += (v - mean).cwiseAbs2();
        VectorXd sd = regions.size() > 1 ? VectorXd((ss / (count - 1.0)).cwiseSqrt())
                                         : VectorXd::Constant(n + 1, std::nan(""));
        s.min.push_back(lo);
        s.mean.push_back(mean);
        s.max.push_back(hi);
        s.sd.push_back(sd);
    }
    return s;
}

std::string elasticity_csv(const std::vector<RegionElasticities>& regions) {
    if (regions.empty()) return "";
    const auto& goods = regions.front().report.goods;
    std::vector<std::string> head{"good", "region", "model"};
    for (const auto& g : goods) head.push_back(g);
    head.push_back("expenditure");
    for (const auto& g : goods) head.push_back(g + "_se");
    head.push_back("expenditure_se");
    for (const auto& g : goods) head.push_back(g + "_code");
    head.push_back("expenditure_code");
    std::string out = csv_row(head);
    const auto n = static_cast<Index>(goods.size());
    for (Index i = 0; i < n; ++i) {
        for (const auto& r : regions) {
            const auto& rep = r.report;
            std::vector<std::string> row{goods[static_cast<std::size_t>(i)], r.region,
                                         to_string(r.model)};
            for (Index j = 0; j < n; ++j) row.push_back(format_exact(rep.marshallian(i, j)));
            row.push_back(format_exact(rep.expenditure(i)));
            for (Index j = 0; j < n; ++j) row.push_back(format_exact(rep.errors.marshallian_se(i, j)));
            row.push_back(format_exact(rep.errors.expenditure_se(i)));
            for (Index j = 0; j < n; ++j) {
                row.push_back(rep.errors.marshallian_codes[static_cast<std::size_t>(i)]
                                                          [static_cast<std::size_t>(j)]);
            }
            row.push_back(rep.errors.expenditure_codes[static_cast<std::size_t>(i)]);
            out += csv_row(row);
        }
    }
    return out;
}

std::string elasticity_markdown(const std::vector<RegionElasticities>& regions) {
    if (regions.empty()) return "";
    const auto& goods = regions.front().report.goods;
    const auto n = static_cast<Index>(goods.size());
    std::string out = "## Marshallian price and expenditure elasticities (" +
                      to_string(regions.front().model) + ")\n\n";
    std::vector<std::string> head{"good", "region"};
    for (const auto& g : goods) head.push_back(g);
    head.push_back("expenditure");
    out += md_row(head) + md_rule(head.size());
    for (Index i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < regions.size(); ++k) {
            const auto& rep = regions[k].report;
            std::vector<std::string> row{k == 0 ? goods[static_cast<std::size_t>(i)] : "",
                                         regions[k].region};
            for (Index j = 0; j < n; ++j) {
                row.push_back(with_code(rep.marshallian(i, j), rep.errors.marshallian_p(i, j), 3));
            }
            row.push_back(with_code(rep.expenditure(i), rep.errors.expenditure_p(i), 3));
            out += md_row(row);
        }
    }
    out += "\nSignif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
    out += "Evaluated at " +
           std::string(regions.front().report.mode == EvalMode::sample_mean
                           ? "sample-mean shares and log prices"
                           : "each observation, averaged") +
           ".\n\n";

    out += "## Classification\n\n";
    out += md_row({"region", "good", "type", "own price", "substitutes", "complements"}) +
           md_rule(6);
    for (const auto& r : regions) {
        const auto& rep = r.report;
        for (std::size_t i = 0; i < goods.size(); ++i) {
            std::vector<std::string> subs, comps;
            for (std::size_t j = 0; j < goods.size(); ++j) {
                if (i == j) continue;
                if (rep.pair_classes[i][j] == PairClass::substitute) subs.push_back(goods[j]);
                if (rep.pair_classes[i][j] == PairClass::complement) comps.push_back(goods[j]);
            }
            out += md_row({r.region, goods[i], std::string(to_string(rep.good_classes[i])),
                           rep.own_price_elastic[i] ? "elastic" : "inelastic", join(subs, ", "),
                           join(comps, ", ")});
        }
    }
    out += "\nLuxury: eta > 1. Necessity: 0 <= eta <= 1 (eta = 1 counts as a necessity). "
           "Inferior: eta < 0.\n\n";

    out += "## Regularity\n\n";
    out += md_row({"region", "monotonicity (%)", "concavity (%)"}) + md_rule(3);
    for (const auto& r : regions) {
        out += md_row({r.region, format_fixed(r.regularity.monotonicity_pct, 1),
                       format_fixed(r.regularity.concavity_pct, 1)});
    }
    return out;
}

std::string elasticity_summary_csv(const ElasticitySummary& s) {
    std::vector<std::string> head{"good", "statistic"};
    for (const auto& g : s.goods) head.push_back(g);
    head.push_back("expenditure");
    std::string out = csv_row(head);
    for (std::size_t i = 0; i < s.goods.size(); ++i) {
        const std::pair<const char*, const VectorXd*> rows[] = {
            {"Min", &s.min[i]}, {"Mean", &s.mean[i]}, {"Max", &s.max[i]}, {"SD", &s.sd[i]}};
        for (const auto& [name, v] : rows) {
            std::vector<std::string> row{s.goods[i], name};
            for (Index j = 0; j < v->size(); ++j) row.push_back(format_exact((*v)(j)));
            out += csv_row(row);
        }
    }
    return out;
}

std::string elasticity_summary_markdown(const ElasticitySummary& s) {
    std::string out = "## Elasticity summary across regions (" + join(s.regions, ", ") + ")\n\n";
    std::vector<std::string> head{"good", "summary"};
    for (const auto& g : s.goods) head.push_back(g);
    head.push_back("expenditure");
    out += md_row(head) + md_rule(head.size());
    for (std::size_t i = 0; i < s.goods.size(); ++i) {
        const std::pair<const char*, const VectorXd*> rows[] = {
            {"Min", &s.min[i]}, {"Mean", &s.mean[i]}, {"Max", &s.max[i]}, {"SD", &s.sd[i]}};
        bool first = true;
        for (const auto& [name, v] : rows) {
            std::vector<std::string> row{first ? s.goods[i] : "", name};
            for (Index j = 0; j < v->size(); ++j) row.push_back(format_fixed((*v)(j), 3));
            out += md_row(row);
            first = false;
        }
    }
    return out;
}

std::string regularity_csv(const std::vector<RegionElasticities>& regions) {
    std::string out = csv_row({"region", "model", "monotonicity_pct", "concavity_pct",
                               "degenerate_observations"});
    for (const auto& r : regions) {
        std::size_t degenerate = 0;
        for (bool d : r.regularity.degenerate) degenerate += d ? 1 : 0;
        out += csv_row({r.region, to_string(r.model), format_exact(r.regularity.monotonicity_pct),
                        format_exact(r.regularity.concavity_pct), std::to_string(degenerate)});
    }
    return out;
}

ordered_json to_json(const RegionElasticities& r) {
    const auto& rep = r.report;
    ordered_json j;
    j["region"] = r.region;
    j["model"] = to_string(r.model);
    j["goods"] = rep.goods;
    j["eval_point"] = rep.mode == EvalMode::sample_mean ? "mean" : "per-obs";
    j["marshallian"] = mat_json(rep.marshallian);
    j["marshallian_se"] = mat_json(rep.errors.marshallian_se);
    j["marshallian_p"] = mat_json(rep.errors.marshallian_p);
    j["marshallian_codes"] = rep.errors.marshallian_codes;
    j["expenditure"] = vec_json(rep.expenditure);
    j["expenditure_se"] = vec_json(rep.errors.expenditure_se);
    j["expenditure_p"] = vec_json(rep.errors.expenditure_p);
    j["expenditure_codes"] = rep.errors.expenditure_codes;
    ordered_json classes = ordered_json::array();
    for (auto c : rep.good_classes) classes.push_back(std::string(to_string(c)));
    j["good_classes"] = classes;
    ordered_json pairs = ordered_json::array();
    for (std::size_t i = 0; i < rep.pair_classes.size(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t k = 0; k < rep.pair_classes[i].size(); ++k) {
            row.push_back(i == k ? std::string("own") : std::string(to_string(rep.pair_classes[i][k])));
        }
        pairs.push_back(row);
    }
    j["pair_classes"] = pairs;
    j["own_price_elastic"] = flags_json(rep.own_price_elastic);
    j["necessity_rule"] = "0 <= eta <= 1, eta = 1 counts as necessity";
    j["regularity"] = to_json(r.regularity);
    return j;
}

ordered_json to_json(const ElasticitySummary& s) {
    ordered_json j;
    j["goods"] = s.goods;
    j["regions"] = s.regions;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < s.goods.size(); ++i) {
        rows.push_back({{"good", s.goods[i]},
                        {"min", vec_json(s.min[i])},
                        {"mean", vec_json(s.mean[i])},
                        {"max", vec_json(s.max[i])},
                        {"sd", vec_json(s.sd[i])}});
    }
    j["summary"] = rows;
    return j;
}

}  // namespace aidsfit
