#include "aidsfit/cli.hpp"

#include "aidsfit/aids.hpp"
#include "aidsfit/diagnostics.hpp"
#include "aidsfit/elasticity.hpp"
#include "aidsfit/errors.hpp"
#include "aidsfit/report.hpp"
#include "aidsfit/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace aidsfit {

namespace fs = std::filesystem;

namespace {

class OutputError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::vector<std::string> inputs;
    std::vector<std::string> regions;
    std::string out_dir = ".";
    std::vector<std::string> formats{"json", "csv", "md"};
    std::vector<int> models;
    double alpha0 = 0.0;
    double trig_period = 4.0;
    double tol = 1e-8;
    int max_iter = 500;
    double fgls_tol = 1e-8;
    int fgls_max_iter = 100;
    std::string drop_good;
    std::string eval_point = "mean";
    // synth
    std::size_t goods = 4;
    std::size_t weeks = 160;
    double noise_sd = 0.005;
    std::uint64_t seed = 1;
    std::string synth_region = "synthetic";
    std::string config;
};

bool wants(const Options& o, const std::string& format) {
    return std::find(o.formats.begin(), o.formats.end(), format) != o.formats.end();
}

void write_file(const fs::path& path, const std::string& content, std::ostream& out) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw OutputError("cannot write '" + path.string() + "'");
        f << content;
        if (!f) throw OutputError("failed writing '" + path.string() + "'");
    }
    fs::rename(tmp, path, ec);
    if (ec) throw OutputError("cannot write '" + path.string() + "': " + ec.message());
    out << path.string() << "\n";
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<std::shared_ptr<const MarketPanel>> load_inputs(const Options& o) {
    if (o.inputs.empty()) throw SpecificationError("at least one --input is required");
    if (o.regions.size() > o.inputs.size()) {
        throw SpecificationError("more --region labels than --input files");
    }
    std::vector<std::shared_ptr<const MarketPanel>> panels;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < o.inputs.size(); ++i) {
        const std::string region = i < o.regions.size() ? o.regions[i] : std::string{};
        auto p = std::make_shared<const MarketPanel>(load_panel(o.inputs[i], {}, region));
        if (!seen.insert(p->region()).second) {
            throw SpecificationError("duplicate region label '" + p->region() + "'");
        }
        panels.push_back(std::move(p));
    }
    return panels;
}

std::size_t resolve_drop(const std::string& text, const std::vector<std::string>& goods) {
    const auto it = std::find(goods.begin(), goods.end(), text);
    if (it != goods.end()) return static_cast<std::size_t>(it - goods.begin());
    std::size_t pos = 0;
    long index = 0;
    try {
        index = std::stol(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || index < 1 || static_cast<std::size_t>(index) > goods.size()) {
        throw SpecificationError("--drop-good '" + text + "' is neither a good label nor an index 1.." +
                                 std::to_string(goods.size()));
    }
    return static_cast<std::size_t>(index - 1);
}

ModelSpec spec_for(const Options& o, ModelId model, const MarketPanel& panel) {
    ModelSpec s;
    s.model = model;
    s.alpha0 = o.alpha0;
    s.trig_period = o.trig_period;
    s.ille_tol = o.tol;
    s.ille_max_iter = o.max_iter;
    s.fgls_tol = o.fgls_tol;
    s.fgls_max_iter = o.fgls_max_iter;
    if (!o.drop_good.empty()) s.dropped_good = resolve_drop(o.drop_good, panel.goods());
    if (!(s.trig_period > 0.0)) throw SpecificationError("--trig-period must be positive");
    if (!(s.ille_tol > 0.0) || s.ille_max_iter < 1) {
        throw SpecificationError("--tol must be positive and --max-iter at least 1");
    }
    return s;
}

std::vector<ModelId> models_of(const Options& o, std::vector<int> fallback) {
    const auto& numbers = o.models.empty() ? fallback : o.models;
    std::vector<ModelId> out;
    for (int k : numbers) {
        const ModelId id = model_from_number(k);
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

/// One fit; a non-converged estimate is returned with converged = false.
struct FitOutcome {
    std::shared_ptr<const FitResult> fit;
    std::string error;  // set when no estimate is available
};

FitOutcome run_fit(const SharePanel& panel, const ModelSpec& spec,
                   const std::optional<Eigen::VectorXd>& stage1, std::ostream& err) {
    const std::string what = panel.source().region() + " " + to_string(spec.model);
    try {
        return {std::make_shared<const FitResult>(fit_aids(panel, spec, stage1)), {}};
    } catch (const IlleConvergenceError& e) {
        err << "warning: " << what << ": " << e.what() << "\n";
        return {e.partial(), {}};
    } catch (const NumericalError& e) {
        err << "error: " << what << ": " << e.what() << "\n";
        return {nullptr, e.what()};
    } catch (const ConvergenceError& e) {
        err << "error: " << what << ": " << e.what() << "\n";
        return {nullptr, e.what()};
    }
}

/// Fits the requested models of one region. Model_1 reuses the Model_4
/// beta for Q when Model_4 is part of the run, otherwise it fits one.
std::map<ModelId, FitOutcome> fit_region(const Options& o, const MarketPanel& market,
                                         const SharePanel& panel, const std::vector<ModelId>& models,
                                         std::ostream& err) {
    std::map<ModelId, FitOutcome> fits;
    std::vector<ModelId> order = models;
    std::sort(order.begin(), order.end(), [](ModelId a, ModelId b) {
        return static_cast<int>(a) > static_cast<int>(b);
    });
    for (ModelId id : order) {
        const ModelSpec spec = spec_for(o, id, market);
        std::optional<Eigen::VectorXd> stage1;
        if (id == ModelId::model_1) {
            const auto it = fits.find(ModelId::model_4);
            if (it != fits.end() && it->second.fit && it->second.fit->convergence.converged) {
                stage1 = it->second.fit->coefficients.beta;
                err << "note: " << market.region()
                    << " Model_1 uses the Model_4 expenditure coefficients for Q\n";
            } else {
                err << "note: " << market.region()
                    << " Model_1 runs a stage-1 Model_4 fit for Q\n";
            }
        }
        err << "fitting " << market.region() << " " << to_string(id) << "\n";
        fits[id] = run_fit(panel, spec, stage1, err);
    }
    return fits;
}

bool usable(const FitOutcome& f) { return f.fit && f.fit->convergence.converged; }

std::string file_tag(const std::string& region) {
    std::string out;
    for (char c : region) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.goods < 2) throw SpecificationError("--goods must be at least 2");
    if (o.weeks < 2) throw SpecificationError("--weeks must be at least 2");
    SynthConfig cfg = default_config(o.goods, o.weeks, o.noise_sd, o.seed);
    cfg.alpha0 = o.alpha0;
    cfg.trig_period = o.trig_period;
    cfg.region = o.synth_region;
    const MarketPanel panel = generate(cfg);
    std::ostringstream csv;
    write_panel_csv(panel, csv);
    err << "generated " << o.weeks << " weeks of " << o.goods << " goods (seed " << o.seed
        << ", noise " << o.noise_sd << ")\n";
    write_file(fs::path(o.out_dir) / (file_tag(o.synth_region) + ".csv"), csv.str(), out);
    return exit_ok;
}

int cmd_summarize(const Options& o, std::ostream& out, std::ostream&) {
    for (const auto& panel : load_inputs(o)) {
        const SummaryTable table = summary_stats(*panel);
        const fs::path base = fs::path(o.out_dir) / ("summary_" + file_tag(panel->region()));
        if (wants(o, "csv")) write_file(base.string() + ".csv", summary_csv(table), out);
        if (wants(o, "md")) write_file(base.string() + ".md", summary_markdown(table), out);
        if (wants(o, "json")) write_file(base.string() + ".json", dump(to_json(table)), out);
    }
    return exit_ok;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
    const auto panels = load_inputs(o);
    const auto models = models_of(o, {1, 2, 3, 4});
    int code = exit_ok;
    for (const auto& market : panels) {
        const SharePanel panel(market);
        const auto fits = fit_region(o, *market, panel, models, err);
        std::vector<const FitResult*> table;
        for (ModelId id : models) {
            const auto& f = fits.at(id);
            const std::string stem =
                "fit_" + file_tag(market->region()) + "_" + to_string(id) + ".json";
            if (!f.fit) {
                code = exit_numerical;
                if (wants(o, "json")) {
                    nlohmann::ordered_json j;
                    j["model"] = to_string(id);
                    j["converged"] = false;
                    j["error"] = f.error;
                    write_file(fs::path(o.out_dir) / stem, dump(j), out);
                }
                continue;
            }
            if (!f.fit->convergence.converged) code = exit_numerical;
            const RegularityReport reg = check_regularity(*f.fit, panel);
            if (wants(o, "json")) write_file(fs::path(o.out_dir) / stem, dump(to_json(*f.fit, &reg)), out);
            table.push_back(f.fit.get());
        }
        const fs::path base = fs::path(o.out_dir) / ("r2_" + file_tag(market->region()));
        if (wants(o, "csv")) write_file(base.string() + ".csv", r2_csv(table), out);
        if (wants(o, "md")) write_file(base.string() + ".md", r2_markdown(market->region(), table), out);
    }
    return code;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
    const auto panels = load_inputs(o);
    if (!o.models.empty()) err << "note: compare always fits all four models; --model ignored\n";
    const std::vector<ModelId> all{ModelId::model_1, ModelId::model_2, ModelId::model_3,
                                   ModelId::model_4};
    int code = exit_ok;
    for (const auto& market : panels) {
        const SharePanel panel(market);
        const auto fits = fit_region(o, *market, panel, all, err);
        bool ok = true;
        for (ModelId id : all) {
            if (!usable(fits.at(id))) {
                err << "warning: " << market->region() << " " << to_string(id)
                    << " did not converge; no comparison written\n";
                ok = false;
            }
        }
        if (!ok) {
            code = exit_numerical;
            continue;
        }
        const auto& m1 = *fits.at(ModelId::model_1).fit;
        const auto& m2 = *fits.at(ModelId::model_2).fit;
        const auto& m3 = *fits.at(ModelId::model_3).fit;
        const auto& m4 = *fits.at(ModelId::model_4).fit;
        std::vector<LRTable> tables;
        tables.push_back(lr_table(market->region(), "Likelihood ratio tests against Model_1", m1,
                                  {&m2, &m3, &m4}));
        tables.push_back(lr_table(market->region(), "Likelihood ratio test of Model_3 against Model_2",
                                  m2, {&m3}));
        for (const auto& t : tables) {
            for (const auto& r : t.rows) {
                if (r.test && r.test->negative_stat) {
                    err << "warning: " << market->region() << " " << r.label
                        << ": negative likelihood-ratio statistic\n";
                }
            }
        }
        const fs::path base = fs::path(o.out_dir) / ("lr_" + file_tag(market->region()));
        if (wants(o, "csv")) write_file(base.string() + ".csv", lr_csv(tables), out);
        if (wants(o, "md")) write_file(base.string() + ".md", lr_markdown(tables), out);
        if (wants(o, "json")) {
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& t : tables) j.push_back(to_json(t));
            write_file(base.string() + ".json", dump(j), out);
        }
    }
    return code;
}

int cmd_elasticities(const Options& o, std::ostream& out, std::ostream& err) {
    const auto panels = load_inputs(o);
    const auto models = models_of(o, {4});
    if (models.size() != 1) throw SpecificationError("elasticities takes a single --model");
    const ModelId model = models.front();
    const EvalMode mode = o.eval_point == "mean" ? EvalMode::sample_mean : EvalMode::per_observation;
    int code = exit_ok;
    std::vector<RegionElasticities> results;
    for (const auto& market : panels) {
        const SharePanel panel(market);
        const auto fits = fit_region(o, *market, panel, {model}, err);
        const auto& f = fits.at(model);
        if (!usable(f)) {
            err << "warning: " << market->region() << " excluded: " << to_string(model)
                << " did not converge\n";
            code = exit_numerical;
            continue;
        }
        try {
            RegionElasticities r;
            r.region = market->region();
            r.model = model;
            r.report = elasticity_report(*f.fit, panel, mode);
            r.regularity = check_regularity(*f.fit, panel);
            results.push_back(std::move(r));
        } catch (const NumericalError& e) {
            err << "warning: " << market->region() << " excluded: " << e.what() << "\n";
            code = exit_numerical;
        }
    }
    if (results.empty()) {
        err << "error: no region produced elasticities\n";
        return exit_numerical;
    }
    const std::string tag = to_string(model);
    const fs::path dir(o.out_dir);
    if (wants(o, "csv")) {
        write_file(dir / ("elasticities_" + tag + ".csv"), elasticity_csv(results), out);
        write_file(dir / ("regularity_" + tag + ".csv"), regularity_csv(results), out);
    }
    std::optional<ElasticitySummary> summary;
    if (results.size() >= 2) summary = summarize_elasticities(results);
    if (wants(o, "md")) {
        std::string md = elasticity_markdown(results);
        if (summary) md += "\n" + elasticity_summary_markdown(*summary);
        write_file(dir / ("elasticities_" + tag + ".md"), md, out);
    }
    if (wants(o, "json")) {
        nlohmann::ordered_json j;
        j["regions"] = nlohmann::ordered_json::array();
        for (const auto& r : results) j["regions"].push_back(to_json(r));
        if (summary) j["summary"] = to_json(*summary);
        write_file(dir / ("elasticities_" + tag + ".json"), dump(j), out);
    }
    if (summary && wants(o, "csv")) {
        write_file(dir / ("elasticity_summary_" + tag + ".csv"), elasticity_summary_csv(*summary), out);
    }
    return code;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Appends `--key value` for config-file keys absent from the command line.
std::vector<std::string> with_config(std::vector<std::string> args, CLI::App& app) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    CLI::App* sub = nullptr;
    for (const auto& a : args) {
        if (!a.empty() && a[0] != '-') {
            sub = app.get_subcommand_no_throw(a);
            break;
        }
    }
    if (!sub) return args;
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file '" + path + "'");
    std::vector<std::string> extra;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        if (!sub->get_option_no_throw(flag)) {
            throw SpecificationError(path + ":" + std::to_string(number) + ": unknown key '" + key +
                                     "' for " + sub->get_name());
        }
        if (has_flag(args, flag)) continue;
        extra.push_back(flag);
        extra.push_back(value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

int code_for(const std::exception& e) {
    if (dynamic_cast<const SpecificationError*>(&e)) return exit_usage;
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const ConvergenceError*>(&e) ||
        dynamic_cast<const GenerationError*>(&e)) {
        return exit_numerical;
    }
    return exit_data;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Demand system estimation for weekly price and quantity panels", "aidsfit"};
    app.require_subcommand(1);

    auto add_io = [&](CLI::App* s) {
        s->add_option("--input", o.inputs, "panel CSV, one per region")->required();
        s->add_option("--region", o.regions, "region label for the matching --input");
        s->add_option("--out", o.out_dir, "output directory");
        s->add_option("--format", o.formats, "json, csv, md")
            ->check(CLI::IsMember({"json", "csv", "md"}));
        s->add_option("--config", o.config, "key=value file supplying any flag");
    };
    auto add_model = [&](CLI::App* s) {
        s->add_option("--model", o.models, "model number 1-4")->check(CLI::Range(1, 4));
        s->add_option("--alpha0", o.alpha0, "translog index intercept");
        s->add_option("--trig-period", o.trig_period, "period of the seasonal terms, weeks");
        s->add_option("--tol", o.tol, "convergence tolerance of the outer iteration");
        s->add_option("--max-iter", o.max_iter, "iteration cap of the outer iteration");
        s->add_option("--fgls-tol", o.fgls_tol, "convergence tolerance of the FGLS loop");
        s->add_option("--fgls-max-iter", o.fgls_max_iter, "iteration cap of the FGLS loop");
        s->add_option("--drop-good", o.drop_good, "equation to drop: label or 1-based index");
    };

    auto* summarize = app.add_subcommand("summarize", "summary statistics per region");
    add_io(summarize);
    auto* fit = app.add_subcommand("fit", "fit the share models");
    add_io(fit);
    add_model(fit);
    auto* compare = app.add_subcommand("compare", "likelihood ratio tests between models");
    add_io(compare);
    add_model(compare);
    auto* elast = app.add_subcommand("elasticities", "price and expenditure elasticities");
    add_io(elast);
    add_model(elast);
    elast->add_option("--eval-point", o.eval_point, "mean or per-obs")
        ->check(CLI::IsMember({"mean", "per-obs"}));
    auto* synth = app.add_subcommand("synth", "generate a synthetic panel");
    synth->add_option("--goods", o.goods, "number of goods");
    synth->add_option("--weeks", o.weeks, "number of weeks");
    synth->add_option("--noise-sd", o.noise_sd, "share disturbance scale");
    synth->add_option("--seed", o.seed, "random seed");
    synth->add_option("--alpha0", o.alpha0, "translog index intercept");
    synth->add_option("--trig-period", o.trig_period, "period of the seasonal terms, weeks");
    synth->add_option("--region", o.synth_region, "region label and file name");
    synth->add_option("--out", o.out_dir, "output directory");
    synth->add_option("--config", o.config, "key=value file supplying any flag");

    try {
        std::vector<std::string> full = with_config(args, app);
        std::reverse(full.begin(), full.end());
        app.parse(full);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return code_for(e);
    }

    try {
        if (*summarize) return cmd_summarize(o, out, err);
        if (*fit) return cmd_fit(o, out, err);
        if (*compare) return cmd_compare(o, out, err);
        if (*elast) return cmd_elasticities(o, out, err);
        return cmd_synth(o, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return code_for(e);
    }
}

}  // namespace aidsfit
