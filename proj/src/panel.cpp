#include "aidsfit/panel.hpp"

#include "aidsfit/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace aidsfit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    for (auto& f : fields) {
        const auto first = f.find_first_not_of(" \t");
        const auto last = f.find_last_not_of(" \t");
        f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
    }
    return fields;
}

std::optional<double> parse_number(const std::string& s) {
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::optional<long long> parse_integer(const std::string& s) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

double parse_positive(const std::string& text, const std::string& what, std::size_t line_no) {
    const auto value = parse_number(text);
    if (!value) {
        throw DataError("row " + std::to_string(line_no) + ": non-numeric " + what + " '" + text +
                        "'");
    }
    if (!std::isfinite(*value) || *value <= 0.0) {
        throw DataError("row " + std::to_string(line_no) + ": " + what + " must be positive, got " +
                        text);
    }
    return *value;
}

// Week ordering: numeric when every label is an integer, otherwise
// lexicographic (ISO dates sort chronologically).
std::vector<std::string> order_weeks(std::set<std::string> labels) {
    std::vector<std::string> weeks(labels.begin(), labels.end());
    const bool numeric = std::all_of(weeks.begin(), weeks.end(),
                                     [](const std::string& w) { return parse_integer(w).has_value(); });
    if (numeric) {
        std::sort(weeks.begin(), weeks.end(), [](const std::string& a, const std::string& b) {
            return *parse_integer(a) < *parse_integer(b);
        });
        for (std::size_t i = 1; i < weeks.size(); ++i) {
            if (*parse_integer(weeks[i - 1]) == *parse_integer(weeks[i])) {
                throw DataError("week labels '" + weeks[i - 1] + "' and '" + weeks[i] +
                                "' denote the same week");
            }
        }
    }
    return weeks;
}

struct Cell {
    double price = 0.0;
    double quantity = 0.0;
    bool set = false;
};

MarketPanel read_long(std::istream& in, const std::vector<std::string>& header,
                      const CsvFormat& format, std::string region) {
    const auto week_col = require_column(header, format.week_column);
    const auto good_col = require_column(header, format.good_column);
    const auto price_col = require_column(header, format.price_column);
    const auto qty_col = require_column(header, format.quantity_column);
    const auto width = std::max({week_col, good_col, price_col, qty_col}) + 1;

    std::vector<std::string> goods;
    std::set<std::string> week_labels;
    std::map<std::pair<std::string, std::string>, std::pair<Cell, std::size_t>> cells;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split_csv_line(line, format.delimiter);
        if (fields.size() < width) {
            throw FormatError("row " + std::to_string(line_no) + ": expected at least " +
                              std::to_string(width) + " fields, got " +
                              std::to_string(fields.size()));
        }
        const auto& week = fields[week_col];
        const auto& good = fields[good_col];
        if (week.empty() || good.empty()) {
            throw DataError("row " + std::to_string(line_no) + ": empty week or good label");
        }
        Cell cell;
        cell.price = parse_positive(fields[price_col], "price", line_no);
        cell.quantity = parse_positive(fields[qty_col], "quantity", line_no);
        cell.set = true;
        auto [it, inserted] = cells.try_emplace({week, good}, cell, line_no);
        if (!inserted) {
            throw DataError("row " + std::to_string(line_no) + ": duplicate (week, good) = (" +
                            week + ", " + good + "), first seen at row " +
                            std::to_string(it->second.second));
        }
        if (std::find(goods.begin(), goods.end(), good) == goods.end()) goods.push_back(good);
        week_labels.insert(week);
    }
    if (cells.empty()) throw InsufficientDataError("panel has no data rows");

    const auto weeks = order_weeks(std::move(week_labels));
    const auto T = static_cast<Eigen::Index>(weeks.size());
    const auto n = static_cast<Eigen::Index>(goods.size());
    Eigen::MatrixXd prices(T, n);
    Eigen::MatrixXd quantities(T, n);
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto it = cells.find({weeks[t], goods[j]});
            if (it == cells.end()) {
                throw DataError("unbalanced panel: good '" + goods[j] + "' missing in week '" +
                                weeks[t] + "'");
            }
            prices(t, j) = it->second.first.price;
            quantities(t, j) = it->second.first.quantity;
        }
    }
    return MarketPanel(std::move(region), std::move(goods), weeks, std::move(prices),
                       std::move(quantities));
}

MarketPanel read_wide(std::istream& in, const std::vector<std::string>& header,
                      const CsvFormat& format, std::string region) {
    const auto week_col = require_column(header, format.week_column);
    std::vector<std::string> goods;
    std::vector<std::size_t> price_cols;
    std::vector<std::size_t> qty_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name.size() > format.price_prefix.size() && name.starts_with(format.price_prefix)) {
            const auto good = name.substr(format.price_prefix.size());
            goods.push_back(good);
            price_cols.push_back(c);
            qty_cols.push_back(require_column(header, format.quantity_prefix + good));
        }
    }
    if (goods.empty()) {
        throw FormatError("no columns with price prefix '" + format.price_prefix + "'");
    }

    std::vector<std::pair<std::string, std::vector<Cell>>> rows;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split_csv_line(line, format.delimiter);
        if (fields.size() != header.size()) {
            throw FormatError("row " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        const auto& week = fields[week_col];
        if (auto [it, inserted] = seen.try_emplace(week, line_no); !inserted) {
            throw DataError("row " + std::to_string(line_no) + ": duplicate week '" + week +
                            "', first seen at row " + std::to_string(it->second));
        }
        std::vector<Cell> cells(goods.size());
        for (std::size_t j = 0; j < goods.size(); ++j) {
            if (fields[price_cols[j]].empty() || fields[qty_cols[j]].empty()) {
                throw DataError("unbalanced panel: good '" + goods[j] + "' missing in week '" +
                                week + "'");
            }
            cells[j].price = parse_positive(fields[price_cols[j]], "price", line_no);
            cells[j].quantity = parse_positive(fields[qty_cols[j]], "quantity", line_no);
            cells[j].set = true;
        }
        rows.emplace_back(week, std::move(cells));
    }
    if (rows.empty()) throw InsufficientDataError("panel has no data rows");

    std::set<std::string> labels;
    for (const auto& r : rows) labels.insert(r.first);
    const auto weeks = order_weeks(std::move(labels));
    std::map<std::string, const std::vector<Cell>*> by_week;
    for (const auto& r : rows) by_week[r.first] = &r.second;

    const auto T = static_cast<Eigen::Index>(weeks.size());
    const auto n = static_cast<Eigen::Index>(goods.size());
    Eigen::MatrixXd prices(T, n);
    Eigen::MatrixXd quantities(T, n);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& cells = *by_week.at(weeks[t]);
        for (Eigen::Index j = 0; j < n; ++j) {
            prices(t, j) = cells[j].price;
            quantities(t, j) = cells[j].quantity;
        }
    }
    return MarketPanel(std::move(region), std::move(goods), weeks, std::move(prices),
                       std::move(quantities));
}

}  // namespace

MarketPanel::MarketPanel(std::string region, std::vector<std::string> goods,
                         std::vector<std::string> weeks, Eigen::MatrixXd prices,
                         Eigen::MatrixXd quantities)
    : region_(std::move(region)),
      goods_(std::move(goods)),
      weeks_(std::move(weeks)),
      prices_(std::move(prices)),
      quantities_(std::move(quantities)) {
    if (goods_.empty()) throw DataError("panel has no goods");
    if (prices_.rows() != quantities_.rows() || prices_.cols() != quantities_.cols()) {
        throw DimensionError("prices and quantities differ in shape");
    }
    if (static_cast<std::size_t>(prices_.cols()) != goods_.size()) {
        throw DimensionError("price columns do not match the number of goods");
    }
    if (static_cast<std::size_t>(prices_.rows()) != weeks_.size()) {
        throw DimensionError("price rows do not match the number of weeks");
    }
    std::set<std::string> unique_goods(goods_.begin(), goods_.end());
    if (unique_goods.size() != goods_.size()) throw DataError("good labels are not unique");
    const bool numeric = std::all_of(weeks_.begin(), weeks_.end(),
                                     [](const std::string& w) { return parse_integer(w).has_value(); });
    for (std::size_t t = 1; t < weeks_.size(); ++t) {
        const bool increasing = numeric ? *parse_integer(weeks_[t - 1]) < *parse_integer(weeks_[t])
                                        : weeks_[t - 1] < weeks_[t];
        if (!increasing) {
            throw DataError("weeks not strictly increasing at '" + weeks_[t - 1] + "', '" +
                            weeks_[t] + "'");
        }
    }
    for (Eigen::Index t = 0; t < prices_.rows(); ++t) {
        for (Eigen::Index j = 0; j < prices_.cols(); ++j) {
            const double p = prices_(t, j);
            const double q = quantities_(t, j);
            if (!std::isfinite(p) || p <= 0.0 || !std::isfinite(q) || q <= 0.0) {
                throw DataError("non-positive or non-finite entry for good '" + goods_[j] +
                                "' in week '" + weeks_[t] + "'");
            }
        }
    }
}

SharePanel::SharePanel(std::shared_ptr<const MarketPanel> source) : source_(std::move(source)) {
    const auto& p = source_->prices();
    const Eigen::MatrixXd expenditure = p.cwiseProduct(source_->quantities());
    total_expenditure_ = expenditure.rowwise().sum();
    shares_ = expenditure.array().colwise() / total_expenditure_.array();
    log_prices_ = p.array().log();
}

SharePanel compute_shares(const MarketPanel& panel) {
    return SharePanel(std::make_shared<const MarketPanel>(panel));
}

MarketPanel read_panel(std::istream& in, const CsvFormat& format, std::string region) {
    std::string header_line;
    if (!std::getline(in, header_line)) throw FormatError("empty input: no header row");
    if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    // Strip a UTF-8 byte order mark.
    if (header_line.starts_with("\xEF\xBB\xBF")) header_line.erase(0, 3);
    const auto header = split_csv_line(header_line, format.delimiter);
    if (format.layout == CsvFormat::Layout::wide_format) {
        return read_wide(in, header, format, std::move(region));
    }
    return read_long(in, header, format, std::move(region));
}

MarketPanel load_panel(const std::filesystem::path& path, const CsvFormat& format,
                       std::string region) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open input file '" + path.string() + "'");
    if (region.empty()) region = path.stem().string();
    try {
        return read_panel(in, format, std::move(region));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const InsufficientDataError& e) {
        throw InsufficientDataError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_panel_csv(const MarketPanel& panel, std::ostream& out) {
    const auto old_flags = out.flags();
    const auto old_precision = out.precision();
    out << "week,good,price,quantity\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t t = 0; t < panel.n_weeks(); ++t) {
        for (std::size_t j = 0; j < panel.n_goods(); ++j) {
            const auto ti = static_cast<Eigen::Index>(t);
            const auto ji = static_cast<Eigen::Index>(j);
            out << panel.weeks()[t] << ',' << panel.goods()[j] << ',' << panel.prices()(ti, ji)
                << ',' << panel.quantities()(ti, ji) << '\n';
        }
    }
    out.flags(old_flags);
    out.precision(old_precision);
}

double coefficient_of_variation(double sd, double mean) {
    return mean != 0.0 ? 100.0 * sd / mean : std::numeric_limits<double>::quiet_NaN();
}

SeriesStats describe(std::span<const double> values) {
    if (values.size() < 2) {
        throw InsufficientDataError("summary statistics need at least 2 observations, got " +
                                    std::to_string(values.size()));
    }
    SeriesStats s;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    const double count = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (count - 1.0));
    s.cv = coefficient_of_variation(s.sd, s.mean);
    return s;
}

SummaryTable summary_stats(const MarketPanel& panel) {
    SummaryTable table;
    table.region = panel.region();
    table.goods = panel.goods();
    const auto T = panel.n_weeks();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(panel.n_goods()); ++j) {
        table.quantities.push_back(describe({panel.quantities().col(j).data(), T}));
        table.prices.push_back(describe({panel.prices().col(j).data(), T}));
    }
    return table;
}

}  // namespace aidsfit
