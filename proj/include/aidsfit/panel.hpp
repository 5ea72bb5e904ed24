#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace aidsfit {

/// Weekly prices and quantities of n goods in one region.
///
/// Rows are weeks (T), columns are goods (n). Construction validates the
/// invariants; the object is immutable afterwards.
class MarketPanel {
public:
    MarketPanel(std::string region, std::vector<std::string> goods,
                std::vector<std::string> weeks, Eigen::MatrixXd prices,
                Eigen::MatrixXd quantities);

    const std::string& region() const noexcept { return region_; }
    const std::vector<std::string>& goods() const noexcept { return goods_; }
    /// Week labels as read; model formulas use the row index t = 0..T-1.
    const std::vector<std::string>& weeks() const noexcept { return weeks_; }
    const Eigen::MatrixXd& prices() const noexcept { return prices_; }
    const Eigen::MatrixXd& quantities() const noexcept { return quantities_; }

    std::size_t n_weeks() const noexcept { return static_cast<std::size_t>(prices_.rows()); }
    std::size_t n_goods() const noexcept { return goods_.size(); }

private:
    std::string region_;
    std::vector<std::string> goods_;
    std::vector<std::string> weeks_;
    Eigen::MatrixXd prices_;
    Eigen::MatrixXd quantities_;
};

/// Expenditure shares and log prices derived from a MarketPanel.
class SharePanel {
public:
    explicit SharePanel(std::shared_ptr<const MarketPanel> source);

    const Eigen::MatrixXd& log_prices() const noexcept { return log_prices_; }
    const Eigen::MatrixXd& shares() const noexcept { return shares_; }
    const Eigen::VectorXd& total_expenditure() const noexcept { return total_expenditure_; }
    const MarketPanel& source() const noexcept { return *source_; }

    std::size_t n_weeks() const noexcept { return source_->n_weeks(); }
    std::size_t n_goods() const noexcept { return source_->n_goods(); }

private:
    std::shared_ptr<const MarketPanel> source_;
    Eigen::MatrixXd log_prices_;
    Eigen::MatrixXd shares_;
    Eigen::VectorXd total_expenditure_;
};

SharePanel compute_shares(const MarketPanel& panel);

/// Column mapping for CSV ingestion.
///
/// Long layout: one row per (week, good) with week/good/price/quantity
/// columns. Wide layout: one row per week, with `<price_prefix><good>` and
/// `<quantity_prefix><good>` column pairs.
struct CsvFormat {
    enum class Layout { long_format, wide_format };

    Layout layout = Layout::long_format;
    std::string week_column = "week";
    std::string good_column = "good";
    std::string price_column = "price";
    std::string quantity_column = "quantity";
    std::string price_prefix = "price_";
    std::string quantity_prefix = "quantity_";
    char delimiter = ',';
};

MarketPanel read_panel(std::istream& in, const CsvFormat& format, std::string region);
MarketPanel load_panel(const std::filesystem::path& path, const CsvFormat& format = {},
                       std::string region = {});

/// Writes the panel as long-format CSV (`week,good,price,quantity`).
void write_panel_csv(const MarketPanel& panel, std::ostream& out);

struct SeriesStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double sd = 0.0;  // sample (n-1) standard deviation
    double cv = 0.0;  // percent
};

/// 100 * sd / mean; NaN for a zero mean.
double coefficient_of_variation(double sd, double mean);

/// Min/max/mean/SD/CV of one series. Throws InsufficientDataError below 2 points.
SeriesStats describe(std::span<const double> values);

struct SummaryTable {
    std::string region;
    std::vector<std::string> goods;
    std::vector<SeriesStats> quantities;
    std::vector<SeriesStats> prices;
};

SummaryTable summary_stats(const MarketPanel& panel);

}  // namespace aidsfit
