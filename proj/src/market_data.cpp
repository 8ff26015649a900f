#include "kcard/market_data.hpp"

#include "kcard/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string_view>

namespace kcard {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int y = std::stoi(std::string(s.substr(0, 4)));
    const unsigned m = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
    const unsigned d = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                       std::chrono::day{d}}
        .ok();
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no); }

std::string parse_date(std::string_view field, std::size_t line_no) {
    if (!is_iso_date(field))
        throw Error(ErrorCode::ParseError,
                    where(line_no) + ": expected ISO-8601 date, got '" + std::string(field) + "'");
    return std::string(field);
}

double parse_price(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw Error(ErrorCode::ParseError,
                    where(line_no) + ": cannot parse price '" + std::string(field) + "'");
    if (!std::isfinite(value) || value <= 0.0)
        throw Error(ErrorCode::NonPositivePrice,
                    where(line_no) + ": price must be positive and finite, got '" +
                        std::string(field) + "'");
    return value;
}

// ticker -> date -> price
using CellMap = std::map<std::string, std::map<std::string, double>>;

PricePanel assemble(const CellMap& cells, const std::set<std::string>& all_dates, Alignment align) {
    std::vector<std::string> dates;
    for (const auto& date : all_dates) {
        bool complete = true;
        for (const auto& [ticker, series] : cells) {
            if (!series.contains(date)) {
                if (align == Alignment::Strict)
                    throw Error(ErrorCode::MissingCell,
                                "no price for ticker " + ticker + " on " + date);
                complete = false;
                break;
            }
        }
        if (complete) dates.push_back(date);
    }

    PricePanel panel;
    panel.dates = dates;
    panel.prices.resize(static_cast<Index>(cells.size()), static_cast<Index>(dates.size()));
    Index row = 0;
    for (const auto& [ticker, series] : cells) {
        panel.tickers.push_back(ticker);
        for (Index col = 0; col < panel.prices.cols(); ++col)
            panel.prices(row, col) = series.at(dates[static_cast<std::size_t>(col)]);
        ++row;
    }
    panel.validate();
    return panel;
}

PricePanel parse_wide(std::istream& in, Alignment align) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV input");
    const auto header = split_fields(line);
    if (header.size() < 2 || header[0] != "date")
        throw Error(ErrorCode::ParseError, "wide layout header must be date,<ticker>,...");

    std::vector<std::string> tickers;
    CellMap cells;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string ticker(header[c]);
        if (ticker.empty()) throw Error(ErrorCode::ParseError, "empty ticker in header");
        if (cells.contains(ticker))
            throw Error(ErrorCode::ParseError, "duplicate ticker column " + ticker);
        cells[ticker];
        tickers.push_back(ticker);
    }

    std::set<std::string> all_dates;
    std::string previous;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::ParseError, where(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields");
        auto date = parse_date(fields[0], line_no);
        if (!previous.empty() && date <= previous)
            throw Error(ErrorCode::NonMonotoneDates,
                        where(line_no) + ": " + date + " does not follow " + previous);
        previous = date;
        all_dates.insert(date);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            cells[tickers[c - 1]][date] = parse_price(fields[c], line_no);
        }
    }
    return assemble(cells, all_dates, align);
}

PricePanel parse_long(std::istream& in, Alignment align) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV input");
    const auto header = split_fields(line);
    if (header.size() != 3 || header[0] != "date" || header[1] != "ticker" || header[2] != "price")
        throw Error(ErrorCode::ParseError, "long layout header must be date,ticker,price");

    CellMap cells;
    std::set<std::string> all_dates;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3)
            throw Error(ErrorCode::ParseError, where(line_no) + ": expected 3 fields");
        auto date = parse_date(fields[0], line_no);
        const std::string ticker(fields[1]);
        if (ticker.empty()) throw Error(ErrorCode::ParseError, where(line_no) + ": empty ticker");
        const double price = parse_price(fields[2], line_no);
        auto& series = cells[ticker];
        if (series.contains(date))
            throw Error(ErrorCode::NonMonotoneDates,
                        where(line_no) + ": repeated date " + date + " for " + ticker);
        series.emplace(date, price);
        all_dates.insert(std::move(date));
    }
    return assemble(cells, all_dates, align);
}

std::vector<std::string> synthetic_tickers(Index n) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
    for (Index i = 0; i < n; ++i) {
        auto digits = std::to_string(i);
        out.push_back("S" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    }
    return out;
}

// Weekday calendar starting 2000-01-03.
std::vector<std::string> synthetic_dates(Index n) {
    using namespace std::chrono;
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    sys_days day = sys_days{year{2000} / January / 3};
    while (static_cast<Index>(out.size()) < n) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            out.emplace_back(buf);
        }
        day += days{1};
    }
    return out;
}

} // namespace

void PricePanel::validate() const {
    if (n_assets() < 2) throw Error(ErrorCode::InvalidArgument, "price panel needs at least 2 assets");
    if (n_days() < 3) throw Error(ErrorCode::InvalidArgument, "price panel needs at least 3 dates");
    if (static_cast<Index>(tickers.size()) != n_assets() || static_cast<Index>(dates.size()) != n_days())
        throw Error(ErrorCode::InvalidArgument, "price panel labels do not match matrix shape");
    for (std::size_t t = 1; t < dates.size(); ++t)
        if (!(dates[t - 1] < dates[t]))
            throw Error(ErrorCode::NonMonotoneDates, dates[t] + " does not follow " + dates[t - 1]);
    if (!prices.allFinite() || (prices.array() <= 0.0).any())
        throw Error(ErrorCode::NonPositivePrice, "prices must be positive and finite");
}

void ReturnsPanel::validate() const {
    if (n_assets() < 1 || n_days() < 2)
        throw Error(ErrorCode::InvalidArgument, "returns panel needs at least 1 asset and 2 days");
    if (static_cast<Index>(tickers.size()) != n_assets() || static_cast<Index>(dates.size()) != n_days())
        throw Error(ErrorCode::InvalidArgument, "returns panel labels do not match matrix shape");
    if (!returns.allFinite() || (returns.array() <= -1.0).any())
        throw Error(ErrorCode::InvalidArgument, "returns must be finite and greater than -1");
}

ReturnsPanel ReturnsPanel::from_matrix(Matrix returns) {
    ReturnsPanel panel;
    panel.tickers = synthetic_tickers(returns.rows());
    panel.dates = synthetic_dates(returns.cols());
    panel.returns = std::move(returns);
    panel.validate();
    return panel;
}

void Window::validate(Index n_days) const {
    if (start < 0 || length < 2 || start + length > n_days)
        throw Error(ErrorCode::InvalidArgument,
                    "window [" + std::to_string(start) + ", " + std::to_string(start + length) +
                        ") invalid for " + std::to_string(n_days) + " days");
}

void GbmSpec::validate() const {
    if (n_assets < 2 || n_days < 3)
        throw Error(ErrorCode::DegenerateSpec, "GBM spec needs n_assets >= 2 and n_days >= 3");
    const bool finite = std::isfinite(drift_lo) && std::isfinite(drift_hi) &&
                        std::isfinite(vol_lo) && std::isfinite(vol_hi) &&
                        std::isfinite(initial_price);
    if (!finite || drift_lo > drift_hi || vol_lo < 0.0 || vol_lo > vol_hi)
        throw Error(ErrorCode::InvalidArgument, "GBM drift/vol ranges must be finite and ordered");
    if (!(pairwise_correlation >= 0.0 && pairwise_correlation < 1.0))
        throw Error(ErrorCode::InvalidArgument, "GBM pairwise correlation must lie in [0, 1)");
    if (!(initial_price > 0.0))
        throw Error(ErrorCode::InvalidArgument, "GBM initial price must be positive");
}

PricePanel load_price_csv(const std::filesystem::path& path, CsvLayout layout, Alignment align) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return parse_price_csv(in, layout, align);
}

PricePanel parse_price_csv(std::istream& in, CsvLayout layout, Alignment align) {
    return layout == CsvLayout::Wide ? parse_wide(in, align) : parse_long(in, align);
}

ReturnsPanel compute_returns(const PricePanel& panel) {
    panel.validate();
    const Index days = panel.n_days() - 1;
    ReturnsPanel out;
    out.tickers = panel.tickers;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    out.returns = panel.prices.rightCols(days).cwiseQuotient(panel.prices.leftCols(days)).array() - 1.0;
    out.validate();
    return out;
}

GbmParameters draw_gbm_parameters(const GbmSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) {
        return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    GbmParameters params{Eigen::VectorXd(spec.n_assets), Eigen::VectorXd(spec.n_assets)};
    for (Index i = 0; i < spec.n_assets; ++i) params.drift(i) = uniform(spec.drift_lo, spec.drift_hi);
    for (Index i = 0; i < spec.n_assets; ++i) params.vol(i) = uniform(spec.vol_lo, spec.vol_hi);
    return params;
}

PricePanel generate_gbm_panel(const GbmSpec& spec, std::uint64_t seed) {
    const GbmParameters params = draw_gbm_parameters(spec, seed);
    // Parameters consume the first 2N draws; the shocks use a separate stream.
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double common_weight = std::sqrt(spec.pairwise_correlation);
    const double own_weight = std::sqrt(1.0 - spec.pairwise_correlation);

    PricePanel panel;
    panel.tickers = synthetic_tickers(spec.n_assets);
    panel.dates = synthetic_dates(spec.n_days + 1);
    panel.prices.resize(spec.n_assets, spec.n_days + 1);
    panel.prices.col(0).setConstant(spec.initial_price);
    for (Index t = 0; t < spec.n_days; ++t) {
        const double market = normal(rng);
        for (Index i = 0; i < spec.n_assets; ++i) {
            const double shock = common_weight * market + own_weight * normal(rng);
            const double log_return = params.drift(i) + params.vol(i) * shock;
            panel.prices(i, t + 1) = panel.prices(i, t) * std::exp(log_return);
        }
    }
    panel.validate();
    return panel;
}

Eigen::MatrixXd covariance_matrix(const ReturnsPanel& panel, const Window& window) {
    window.validate(panel.n_days());
    return sample_covariance(panel.returns.middleCols(window.start, window.length));
}

} // namespace kcard
