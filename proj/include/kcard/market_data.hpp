#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kcard {

using Index = Eigen::Index;

/// Asset-major storage: row i is the full time series of asset i, so any
/// window of one asset is a contiguous segment.
template <typename Scalar>
using PanelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = PanelMatrix<double>;

/// N assets by (T + 1) trading days of strictly positive prices.
struct PricePanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;
    Matrix prices;

    Index n_assets() const { return prices.rows(); }
    Index n_days() const { return prices.cols(); }

    /// Throws on any broken invariant (shape, positivity, date order).
    void validate() const;
};

/// N assets by T days of simple daily returns.
struct ReturnsPanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;
    Matrix returns;

    Index n_assets() const { return returns.rows(); }
    Index n_days() const { return returns.cols(); }

    void validate() const;

    /// Synthetic tickers/dates around a raw matrix; validates.
    static ReturnsPanel from_matrix(Matrix returns);
};

/// Half-open day range [start, start + length).
struct Window {
    Index start = 0;
    Index length = 0;

    Index end() const { return start + length; }
    void validate(Index n_days) const;

    friend bool operator==(const Window&, const Window&) = default;
};

struct GbmSpec {
    Index n_assets = 0;
    /// Number of return days; the generated panel has n_days + 1 price dates.
    Index n_days = 0;
    double drift_lo = 0.0;
    double drift_hi = 0.0;
    double vol_lo = 0.0;
    double vol_hi = 0.0;
    double pairwise_correlation = 0.0;
    double initial_price = 100.0;

    void validate() const;
};

enum class CsvLayout { Wide, Long };
enum class Alignment { Strict, Intersect };

PricePanel load_price_csv(const std::filesystem::path& path, CsvLayout layout,
                          Alignment align = Alignment::Strict);
PricePanel parse_price_csv(std::istream& in, CsvLayout layout,
                           Alignment align = Alignment::Strict);

ReturnsPanel compute_returns(const PricePanel& panel);

PricePanel generate_gbm_panel(const GbmSpec& spec, std::uint64_t seed);

/// Per-asset drift and volatility drawn for a given (spec, seed); these are
/// the parameters generate_gbm_panel uses.
struct GbmParameters {
    Eigen::VectorXd drift;
    Eigen::VectorXd vol;
};
GbmParameters draw_gbm_parameters(const GbmSpec& spec, std::uint64_t seed);

/// Unbiased sample covariance of the rows of `series` (variables in rows,
/// observations in columns).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
sample_covariance(const Eigen::MatrixBase<Derived>& series) {
    using Scalar = typename Derived::Scalar;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Index n_vars = series.rows();
    const Index n_obs = series.cols();
    // Plain sequential loops: vectorized reductions change summation order
    // with row alignment, and identical rows must give bit-identical entries.
    Dense centered(n_vars, n_obs);
    for (Index i = 0; i < n_vars; ++i) {
        Scalar sum(0);
        for (Index t = 0; t < n_obs; ++t) sum += series(i, t);
        const Scalar mean = sum / static_cast<Scalar>(n_obs);
        for (Index t = 0; t < n_obs; ++t) centered(i, t) = series(i, t) - mean;
    }
    Dense cov(n_vars, n_vars);
    const Scalar divisor = static_cast<Scalar>(n_obs - 1);
    for (Index j = 0; j < n_vars; ++j)
        for (Index i = j; i < n_vars; ++i) {
            Scalar acc(0);
            for (Index t = 0; t < n_obs; ++t) acc += centered(i, t) * centered(j, t);
            cov(i, j) = cov(j, i) = acc / divisor;
        }
    return cov;
}

Eigen::MatrixXd covariance_matrix(const ReturnsPanel& panel, const Window& window);

} // namespace kcard
