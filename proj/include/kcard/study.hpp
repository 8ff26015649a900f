#pragma once

#include "kcard/quantile_optima.hpp"
#include "kcard/regression.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace kcard {

/// floor(T / P) consecutive non-overlapping windows from day 0; the trailing
/// remainder is dropped. Throws TooShort when T < P.
std::vector<Window> annual_partition(Index n_days, Index period);

struct AnnualStudyOptions {
    Index period = 252;
    std::vector<double> quantiles{0.1, 0.5, 0.9};
    double alpha = 0.05;
    /// Bonferroni hypothesis count; defaults to quantiles x windows.
    std::optional<double> m;
    unsigned threads = 0;
};

struct AnnualStudyRecord {
    Index year_index = 0;
    double q = 0.0;
    RegressionFit linear;
    RegressionFit quadratic;
    ModelComparison comparison;
    OptimaRecord optima;
    std::shared_ptr<const QuantileCurve> curve;

    double sharpe_at_k0() const { return curve->value(optima.k0, q); }
};

struct AnnualStudy {
    std::vector<Window> windows;
    std::vector<std::shared_ptr<const QuantileCurve>> curves;
    /// Ordered by year, then by quantile in option order.
    std::vector<AnnualStudyRecord> records;
    double m = 1.0;
};

/// Fits, model comparison and optima for one quantile of one curve.
AnnualStudyRecord analyse_curve(std::shared_ptr<const QuantileCurve> curve, Index year_index,
                                double q, double alpha, double m);

AnnualStudy run_annual_study(const ReturnsPanel& panel, const SamplingPlan& plan,
                             const AnnualStudyOptions& options);

/// Window starts 0, stride, 2 * stride, ... with start + period <= n_days.
std::vector<Index> rolling_starts(Index n_days, Index period, Index stride);

/// Window Sharpe ratios of one portfolio from prefix sums of its full-history
/// return series: O(n_days) setup, O(1) per window.
class PrefixSharpe {
public:
    explicit PrefixSharpe(const Eigen::Ref<const Eigen::VectorXd>& series);

    /// Empty when the window's variance is numerically zero.
    std::optional<double> sharpe(Index start, Index length) const;

private:
    double shift_ = 0.0;
    Eigen::VectorXd sum_;
    Eigen::VectorXd sum_sq_;
};

struct RollingStudyOptions {
    Index period = 90;
    Index stride = 1;
    std::vector<double> quantiles{0.1, 0.5, 0.9};
    unsigned threads = 0;
};

struct RollingSeries {
    Index period = 0;
    Index stride = 1;
    Index k_min = 0;
    Index k_max = 0;
    std::vector<Index> window_starts;
    std::vector<double> quantiles;
    /// optima[j][w]: quantile j, window w.
    std::vector<std::vector<OptimaRecord>> optima;
    std::vector<QuantileCurve> curves;

    const std::vector<OptimaRecord>& series(double q) const;
};

RollingSeries run_rolling_study(const ReturnsPanel& panel, const SamplingPlan& plan,
                                const RollingStudyOptions& options);

/// Curves for every rolling window with portfolios drawn once per k and
/// Sharpe values taken from prefix sums.
std::vector<QuantileCurve> rolling_curves_fixed(const ReturnsPanel& panel, const SamplingPlan& plan,
                                                const std::vector<Index>& starts, Index period,
                                                std::span<const double> quantiles, unsigned threads);

/// Counts of k0 over all windows for quantile q, one bin per k in
/// [k_min, k_max] (empty bins included).
std::map<Index, Index> k0_histogram(const RollingSeries& series, double q);

} // namespace kcard
