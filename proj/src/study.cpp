#include "kcard/study.hpp"

#include "kcard/error.hpp"
#include "kcard/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kcard {

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double linear_slope(const QuantileCurve& curve, double q) {
    const auto x = as_vector(curve.k_vector());
    const auto y = as_vector(curve.curve(q));
    return ols_fit(x, y, 1).slope();
}

} // namespace

std::vector<Window> annual_partition(Index n_days, Index period) {
    if (period < 2) throw Error(ErrorCode::InvalidArgument, "period must be at least 2 days");
    if (n_days < period)
        throw Error(ErrorCode::TooShort, std::to_string(n_days) + " days cannot hold one " +
                                             std::to_string(period) + "-day window");
    std::vector<Window> windows;
    for (Index start = 0; start + period <= n_days; start += period) windows.push_back({start, period});
    return windows;
}

AnnualStudyRecord analyse_curve(std::shared_ptr<const QuantileCurve> curve, Index year_index,
                                double q, double alpha, double m) {
    const auto x = as_vector(curve->k_vector());
    const auto y = as_vector(curve->curve(q));
    AnnualStudyRecord record;
    record.year_index = year_index;
    record.q = q;
    record.linear = ols_fit(x, y, 1);
    record.quadratic = ols_fit(x, y, 2);
    record.comparison = compare_models(record.linear, record.quadratic, alpha, m);
    record.optima = find_optima(*curve, q, record.linear.slope());
    record.curve = std::move(curve);
    return record;
}

AnnualStudy run_annual_study(const ReturnsPanel& panel, const SamplingPlan& plan,
                             const AnnualStudyOptions& options) {
    plan.validate(panel.n_assets());
    validate_quantiles(options.quantiles);

    AnnualStudy study;
    study.windows = annual_partition(panel.n_days(), options.period);
    study.m = options.m.value_or(
        static_cast<double>(options.quantiles.size() * study.windows.size()));

    for (const Window& window : study.windows)
        study.curves.push_back(std::make_shared<const QuantileCurve>(
            build_quantile_curve(panel, window, plan, options.quantiles, options.threads)));

    for (std::size_t year = 0; year < study.windows.size(); ++year)
        for (const double q : options.quantiles)
            study.records.push_back(
                analyse_curve(study.curves[year], static_cast<Index>(year), q, options.alpha, study.m));
    return study;
}

std::vector<Index> rolling_starts(Index n_days, Index period, Index stride) {
    if (period < 2) throw Error(ErrorCode::InvalidArgument, "period must be at least 2 days");
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
    if (n_days < period)
        throw Error(ErrorCode::TooShort, std::to_string(n_days) + " days cannot hold one " +
                                             std::to_string(period) + "-day window");
    std::vector<Index> starts;
    for (Index start = 0; start + period <= n_days; start += stride) starts.push_back(start);
    return starts;
}

PrefixSharpe::PrefixSharpe(const Eigen::Ref<const Eigen::VectorXd>& series)
    : shift_(series.mean()), sum_(series.size() + 1), sum_sq_(series.size() + 1) {
    // Shifting by the overall mean keeps the sum-of-squares difference from
    // cancelling catastrophically; variance is shift invariant.
    sum_(0) = 0.0;
    sum_sq_(0) = 0.0;
    for (Index t = 0; t < series.size(); ++t) {
        const double y = series(t) - shift_;
        sum_(t + 1) = sum_(t) + y;
        sum_sq_(t + 1) = sum_sq_(t) + y * y;
    }
}

std::optional<double> PrefixSharpe::sharpe(Index start, Index length) const {
    const double n = static_cast<double>(length);
    const double s1 = sum_(start + length) - sum_(start);
    const double s2 = sum_sq_(start + length) - sum_sq_(start);
    const double total = s1 + n * shift_;
    const double sd = std::sqrt(std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0)));
    if (is_zero_volatility(sd, total / n)) return std::nullopt;
    return total / (sd * std::sqrt(n));
}

const std::vector<OptimaRecord>& RollingSeries::series(double q) const {
    for (std::size_t j = 0; j < quantiles.size(); ++j)
        if (std::abs(quantiles[j] - q) < 1e-12) return optima[j];
    throw Error(ErrorCode::InvalidArgument, "quantile " + std::to_string(q) + " not in rolling series");
}

std::vector<QuantileCurve> rolling_curves_fixed(const ReturnsPanel& panel, const SamplingPlan& plan,
                                                const std::vector<Index>& starts, Index period,
                                                std::span<const double> quantiles, unsigned threads) {
    plan.validate(panel.n_assets());
    validate_quantiles(quantiles);
    const auto n_windows = static_cast<Index>(starts.size());
    const Index n_samples = plan.n_samples;
    const Window full{0, panel.n_days()};

    std::vector<QuantileCurve> curves(starts.size());
    for (Index w = 0; w < n_windows; ++w) {
        auto& curve = curves[static_cast<std::size_t>(w)];
        curve.window = {starts[static_cast<std::size_t>(w)], period};
        curve.window.validate(panel.n_days());
        curve.quantiles.assign(quantiles.begin(), quantiles.end());
        for (Index k = plan.k_min; k <= plan.k_max; ++k) curve.k_values.push_back(k);
        curve.values.resize(plan.k_count(), static_cast<Index>(quantiles.size()));
    }

    // sharpes(w, i): sample i over window w, NaN where the variance vanished.
    Matrix sharpes(n_windows, n_samples);
    for (Index k = plan.k_min; k <= plan.k_max; ++k) {
        const std::uint64_t key = stream_key(plan, 0, k);
        const auto samples = sample_portfolios(panel.n_assets(), k, n_samples, key);

        parallel_for(n_samples, threads, [&](std::ptrdiff_t i) {
            const PrefixSharpe prefix(
                portfolio_return_series(panel, samples[static_cast<std::size_t>(i)], full));
            for (Index w = 0; w < n_windows; ++w)
                sharpes(w, i) = prefix.sharpe(starts[static_cast<std::size_t>(w)], period)
                                    .value_or(std::numeric_limits<double>::quiet_NaN());
        });

        const Index row = k - plan.k_min;
        parallel_for(n_windows, threads, [&](std::ptrdiff_t w) {
            auto& curve = curves[static_cast<std::size_t>(w)];
            std::vector<double> values(sharpes.row(w).data(), sharpes.row(w).data() + n_samples);
            for (Index i = 0; i < n_samples; ++i)
                if (std::isnan(values[static_cast<std::size_t>(i)]))
                    values[static_cast<std::size_t>(i)] = sample_sharpe(panel, k, curve.window, key, i);
            std::vector<double> out(quantiles.size());
            select_quantiles(values, quantiles, out);
            for (std::size_t j = 0; j < out.size(); ++j) curve.values(row, static_cast<Index>(j)) = out[j];
        });
    }
    return curves;
}

RollingSeries run_rolling_study(const ReturnsPanel& panel, const SamplingPlan& plan,
                                const RollingStudyOptions& options) {
    plan.validate(panel.n_assets());
    validate_quantiles(options.quantiles);

    RollingSeries series;
    series.period = options.period;
    series.stride = options.stride;
    series.k_min = plan.k_min;
    series.k_max = plan.k_max;
    series.quantiles = options.quantiles;
    series.window_starts = rolling_starts(panel.n_days(), options.period, options.stride);

    if (plan.resample_policy == ResamplePolicy::FixedAcrossWindows) {
        series.curves = rolling_curves_fixed(panel, plan, series.window_starts, options.period,
                                             options.quantiles, options.threads);
    } else {
        for (const Index start : series.window_starts)
            series.curves.push_back(build_quantile_curve(panel, {start, options.period}, plan,
                                                         options.quantiles, options.threads));
    }

    const auto n_windows = static_cast<std::ptrdiff_t>(series.window_starts.size());
    series.optima.assign(options.quantiles.size(),
                         std::vector<OptimaRecord>(series.window_starts.size()));
    parallel_for(n_windows, options.threads, [&](std::ptrdiff_t w) {
        const auto& curve = series.curves[static_cast<std::size_t>(w)];
        for (std::size_t j = 0; j < options.quantiles.size(); ++j) {
            const double q = options.quantiles[j];
            series.optima[j][static_cast<std::size_t>(w)] = find_optima(curve, q, linear_slope(curve, q));
        }
    });
    return series;
}

std::map<Index, Index> k0_histogram(const RollingSeries& series, double q) {
    std::map<Index, Index> counts;
    for (Index k = series.k_min; k <= series.k_max; ++k) counts[k] = 0;
    for (const auto& record : series.series(q)) ++counts[record.k0];
    return counts;
}

} // namespace kcard
