#include "doctest.h"

#include "kcard/error.hpp"
#include "kcard/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace kcard;

namespace {

ReturnsPanel gbm_returns(Index n_assets, Index n_days, std::uint64_t seed, double drift = 0.002) {
    GbmSpec spec{.n_assets = n_assets, .n_days = n_days, .drift_lo = -drift, .drift_hi = drift,
                 .vol_lo = 0.01, .vol_hi = 0.02, .pairwise_correlation = 0.3, .initial_price = 100.0};
    return compute_returns(generate_gbm_panel(spec, seed));
}

ReturnsPanel identical_assets(Index n_assets, Index n_days) {
    const auto one = gbm_returns(2, n_days, 6);
    Matrix r(n_assets, n_days);
    for (Index i = 0; i < n_assets; ++i) r.row(i) = one.returns.row(0);
    return ReturnsPanel::from_matrix(r);
}

RollingSeries series_of(std::vector<Index> k0s, Index k_min = 10, Index k_max = 100) {
    RollingSeries series;
    series.period = 90;
    series.k_min = k_min;
    series.k_max = k_max;
    series.quantiles = {0.5};
    series.optima.resize(1);
    for (std::size_t w = 0; w < k0s.size(); ++w) {
        series.window_starts.push_back(static_cast<Index>(w));
        OptimaRecord record;
        record.q = 0.5;
        record.k0 = k0s[w];
        series.optima[0].push_back(record);
    }
    return series;
}

} // namespace

TEST_CASE("annual partition") {
    const auto two = annual_partition(504, 252);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == Window{0, 252});
    CHECK(two[1] == Window{252, 252});

    const auto full = annual_partition(5788, 252);
    CHECK(full.size() == 22);
    CHECK(full.back().end() == 5788 - 244);
    for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i].start == full[i - 1].end());

    try {
        annual_partition(251, 252);
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooShort);
    }
}

TEST_CASE("rolling starts") {
    CHECK(rolling_starts(270, 90, 90) == std::vector<Index>{0, 90, 180});
    CHECK(rolling_starts(100, 90, 1).size() == 11);
    CHECK(rolling_starts(100, 90, 11) == std::vector<Index>{0});
    CHECK_THROWS_AS(rolling_starts(89, 90, 1), Error);
    CHECK_THROWS_AS(rolling_starts(100, 90, 0), Error);
}

TEST_CASE("annual study on diversifiable panel") {
    const auto panel = gbm_returns(60, 756, 11);
    SamplingPlan plan{.n_samples = 300, .k_min = 10, .k_max = 50, .seed = 4};
    AnnualStudyOptions options;
    const auto study = run_annual_study(panel, plan, options);
    REQUIRE(study.windows.size() == 3);
    REQUIRE(study.records.size() == 9);
    CHECK(study.m == 9.0);

    for (const auto& record : study.records) {
        CHECK(record.curve->window == study.windows[static_cast<std::size_t>(record.year_index)]);
        CHECK(record.optima.k_hat.has_value() ==
              (record.linear.slope() > slope_noise_floor(*record.curve, record.q)));
        if (record.q == 0.1) CHECK(record.linear.slope() > 0.0);
        if (record.q == 0.9) CHECK(record.linear.slope() < 0.0);
        if (record.optima.k_hat) {
            const Eigen::VectorXd curve = record.curve->curve(record.q);
            CHECK(*record.optima.delta >= 0.0);
            CHECK(*record.optima.delta <= curve.maxCoeff() - curve.minCoeff());
            CHECK(*record.optima.k_hat <= plan.k_max);
        }
    }

    SUBCASE("repeat runs and thread counts agree bitwise") {
        auto threaded = options;
        threaded.threads = 8;
        const auto again = run_annual_study(panel, plan, threaded);
        REQUIRE(again.records.size() == study.records.size());
        for (std::size_t i = 0; i < study.records.size(); ++i) {
            CHECK(again.records[i].curve->values == study.records[i].curve->values);
            CHECK(again.records[i].linear.coefficients == study.records[i].linear.coefficients);
            CHECK(again.records[i].quadratic.p_values == study.records[i].quadratic.p_values);
            CHECK(again.records[i].optima.k0 == study.records[i].optima.k0);
            CHECK(again.records[i].optima.k_hat == study.records[i].optima.k_hat);
            CHECK(again.records[i].optima.delta == study.records[i].optima.delta);
            CHECK(again.records[i].comparison.verdict == study.records[i].comparison.verdict);
        }
    }
}

TEST_CASE("identical assets give flat curves") {
    const auto panel = identical_assets(30, 504);
    SamplingPlan plan{.n_samples = 50, .k_min = 10, .k_max = 30, .seed = 2};
    const auto study = run_annual_study(panel, plan, {});
    for (const auto& record : study.records) CHECK(record.optima.k0 == 10);

    RollingStudyOptions options;
    options.stride = 45;
    plan.resample_policy = ResamplePolicy::FixedAcrossWindows;
    const auto rolling = run_rolling_study(panel, plan, options);
    for (const double q : options.quantiles)
        for (const auto& record : rolling.series(q)) CHECK(record.k0 == 10);
}

TEST_CASE("prefix sums match direct window Sharpe ratios") {
    const auto panel = gbm_returns(30, 400, 8);
    const Window full{0, 400};
    for (const Index k : {1, 5, 17, 30}) {
        for (const auto& sample : sample_portfolios(30, k, 20, 100 + static_cast<std::uint64_t>(k))) {
            const PrefixSharpe prefix(portfolio_return_series(panel, sample, full));
            for (Index start = 0; start + 90 <= 400; start += 7) {
                for (const Index length : {10, 20, 30, 60, 90}) {
                    const double direct = sharpe_ratio(panel, sample, {start, length});
                    const auto fast = prefix.sharpe(start, length);
                    REQUIRE(fast.has_value());
                    CHECK(std::abs(*fast - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
                }
            }
        }
    }
}

TEST_CASE("prefix-sum curves match per-window curves with the same samples") {
    const auto panel = gbm_returns(30, 400, 9);
    SamplingPlan plan{.n_samples = 200, .k_min = 2, .k_max = 20, .seed = 13,
                      .resample_policy = ResamplePolicy::FixedAcrossWindows};
    const std::vector<double> qs{0.1, 0.5, 0.9};
    const auto starts = rolling_starts(400, 90, 31);
    const auto fast = rolling_curves_fixed(panel, plan, starts, 90, qs, 1);
    REQUIRE(fast.size() == starts.size());
    for (std::size_t w = 0; w < starts.size(); ++w) {
        const auto direct = build_quantile_curve(panel, {starts[w], 90}, plan, qs, 1);
        CHECK(fast[w].window == direct.window);
        CHECK((fast[w].values - direct.values).cwiseAbs().maxCoeff() <= 1e-10);
    }
    CHECK(rolling_curves_fixed(panel, plan, starts, 90, qs, 8)[3].values == fast[3].values);
}

TEST_CASE("single rolling step matches a one-window run") {
    const auto panel = gbm_returns(25, 200, 10);
    RollingStudyOptions options;
    options.stride = 200 - 90 + 1;
    for (const auto policy : {ResamplePolicy::PerWindow, ResamplePolicy::FixedAcrossWindows}) {
        SamplingPlan plan{.n_samples = 200, .k_min = 2, .k_max = 20, .seed = 1, .resample_policy = policy};
        const auto rolling = run_rolling_study(panel, plan, options);
        REQUIRE(rolling.window_starts == std::vector<Index>{0});
        const auto curve = build_quantile_curve(panel, {0, 90}, plan, options.quantiles, 1);
        CHECK((rolling.curves[0].values - curve.values).cwiseAbs().maxCoeff() <= 1e-10);
        for (std::size_t j = 0; j < options.quantiles.size(); ++j)
            CHECK(rolling.optima[j][0].k0 == raw_optimum(curve, options.quantiles[j]));
        if (policy == ResamplePolicy::PerWindow) CHECK(rolling.curves[0].values == curve.values);
    }
}

TEST_CASE("k0 histogram") {
    const auto constant = k0_histogram(series_of({37, 37, 37, 37}), 0.5);
    CHECK(constant.size() == 91);
    CHECK(std::count_if(constant.begin(), constant.end(), [](const auto& kv) { return kv.second > 0; }) == 1);
    CHECK(constant.at(37) == 4);

    const auto counted = k0_histogram(series_of({10, 10, 100}), 0.5);
    CHECK(counted.at(10) == 2);
    CHECK(counted.at(100) == 1);
    CHECK(counted.at(55) == 0);

    const auto panel = gbm_returns(40, 300, 12);
    SamplingPlan plan{.n_samples = 100, .k_min = 5, .k_max = 25, .seed = 3,
                      .resample_policy = ResamplePolicy::FixedAcrossWindows};
    RollingStudyOptions options;
    options.stride = 3;
    const auto rolling = run_rolling_study(panel, plan, options);
    for (const double q : options.quantiles) {
        const auto histogram = k0_histogram(rolling, q);
        CHECK(histogram.size() == 21);
        const Index total = std::accumulate(histogram.begin(), histogram.end(), Index{0},
                                            [](Index acc, const auto& kv) { return acc + kv.second; });
        CHECK(total == static_cast<Index>(rolling.window_starts.size()));
    }
    CHECK_THROWS_AS(k0_histogram(rolling, 0.25), Error);
}
