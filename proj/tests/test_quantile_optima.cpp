#include "doctest.h"

#include "kcard/error.hpp"
#include "kcard/quantile_optima.hpp"
#include "kcard/regression.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace kcard;

namespace {

// Sort-based reference for the interpolated order statistic.
double sorted_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v[lo];
    return v[lo] + (h - std::floor(h)) * (v[lo + 1] - v[lo]);
}

QuantileCurve curve_from(auto&& fn, Index k_min = 10, Index k_max = 100) {
    QuantileCurve curve;
    curve.window = {0, 252};
    curve.quantiles = {0.1, 0.5, 0.9};
    for (Index k = k_min; k <= k_max; ++k) curve.k_values.push_back(k);
    curve.values.resize(static_cast<Index>(curve.k_values.size()), 3);
    for (std::size_t i = 0; i < curve.k_values.size(); ++i)
        curve.values.row(static_cast<Index>(i)).setConstant(fn(static_cast<double>(curve.k_values[i])));
    return curve;
}

double fitted_slope(const QuantileCurve& curve, double q) {
    const Eigen::VectorXd x = curve.k_vector();
    const Eigen::VectorXd y = curve.curve(q);
    return ols_fit({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())}, 1)
        .slope();
}

} // namespace

TEST_CASE("empirical quantile examples") {
    const std::vector<double> v{5, 3, 1, 4, 2};
    CHECK(empirical_quantile(v, 0.5) == 3.0);
    CHECK(empirical_quantile(v, 0.1) == doctest::Approx(1.4).epsilon(1e-15));
    const std::vector<double> flat(17, -0.25);
    for (const double q : {0.01, 0.1, 0.5, 0.9, 0.99}) CHECK(empirical_quantile(flat, q) == -0.25);
    CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(empirical_quantile(v, 1.0), Error);
    CHECK(empirical_quantile(Eigen::Vector3d(3, 1, 2), 0.25) == doctest::Approx(1.5));
}

TEST_CASE("selection matches the sort-based reference and is monotone in q") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
        std::vector<double> v(n);
        for (auto& x : v) x = normal(rng);
        if (trial % 5 == 0) v.insert(v.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
        const std::vector<double> qs{0.05, 0.1, 0.37, 0.5, 0.9, 0.999};
        std::vector<double> out(qs.size());
        auto scratch = v;
        select_quantiles(scratch, qs, out);
        for (std::size_t j = 0; j < qs.size(); ++j) {
            CHECK(out[j] == sorted_quantile(v, qs[j]));
            if (j > 0) CHECK(out[j - 1] <= out[j]);
        }
    }
}

TEST_CASE("raw optimum") {
    CHECK(raw_optimum(curve_from([](double k) { return 0.01 * k; }), 0.5) == 100);
    CHECK(raw_optimum(curve_from([](double) { return 0.3; }), 0.5) == 10);
    CHECK(raw_optimum(curve_from([](double k) { return -(k - 40) * (k - 40); }), 0.1) == 40);
    CHECK_THROWS_AS(raw_optimum(curve_from([](double) { return 0.0; }), 0.25), Error);
}

TEST_CASE("penalized optimum") {
    SUBCASE("exactly linear curve gives the smallest k") {
        const auto curve = curve_from([](double k) { return 0.2 + 0.013 * k; });
        const double slope = fitted_slope(curve, 0.1);
        CHECK(slope == doctest::Approx(0.013).epsilon(1e-10));
        CHECK(penalized_optimum(curve, 0.1, slope) == 10);
    }
    SUBCASE("symmetric parabola has zero slope and no penalized optimum") {
        const auto curve = curve_from([](double k) { return -(k - 55) * (k - 55); });
        const double slope = fitted_slope(curve, 0.1);
        CHECK(std::abs(slope) < 1e-9);
        CHECK(std::abs(slope) <= slope_noise_floor(curve, 0.1));
        CHECK_FALSE(penalized_optimum(curve, 0.1, slope).has_value());
        CHECK_FALSE(find_optima(curve, 0.1, slope).k_hat.has_value());
        CHECK_FALSE(penalized_optimum(curve, 0.1, 0.0).has_value());
        CHECK_FALSE(penalized_optimum(curve, 0.1, -1e-3).has_value());
    }
    SUBCASE("tilted parabola against a brute-force scan") {
        const auto curve = curve_from([](double k) { return -(k - 40) * (k - 40) + 0.5 * k; });
        // Fitted slope is 80.5 - 2 * 55 < 0, so the fitted penalty does not apply.
        CHECK(fitted_slope(curve, 0.5) == doctest::Approx(-29.5).epsilon(1e-10));
        CHECK_FALSE(penalized_optimum(curve, 0.5, fitted_slope(curve, 0.5)).has_value());
        for (const double slope : {0.25, 0.5, 3.0, 17.0, 60.0}) {
            Index best_k = 10;
            double best = -1e300;
            for (Index k = 10; k <= 100; ++k) {
                const double kd = static_cast<double>(k);
                const double objective = -(kd - 40) * (kd - 40) + 0.5 * kd - slope * kd;
                if (objective > best) {
                    best = objective;
                    best_k = k;
                }
            }
            CHECK(penalized_optimum(curve, 0.5, slope) == best_k);
        }
    }
}

TEST_CASE("Sharpe deviation") {
    const auto parabola = curve_from([](double k) { return -(k - 40) * (k - 40); });
    CHECK(sharpe_deviation(parabola, 0.1, 40, 40) == 0.0);
    CHECK(sharpe_deviation(parabola, 0.1, 40, 30) == 100.0);
    const auto flat = curve_from([](double) { return 1.5; });
    for (Index k = 10; k <= 100; k += 7) CHECK(sharpe_deviation(flat, 0.9, 10, k) == 0.0);
}

TEST_CASE("optima are invariant under positive scaling") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = std::uniform_real_distribution<double>(-1e-4, 1e-4)(rng);
        const double b = std::uniform_real_distribution<double>(-0.02, 0.02)(rng);
        auto base = curve_from([&](double k) { return 0.5 + b * k + a * k * k + noise(rng); });
        for (const double c : {0.25, 3.0, 40.0}) {
            auto scaled = base;
            scaled.values *= c;
            for (const double q : base.quantiles) {
                const auto r1 = find_optima(base, q, fitted_slope(base, q));
                const auto r2 = find_optima(scaled, q, fitted_slope(scaled, q));
                CHECK(r1.k0 == r2.k0);
                CHECK(r1.k_hat == r2.k_hat);
                if (r1.delta) {
                    CHECK(*r1.delta >= 0.0);
                    CHECK(*r2.delta == doctest::Approx(c * *r1.delta).epsilon(1e-9));
                    CHECK((*r1.delta == 0.0) == (base.value(*r1.k_hat, q) == base.value(r1.k0, q)));
                }
            }
        }
    }
}

TEST_CASE("built curves") {
    GbmSpec spec{.n_assets = 12, .n_days = 80, .drift_lo = -0.002, .drift_hi = 0.002, .vol_lo = 0.01,
                 .vol_hi = 0.02, .pairwise_correlation = 0.2, .initial_price = 100.0};
    const auto panel = compute_returns(generate_gbm_panel(spec, 31));
    SamplingPlan plan{.n_samples = 300, .k_min = 2, .k_max = 12, .seed = 5};
    const std::vector<double> qs{0.1, 0.5, 0.9};
    const auto curve = build_quantile_curve(panel, {10, 60}, plan, qs, 1);
    curve.validate();
    for (Index row = 0; row < curve.values.rows(); ++row) {
        CHECK(curve.values(row, 0) <= curve.values(row, 1));
        CHECK(curve.values(row, 1) <= curve.values(row, 2));
    }
    CHECK(curve.value(12, 0.1) == curve.value(12, 0.9));
    CHECK(build_quantile_curve(panel, {10, 60}, plan, qs, 8).values == curve.values);
    CHECK_THROWS_AS(build_quantile_curve(panel, {10, 60}, plan, std::vector<double>{0.5, 0.5}), Error);
}
