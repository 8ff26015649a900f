#pragma once

#include "kcard/portfolio.hpp"

#include <optional>
#include <span>
#include <vector>

namespace kcard {

/// Linear-interpolation order-statistic quantiles of `values` for each q in
/// `qs`, written to `out`. Reorders `values` (selection, not a full sort).
void select_quantiles(std::span<double> values, std::span<const double> qs, std::span<double> out);

double empirical_quantile(std::span<const double> values, double q);

template <typename Derived>
double empirical_quantile(const Eigen::DenseBase<Derived>& values, double q) {
    const Eigen::VectorXd copy = values.derived().template cast<double>().reshaped();
    return empirical_quantile(std::span<const double>(copy.data(), static_cast<std::size_t>(copy.size())), q);
}

/// Representative Sharpe values Q(k, q) for one window: rows follow
/// k_values, columns follow quantiles.
struct QuantileCurve {
    Window window;
    std::vector<Index> k_values;
    std::vector<double> quantiles;
    Eigen::MatrixXd values;

    Index q_column(double q) const;
    Index k_row(Index k) const;
    double value(Index k, double q) const { return values(k_row(k), q_column(q)); }
    Eigen::VectorXd curve(double q) const { return values.col(q_column(q)); }
    Eigen::VectorXd k_vector() const;

    void validate() const;
};

void validate_quantiles(std::span<const double> quantiles);

QuantileCurve build_quantile_curve(const ReturnsPanel& panel, const Window& window,
                                   const SamplingPlan& plan, std::span<const double> quantiles,
                                   unsigned threads = 1);

/// Two curve values closer than this (relative to max(1, |max|)) count as a
/// tie; ties resolve to the smallest k.
inline constexpr double kArgmaxTieTolerance = 1e-12;

Index raw_optimum(const QuantileCurve& curve, double q);

/// Slopes whose total change over [k_min, k_max] is within this many ulps of
/// the curve's magnitude are rounding noise and count as zero.
inline constexpr double kSlopeNoiseFactor = 1e3;

/// Largest |slope| indistinguishable from zero for the curve at quantile q.
double slope_noise_floor(const QuantileCurve& curve, double q);

/// Argmax of Q(k, q) - k * slope; absent unless slope exceeds the noise floor.
std::optional<Index> penalized_optimum(const QuantileCurve& curve, double q, double slope);

/// Sharpe given up by holding k_hat instead of k0; never negative.
double sharpe_deviation(const QuantileCurve& curve, double q, Index k0, Index k_hat);

struct OptimaRecord {
    double q = 0.0;
    Index k0 = 0;
    std::optional<Index> k_hat;
    std::optional<double> delta;
    double slope = 0.0;
};

OptimaRecord find_optima(const QuantileCurve& curve, double q, double slope);

} // namespace kcard
