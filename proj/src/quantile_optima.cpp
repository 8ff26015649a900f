#include "kcard/quantile_optima.hpp"

#include "kcard/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kcard {

namespace {

void check_q(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw Error(ErrorCode::InvalidArgument, "quantile must lie in (0, 1), got " + std::to_string(q));
}

// Smallest index whose value is within the tie tolerance of the maximum.
Index tolerant_argmax(const Eigen::Ref<const Eigen::VectorXd>& objective) {
    const double best = objective.maxCoeff();
    const double slack = kArgmaxTieTolerance * std::max(1.0, std::abs(best));
    for (Index i = 0; i < objective.size(); ++i)
        if (objective(i) >= best - slack) return i;
    return 0;
}

} // namespace

void select_quantiles(std::span<double> values, std::span<const double> qs, std::span<double> out) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    const auto n = values.size();
    for (std::size_t j = 0; j < qs.size(); ++j) {
        check_q(qs[j]);
        const double h = static_cast<double>(n - 1) * qs[j];
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double frac = h - static_cast<double>(lo);
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
        const double lower = values[lo];
        double upper = lower;
        if (lo + 1 < n)
            upper = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
        out[j] = frac == 0.0 ? lower : lower + frac * (upper - lower);
    }
}

double empirical_quantile(std::span<const double> values, double q) {
    std::vector<double> scratch(values.begin(), values.end());
    double out = 0.0;
    select_quantiles(scratch, std::span<const double>(&q, 1), std::span<double>(&out, 1));
    return out;
}

Index QuantileCurve::q_column(double q) const {
    for (std::size_t j = 0; j < quantiles.size(); ++j)
        if (std::abs(quantiles[j] - q) < 1e-12) return static_cast<Index>(j);
    throw Error(ErrorCode::InvalidArgument, "quantile " + std::to_string(q) + " not in curve");
}

Index QuantileCurve::k_row(Index k) const {
    if (k_values.empty() || k < k_values.front() || k > k_values.back())
        throw Error(ErrorCode::InvalidArgument, "cardinality " + std::to_string(k) + " not in curve");
    const auto it = std::lower_bound(k_values.begin(), k_values.end(), k);
    if (it == k_values.end() || *it != k)
        throw Error(ErrorCode::InvalidArgument, "cardinality " + std::to_string(k) + " not in curve");
    return static_cast<Index>(it - k_values.begin());
}

Eigen::VectorXd QuantileCurve::k_vector() const {
    Eigen::VectorXd out(static_cast<Index>(k_values.size()));
    for (std::size_t i = 0; i < k_values.size(); ++i) out(static_cast<Index>(i)) = static_cast<double>(k_values[i]);
    return out;
}

void QuantileCurve::validate() const {
    if (k_values.empty()) throw Error(ErrorCode::EmptyInput, "curve has no cardinalities");
    for (std::size_t i = 1; i < k_values.size(); ++i)
        if (k_values[i - 1] >= k_values[i])
            throw Error(ErrorCode::InvalidArgument, "curve cardinalities must be strictly increasing");
    validate_quantiles(quantiles);
    if (values.rows() != static_cast<Index>(k_values.size()) ||
        values.cols() != static_cast<Index>(quantiles.size()))
        throw Error(ErrorCode::InvalidArgument, "curve values do not match its axes");
    if (!values.allFinite()) throw Error(ErrorCode::InvalidArgument, "curve values must be finite");
}

void validate_quantiles(std::span<const double> quantiles) {
    if (quantiles.empty()) throw Error(ErrorCode::EmptyInput, "no quantiles requested");
    for (std::size_t j = 0; j < quantiles.size(); ++j) {
        check_q(quantiles[j]);
        for (std::size_t i = 0; i < j; ++i)
            if (std::abs(quantiles[i] - quantiles[j]) < 1e-12)
                throw Error(ErrorCode::InvalidArgument, "duplicate quantile");
    }
}

QuantileCurve build_quantile_curve(const ReturnsPanel& panel, const Window& window,
                                   const SamplingPlan& plan, std::span<const double> quantiles,
                                   unsigned threads) {
    plan.validate(panel.n_assets());
    window.validate(panel.n_days());
    validate_quantiles(quantiles);

    QuantileCurve curve;
    curve.window = window;
    curve.quantiles.assign(quantiles.begin(), quantiles.end());
    for (Index k = plan.k_min; k <= plan.k_max; ++k) curve.k_values.push_back(k);
    curve.values.resize(plan.k_count(), static_cast<Index>(quantiles.size()));

    std::vector<std::vector<double>> rows(static_cast<std::size_t>(plan.k_count()));
    parallel_for(plan.k_count(), threads, [&](std::ptrdiff_t row) {
        auto sharpes = sharpe_distribution(panel, plan.k_min + row, window, plan);
        auto& out = rows[static_cast<std::size_t>(row)];
        out.resize(quantiles.size());
        select_quantiles(sharpes, quantiles, out);
    });
    for (Index row = 0; row < plan.k_count(); ++row)
        for (Index j = 0; j < curve.values.cols(); ++j)
            curve.values(row, j) = rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
    return curve;
}

Index raw_optimum(const QuantileCurve& curve, double q) {
    const Eigen::VectorXd values = curve.curve(q);
    return curve.k_values[static_cast<std::size_t>(tolerant_argmax(values))];
}

double slope_noise_floor(const QuantileCurve& curve, double q) {
    const Eigen::VectorXd values = curve.curve(q);
    const double k_span = static_cast<double>(curve.k_values.back() - curve.k_values.front());
    if (k_span <= 0.0) return 0.0;
    return kSlopeNoiseFactor * std::numeric_limits<double>::epsilon() * values.cwiseAbs().maxCoeff() / k_span;
}

std::optional<Index> penalized_optimum(const QuantileCurve& curve, double q, double slope) {
    if (!(slope > slope_noise_floor(curve, q))) return std::nullopt;
    const Eigen::VectorXd objective = curve.curve(q) - slope * curve.k_vector();
    return curve.k_values[static_cast<std::size_t>(tolerant_argmax(objective))];
}

double sharpe_deviation(const QuantileCurve& curve, double q, Index k0, Index k_hat) {
    // k0 may sit a tie-tolerance below the true maximum; clamp the rounding.
    return std::max(0.0, curve.value(k0, q) - curve.value(k_hat, q));
}

OptimaRecord find_optima(const QuantileCurve& curve, double q, double slope) {
    OptimaRecord record;
    record.q = q;
    record.slope = slope;
    record.k0 = raw_optimum(curve, q);
    record.k_hat = penalized_optimum(curve, q, slope);
    if (record.k_hat) record.delta = sharpe_deviation(curve, q, record.k0, *record.k_hat);
    return record;
}

} // namespace kcard
