#include "kcard/portfolio.hpp"

#include "kcard/parallel.hpp"

#include <numeric>
#include <string>

namespace kcard {

namespace {

void check_cardinality(Index n_assets, Index k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "cardinality must be at least 1");
    if (k > n_assets)
        throw Error(ErrorCode::KTooLarge, "cardinality " + std::to_string(k) + " exceeds " +
                                              std::to_string(n_assets) + " assets");
}

void check_sample(const ReturnsPanel& panel, const PortfolioSample& sample) {
    if (sample.indices.empty()) throw Error(ErrorCode::InvalidArgument, "empty portfolio");
    for (std::size_t i = 0; i < sample.indices.size(); ++i) {
        const Index idx = sample.indices[i];
        if (idx < 0 || idx >= panel.n_assets() || (i > 0 && sample.indices[i - 1] >= idx))
            throw Error(ErrorCode::InvalidArgument, "portfolio indices must be sorted, distinct and in range");
    }
}

} // namespace

void SamplingPlan::validate(Index n_assets) const {
    if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
    if (k_min < 2 || k_min > k_max)
        throw Error(ErrorCode::InvalidArgument, "cardinality range must satisfy 2 <= k_min <= k_max");
    if (k_max > n_assets)
        throw Error(ErrorCode::KTooLarge, "k_max " + std::to_string(k_max) + " exceeds " +
                                              std::to_string(n_assets) + " assets");
}

std::uint64_t stream_key(const SamplingPlan& plan, Index window_start, Index k) {
    const std::uint64_t start =
        plan.resample_policy == ResamplePolicy::FixedAcrossWindows
            ? ~std::uint64_t{0}
            : static_cast<std::uint64_t>(window_start);
    return combine_key(combine_key(mix64(plan.seed), start), static_cast<std::uint64_t>(k));
}

SubsetSampler::SubsetSampler(Index n_assets) : perm_(static_cast<std::size_t>(n_assets)) {
    std::iota(perm_.begin(), perm_.end(), Index{0});
}

std::mt19937_64 sample_engine(std::uint64_t key, Index index) {
    return std::mt19937_64(combine_key(key, static_cast<std::uint64_t>(index)));
}

std::vector<PortfolioSample> sample_portfolios(Index n_assets, Index k, Index n_samples,
                                               std::uint64_t key) {
    check_cardinality(n_assets, k);
    std::vector<PortfolioSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (Index i = 0; i < n_samples; ++i) {
        auto rng = sample_engine(key, i);
        SubsetSampler sampler(n_assets);
        out.push_back(sampler.draw(k, rng));
    }
    return out;
}

Eigen::VectorXd portfolio_return_series(const ReturnsPanel& panel, const PortfolioSample& sample,
                                        const Window& window) {
    window.validate(panel.n_days());
    check_sample(panel, sample);
    Eigen::VectorXd series = Eigen::VectorXd::Zero(window.length);
    for (const Index asset : sample.indices)
        series += panel.returns.row(asset).segment(window.start, window.length).transpose();
    return series / static_cast<double>(sample.size());
}

double sharpe_ratio(const ReturnsPanel& panel, const PortfolioSample& sample, const Window& window) {
    return series_sharpe(portfolio_return_series(panel, sample, window));
}

double sample_sharpe(const ReturnsPanel& panel, Index k, const Window& window, std::uint64_t key,
                     Index sample_index) {
    auto rng = sample_engine(key, sample_index);
    SubsetSampler sampler(panel.n_assets());
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        try {
            return sharpe_ratio(panel, sampler.draw(k, rng), window);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroVariance) throw;
        }
    }
    throw Error(ErrorCode::SamplingExhausted,
                "ZeroVariance persisted after " + std::to_string(kMaxRedraws) +
                    " redraws (k=" + std::to_string(k) + ", window start " +
                    std::to_string(window.start) + ")");
}

std::vector<double> sharpe_distribution(const ReturnsPanel& panel, Index k, const Window& window,
                                        const SamplingPlan& plan, unsigned threads) {
    plan.validate(panel.n_assets());
    check_cardinality(panel.n_assets(), k);
    window.validate(panel.n_days());
    const std::uint64_t key = stream_key(plan, window.start, k);

    std::vector<double> values(static_cast<std::size_t>(plan.n_samples));
    parallel_for(plan.n_samples, threads, [&](std::ptrdiff_t i) {
        values[static_cast<std::size_t>(i)] = sample_sharpe(panel, k, window, key, i);
    });
    return values;
}

} // namespace kcard
