#pragma once

#include "kcard/error.hpp"
#include "kcard/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kcard {

/// Sorted, distinct asset indices of one equally weighted portfolio.
struct PortfolioSample {
    std::vector<Index> indices;

    Index size() const { return static_cast<Index>(indices.size()); }
    friend bool operator==(const PortfolioSample&, const PortfolioSample&) = default;
};

enum class ResamplePolicy {
    PerWindow,          // fresh portfolios for every (window, k)
    FixedAcrossWindows, // one draw per k, reused for every window
};

struct SamplingPlan {
    Index n_samples = 1000;
    Index k_min = 10;
    Index k_max = 100;
    std::uint64_t seed = 0;
    ResamplePolicy resample_policy = ResamplePolicy::PerWindow;

    void validate(Index n_assets) const;
    Index k_count() const { return k_max - k_min + 1; }
};

/// Maximum number of redraws for a zero-variance portfolio before giving up.
inline constexpr int kMaxRedraws = 100;

/// SplitMix64 finalizer; the building block of every derived stream key.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_key(std::uint64_t key, std::uint64_t value) {
    return mix64(key ^ mix64(value));
}

/// Stream key for one (window, k) work unit. Under FixedAcrossWindows the
/// window start is ignored so every window sees the same portfolios.
std::uint64_t stream_key(const SamplingPlan& plan, Index window_start, Index k);

/// Partial Fisher-Yates over a persistent permutation buffer. Starting from
/// any permutation the first k slots after k swaps are a uniform k-subset,
/// so the buffer is never reset between draws.
class SubsetSampler {
public:
    explicit SubsetSampler(Index n_assets);

    template <typename Rng>
    PortfolioSample draw(Index k, Rng& rng) {
        const Index n = static_cast<Index>(perm_.size());
        for (Index i = 0; i < k; ++i) {
            std::uniform_int_distribution<Index> pick(i, n - 1);
            std::swap(perm_[static_cast<std::size_t>(i)],
                      perm_[static_cast<std::size_t>(pick(rng))]);
        }
        PortfolioSample sample{{perm_.begin(), perm_.begin() + k}};
        std::sort(sample.indices.begin(), sample.indices.end());
        return sample;
    }

private:
    std::vector<Index> perm_;
};

/// Random engine for sample `index` within the stream `key`.
std::mt19937_64 sample_engine(std::uint64_t key, Index index);

/// n_samples i.i.d. uniform k-subsets of [0, n_assets). Sample i is the first
/// draw of substream (key, i).
std::vector<PortfolioSample> sample_portfolios(Index n_assets, Index k, Index n_samples,
                                               std::uint64_t key);

/// Equal-weight daily return series of the portfolio over the window.
Eigen::VectorXd portfolio_return_series(const ReturnsPanel& panel, const PortfolioSample& sample,
                                        const Window& window);

/// Relative threshold under which a standard deviation counts as zero.
inline constexpr double kZeroVolTolerance = 1e-9;

inline bool is_zero_volatility(double sd, double mean) {
    return !(sd > kZeroVolTolerance * std::abs(mean));
}

double sharpe_ratio(const ReturnsPanel& panel, const PortfolioSample& sample, const Window& window);

/// Sharpe value of sample `sample_index` in stream `key`: the first draw of
/// its substream, replaced by later draws of the same substream while the
/// portfolio has zero variance over the window. Throws SamplingExhausted.
double sample_sharpe(const ReturnsPanel& panel, Index k, const Window& window, std::uint64_t key,
                     Index sample_index);

/// n_samples Sharpe values for random k-portfolios over one window, ordered
/// by sample index. Zero-variance draws are replaced from the same substream.
std::vector<double> sharpe_distribution(const ReturnsPanel& panel, Index k, const Window& window,
                                        const SamplingPlan& plan, unsigned threads = 1);

/// Sharpe ratio (zero risk-free rate) of a return series: window-total return
/// over daily sample sd times sqrt(P). Throws ZeroVariance.
template <typename Derived>
double series_sharpe(const Eigen::MatrixBase<Derived>& series) {
    const Index n = series.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "Sharpe ratio needs at least 2 observations");
    const double total = series.sum();
    const double mean = total / static_cast<double>(n);
    const double sd =
        std::sqrt((series.array() - mean).square().sum() / static_cast<double>(n - 1));
    if (is_zero_volatility(sd, mean))
        throw Error(ErrorCode::ZeroVariance, "portfolio return series has zero variance");
    return total / (sd * std::sqrt(static_cast<double>(n)));
}

} // namespace kcard
