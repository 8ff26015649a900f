#pragma once

#include "kcard/study.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kcard {

enum class StudyKind { Annual, Rolling };

/// Everything needed to reproduce a run. Loaded from a key=value file and
/// then overridden by command-line flags.
struct StudyConfig {
    std::optional<std::filesystem::path> input;
    CsvLayout layout = CsvLayout::Wide;
    Alignment align = Alignment::Strict;
    /// Used when no input CSV is given.
    GbmSpec gbm{.n_assets = 100, .n_days = 2016, .drift_lo = -0.001, .drift_hi = 0.001,
                .vol_lo = 0.01, .vol_hi = 0.03, .pairwise_correlation = 0.3, .initial_price = 100.0};
    std::optional<std::uint64_t> gbm_seed;

    StudyKind study = StudyKind::Annual;
    /// Defaults to 252 (annual) or 90 (rolling).
    std::optional<Index> period;
    Index k_min = 10;
    Index k_max = 100;
    Index n_samples = 1000;
    std::uint64_t seed = 0;
    Index stride = 1;
    std::vector<double> quantiles{0.1, 0.5, 0.9};
    double alpha = 0.05;
    std::optional<double> m_override;
    /// Defaults to per-window (annual) or fixed-across-windows (rolling).
    std::optional<ResamplePolicy> resample_policy;
    std::filesystem::path output_dir = "kcard_out";
    unsigned threads = 0;

    Index effective_period() const;
    ResamplePolicy effective_policy() const;
    std::uint64_t effective_gbm_seed() const { return gbm_seed.value_or(seed); }
    SamplingPlan plan() const;

    /// Applies one key=value setting; throws InvalidArgument on unknown keys
    /// or malformed values.
    void set(const std::string& key, const std::string& value);
    void validate() const;
};

StudyConfig load_config(const std::filesystem::path& path);
void apply_config_text(StudyConfig& config, std::istream& in);

/// Parses "n_assets=..,n_days=..,..." into the GBM spec (and seed).
void apply_gbm_overrides(StudyConfig& config, const std::string& text);

nlohmann::json config_to_json(const StudyConfig& config);

ReturnsPanel load_returns(const StudyConfig& config);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

inline const std::vector<std::string>& annual_records_columns() {
    static const std::vector<std::string> columns{
        "year",   "q",        "AIC_lin",   "BIC_lin", "adjR2_lin", "beta1_1",
        "AIC_quad", "BIC_quad", "adjR2_quad", "beta2_2", "p_beta2_2", "verdict",
        "k0",     "k_hat",    "delta",     "sharpe_k0"};
    return columns;
}

void write_annual_records(std::ostream& out, const AnnualStudy& study);
void write_rolling_k0(std::ostream& out, const RollingSeries& series);
void write_k0_histogram(std::ostream& out, const RollingSeries& series);
void write_curve(std::ostream& out, const QuantileCurve& curve);

/// Reads annual_records.csv rows for quantile q and writes
/// year,sharpe_k0,delta for every row with a penalized optimum.
void scatter_delta(std::istream& records, std::ostream& out, double q = 0.1);

/// Writes every output file of a run into config.output_dir.
void write_annual_outputs(const StudyConfig& config, const ReturnsPanel& panel, const AnnualStudy& study);
void write_rolling_outputs(const StudyConfig& config, const ReturnsPanel& panel, const RollingSeries& series);

} // namespace kcard
