#include "kcard/report.hpp"

#include "kcard/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kcard {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(s);
    while (std::getline(in, field, sep)) out.push_back(trim(field));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error(ErrorCode::InvalidArgument, "invalid value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
    return out;
}

std::string policy_name(ResamplePolicy policy) {
    return policy == ResamplePolicy::PerWindow ? "per-window" : "fixed-across-windows";
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string window_file_name(const Window& window) {
    std::string digits = std::to_string(window.start);
    if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
    return "window_" + digits + ".csv";
}

void prepare_output_dir(const StudyConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir / "curves", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + config.output_dir.string() + ": " + ec.message());
}

void write_meta(const StudyConfig& config, const ReturnsPanel& panel, nlohmann::json extra) {
    nlohmann::json meta;
    meta["tool"] = "kcard";
    meta["config"] = config_to_json(config);
    meta["seed"] = config.seed;
    meta["panel"] = {{"n_assets", panel.n_assets()},
                     {"n_days", panel.n_days()},
                     {"first_date", panel.dates.front()},
                     {"last_date", panel.dates.back()}};
    meta["results"] = std::move(extra);
    const auto path = config.output_dir / "run_meta.json";
    auto out = open_output(path);
    out << meta.dump(2) << '\n';
    finish(out, path);
}

void write_curves(const StudyConfig& config, const std::vector<const QuantileCurve*>& curves) {
    for (const auto* curve : curves) {
        const auto path = config.output_dir / "curves" / window_file_name(curve->window);
        auto out = open_output(path);
        write_curve(out, *curve);
        finish(out, path);
    }
}

} // namespace

Index StudyConfig::effective_period() const {
    return period.value_or(study == StudyKind::Annual ? 252 : 90);
}

ResamplePolicy StudyConfig::effective_policy() const {
    return resample_policy.value_or(study == StudyKind::Annual ? ResamplePolicy::PerWindow
                                                               : ResamplePolicy::FixedAcrossWindows);
}

SamplingPlan StudyConfig::plan() const {
    return {.n_samples = n_samples, .k_min = k_min, .k_max = k_max, .seed = seed,
            .resample_policy = effective_policy()};
}

void StudyConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "input") {
        input = value;
    } else if (key == "layout") {
        if (value == "wide") layout = CsvLayout::Wide;
        else if (value == "long") layout = CsvLayout::Long;
        else bad_value(key, value);
    } else if (key == "align") {
        if (value == "strict") align = Alignment::Strict;
        else if (value == "intersect") align = Alignment::Intersect;
        else bad_value(key, value);
    } else if (key == "gbm") {
        apply_gbm_overrides(*this, value);
    } else if (key == "study") {
        if (value == "annual") study = StudyKind::Annual;
        else if (value == "rolling") study = StudyKind::Rolling;
        else bad_value(key, value);
    } else if (key == "period") {
        period = parse_number<Index>(key, value);
    } else if (key == "kmin") {
        k_min = parse_number<Index>(key, value);
    } else if (key == "kmax") {
        k_max = parse_number<Index>(key, value);
    } else if (key == "samples") {
        n_samples = parse_number<Index>(key, value);
    } else if (key == "seed") {
        seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "stride") {
        stride = parse_number<Index>(key, value);
    } else if (key == "quantiles") {
        quantiles.clear();
        for (const auto& q : split(value, ',')) quantiles.push_back(parse_number<double>(key, q));
    } else if (key == "alpha") {
        alpha = parse_number<double>(key, value);
    } else if (key == "m") {
        m_override = parse_number<double>(key, value);
    } else if (key == "resample_policy") {
        if (value == "per-window") resample_policy = ResamplePolicy::PerWindow;
        else if (value == "fixed-across-windows") resample_policy = ResamplePolicy::FixedAcrossWindows;
        else bad_value(key, value);
    } else if (key == "out") {
        output_dir = value;
    } else if (key == "threads") {
        threads = parse_number<unsigned>(key, value);
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
}

void StudyConfig::validate() const {
    if (!input) gbm.validate();
    if (effective_period() < 2) throw Error(ErrorCode::InvalidArgument, "period must be at least 2");
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
    if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
    if (k_min < 2 || k_min > k_max)
        throw Error(ErrorCode::InvalidArgument, "cardinality range must satisfy 2 <= kmin <= kmax");
    // Annual records fit a quadratic in k (3 parameters), rolling ones a line.
    const Index min_points = study == StudyKind::Annual ? 4 : 3;
    if (k_max - k_min + 1 < min_points)
        throw Error(ErrorCode::InvalidArgument, "cardinality range must span at least " +
                                                    std::to_string(min_points) + " values for the " +
                                                    (study == StudyKind::Annual ? "annual" : "rolling") +
                                                    " regressions");
    validate_quantiles(quantiles);
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    if (m_override && !(*m_override >= 1.0))
        throw Error(ErrorCode::InvalidArgument, "m must be at least 1");
}

void apply_config_text(StudyConfig& config, std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ParseError, "config line " + std::to_string(line_no) + ": expected key=value");
        config.set(line.substr(0, eq), line.substr(eq + 1));
    }
}

StudyConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    StudyConfig config;
    apply_config_text(config, in);
    return config;
}

void apply_gbm_overrides(StudyConfig& config, const std::string& text) {
    for (const auto& item : split(text, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) bad_value("gbm", item);
        const std::string key = trim(item.substr(0, eq));
        const std::string value = trim(item.substr(eq + 1));
        auto& g = config.gbm;
        if (key == "n_assets") g.n_assets = parse_number<Index>(key, value);
        else if (key == "n_days") g.n_days = parse_number<Index>(key, value);
        else if (key == "drift_lo") g.drift_lo = parse_number<double>(key, value);
        else if (key == "drift_hi") g.drift_hi = parse_number<double>(key, value);
        else if (key == "vol_lo") g.vol_lo = parse_number<double>(key, value);
        else if (key == "vol_hi") g.vol_hi = parse_number<double>(key, value);
        else if (key == "correlation") g.pairwise_correlation = parse_number<double>(key, value);
        else if (key == "initial_price") g.initial_price = parse_number<double>(key, value);
        else if (key == "seed") config.gbm_seed = parse_number<std::uint64_t>(key, value);
        else throw Error(ErrorCode::InvalidArgument, "unknown gbm key '" + key + "'");
    }
    config.input.reset();
}

nlohmann::json config_to_json(const StudyConfig& config) {
    nlohmann::json j;
    if (config.input) {
        j["input"] = config.input->string();
        j["layout"] = config.layout == CsvLayout::Wide ? "wide" : "long";
        j["align"] = config.align == Alignment::Strict ? "strict" : "intersect";
    } else {
        const auto& g = config.gbm;
        j["gbm"] = {{"n_assets", g.n_assets},     {"n_days", g.n_days},
                    {"drift_lo", g.drift_lo},     {"drift_hi", g.drift_hi},
                    {"vol_lo", g.vol_lo},         {"vol_hi", g.vol_hi},
                    {"correlation", g.pairwise_correlation},
                    {"initial_price", g.initial_price},
                    {"seed", config.effective_gbm_seed()}};
    }
    j["study"] = config.study == StudyKind::Annual ? "annual" : "rolling";
    j["period"] = config.effective_period();
    j["kmin"] = config.k_min;
    j["kmax"] = config.k_max;
    j["samples"] = config.n_samples;
    j["seed"] = config.seed;
    j["stride"] = config.stride;
    j["quantiles"] = config.quantiles;
    j["alpha"] = config.alpha;
    j["m"] = config.m_override ? nlohmann::json(*config.m_override) : nlohmann::json(nullptr);
    j["resample_policy"] = policy_name(config.effective_policy());
    j["out"] = config.output_dir.string();
    return j;
}

ReturnsPanel load_returns(const StudyConfig& config) {
    if (config.input) return compute_returns(load_price_csv(*config.input, config.layout, config.align));
    return compute_returns(generate_gbm_panel(config.gbm, config.effective_gbm_seed()));
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_annual_records(std::ostream& out, const AnnualStudy& study) {
    const auto& columns = annual_records_columns();
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : study.records) {
        out << r.year_index << ',' << format_double(r.q) << ',' << format_double(r.linear.aic) << ','
            << format_double(r.linear.bic) << ',' << format_double(r.linear.adj_r2) << ','
            << format_double(r.linear.slope()) << ',' << format_double(r.quadratic.aic) << ','
            << format_double(r.quadratic.bic) << ',' << format_double(r.quadratic.adj_r2) << ','
            << format_double(r.quadratic.leading()) << ',' << format_double(r.quadratic.leading_p())
            << ',' << to_string(r.comparison.verdict) << ',' << r.optima.k0 << ',';
        if (r.optima.k_hat) out << *r.optima.k_hat;
        out << ',';
        if (r.optima.delta) out << format_double(*r.optima.delta);
        out << ',' << format_double(r.sharpe_at_k0()) << '\n';
    }
}

void write_rolling_k0(std::ostream& out, const RollingSeries& series) {
    out << "window_start,q,k0\n";
    for (std::size_t w = 0; w < series.window_starts.size(); ++w)
        for (std::size_t j = 0; j < series.quantiles.size(); ++j)
            out << series.window_starts[w] << ',' << format_double(series.quantiles[j]) << ','
                << series.optima[j][w].k0 << '\n';
}

void write_k0_histogram(std::ostream& out, const RollingSeries& series) {
    out << "q,k,count\n";
    for (const double q : series.quantiles)
        for (const auto& [k, count] : k0_histogram(series, q))
            out << format_double(q) << ',' << k << ',' << count << '\n';
}

void write_curve(std::ostream& out, const QuantileCurve& curve) {
    out << "k,q,value\n";
    for (std::size_t i = 0; i < curve.k_values.size(); ++i)
        for (std::size_t j = 0; j < curve.quantiles.size(); ++j)
            out << curve.k_values[i] << ',' << format_double(curve.quantiles[j]) << ','
                << format_double(curve.values(static_cast<Index>(i), static_cast<Index>(j))) << '\n';
}

void scatter_delta(std::istream& records, std::ostream& out, double q) {
    std::string line;
    if (!std::getline(records, line)) throw Error(ErrorCode::MissingColumn, "records file has no header");
    const auto header = split(trim(line), ',');
    auto column = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw Error(ErrorCode::MissingColumn, "records file lacks column '" + name + "'");
    };
    const auto year_col = column("year");
    const auto q_col = column("q");
    const auto k_hat_col = column("k_hat");
    const auto delta_col = column("delta");
    const auto sharpe_col = column("sharpe_k0");

    out << "year,sharpe_k0,delta\n";
    std::size_t line_no = 1;
    while (std::getline(records, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != header.size())
            throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields");
        if (std::abs(parse_number<double>("q", fields[q_col]) - q) > 1e-12) continue;
        if (fields[k_hat_col].empty()) continue;
        out << fields[year_col] << ',' << fields[sharpe_col] << ',' << fields[delta_col] << '\n';
    }
}

void write_annual_outputs(const StudyConfig& config, const ReturnsPanel& panel, const AnnualStudy& study) {
    prepare_output_dir(config);
    const auto path = config.output_dir / "annual_records.csv";
    auto out = open_output(path);
    write_annual_records(out, study);
    finish(out, path);

    std::vector<const QuantileCurve*> curves;
    for (const auto& curve : study.curves) curves.push_back(curve.get());
    write_curves(config, curves);

    write_meta(config, panel,
               {{"windows", study.windows.size()}, {"bonferroni_m", study.m}, {"records", study.records.size()}});
}

void write_rolling_outputs(const StudyConfig& config, const ReturnsPanel& panel, const RollingSeries& series) {
    prepare_output_dir(config);
    {
        const auto path = config.output_dir / "rolling_k0.csv";
        auto out = open_output(path);
        write_rolling_k0(out, series);
        finish(out, path);
    }
    {
        const auto path = config.output_dir / "k0_histogram.csv";
        auto out = open_output(path);
        write_k0_histogram(out, series);
        finish(out, path);
    }
    std::vector<const QuantileCurve*> curves;
    for (const auto& curve : series.curves) curves.push_back(&curve);
    write_curves(config, curves);

    write_meta(config, panel, {{"windows", series.window_starts.size()}});
}

} // namespace kcard
