#include "kcard/cli.hpp"

#include "kcard/error.hpp"
#include "kcard/report.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <string>

namespace kcard {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct RunFlags {
    std::optional<std::string> config;
    std::optional<std::string> study;
    std::optional<std::string> input;
    std::optional<std::string> layout;
    std::optional<std::string> align;
    std::optional<std::string> gbm;
    std::optional<std::string> seed;
    std::optional<std::string> samples;
    std::optional<std::string> kmin;
    std::optional<std::string> kmax;
    std::optional<std::string> period;
    std::optional<std::string> stride;
    std::optional<std::string> quantiles;
    std::optional<std::string> alpha;
    std::optional<std::string> m;
    std::optional<std::string> policy;
    std::optional<std::string> out;
    std::optional<std::string> threads;
};

StudyConfig resolve_config(const RunFlags& flags) {
    StudyConfig config = flags.config ? load_config(*flags.config) : StudyConfig{};
    auto apply = [&config](const char* key, const std::optional<std::string>& value) {
        if (value) config.set(key, *value);
    };
    apply("study", flags.study);
    apply("layout", flags.layout);
    apply("align", flags.align);
    apply("gbm", flags.gbm);
    apply("input", flags.input);
    apply("seed", flags.seed);
    apply("samples", flags.samples);
    apply("kmin", flags.kmin);
    apply("kmax", flags.kmax);
    apply("period", flags.period);
    apply("stride", flags.stride);
    apply("quantiles", flags.quantiles);
    apply("alpha", flags.alpha);
    apply("m", flags.m);
    apply("resample_policy", flags.policy);
    apply("out", flags.out);
    apply("threads", flags.threads);
    config.validate();
    return config;
}

void cmd_run(const RunFlags& flags, std::ostream& out) {
    const StudyConfig config = resolve_config(flags);
    const ReturnsPanel panel = load_returns(config);
    const SamplingPlan plan = config.plan();

    if (config.study == StudyKind::Annual) {
        AnnualStudyOptions options;
        options.period = config.effective_period();
        options.quantiles = config.quantiles;
        options.alpha = config.alpha;
        options.m = config.m_override;
        options.threads = config.threads;
        const AnnualStudy study = run_annual_study(panel, plan, options);
        write_annual_outputs(config, panel, study);
        out << "annual study: " << study.windows.size() << " windows, " << study.records.size()
            << " records -> " << config.output_dir.string() << '\n';
    } else {
        RollingStudyOptions options;
        options.period = config.effective_period();
        options.stride = config.stride;
        options.quantiles = config.quantiles;
        options.threads = config.threads;
        const RollingSeries series = run_rolling_study(panel, plan, options);
        write_rolling_outputs(config, panel, series);
        out << "rolling study: " << series.window_starts.size() << " windows -> "
            << config.output_dir.string() << '\n';
    }
}

void cmd_scatter_delta(const std::string& records_path, const std::string& out_path, double q) {
    std::ifstream in(records_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + records_path);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + out_path);
    scatter_delta(in, out, q);
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "failed writing " + out_path);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cardinality and skill-quantile Sharpe ratio studies", "kcard"};
    app.require_subcommand(1);

    RunFlags flags;
    auto* run = app.add_subcommand("run", "Run an annual or rolling study");
    run->add_option("--config", flags.config, "key=value config file (flags override it)");
    run->add_option("--study", flags.study, "annual | rolling");
    run->add_option("--input", flags.input, "price CSV");
    run->add_option("--layout", flags.layout, "wide | long");
    run->add_option("--align", flags.align, "strict | intersect");
    run->add_option("--gbm", flags.gbm, "synthetic panel, e.g. n_assets=100,n_days=2016");
    run->add_option("--seed", flags.seed);
    run->add_option("--samples", flags.samples, "portfolios per (window, k)");
    run->add_option("--kmin", flags.kmin);
    run->add_option("--kmax", flags.kmax);
    run->add_option("--period", flags.period, "window length in trading days");
    run->add_option("--stride", flags.stride, "rolling window step");
    run->add_option("--quantiles", flags.quantiles, "comma-separated, e.g. 0.1,0.5,0.9");
    run->add_option("--alpha", flags.alpha);
    run->add_option("--m", flags.m, "Bonferroni hypothesis count");
    run->add_option("--resample-policy", flags.policy, "per-window | fixed-across-windows");
    run->add_option("--out", flags.out, "output directory");
    run->add_option("--threads", flags.threads, "worker threads (0 = all cores)");

    std::string records_path;
    std::string scatter_out;
    double scatter_q = 0.1;
    auto* scatter = app.add_subcommand("scatter-delta", "Sharpe at k0 vs deviation for penalized optima");
    scatter->add_option("--records", records_path, "annual_records.csv")->required();
    scatter->add_option("--out", scatter_out, "output CSV")->required();
    scatter->add_option("--q", scatter_q, "quantile to extract");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (run->parsed()) cmd_run(flags, out);
        else cmd_scatter_delta(records_path, scatter_out, scatter_q);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::Io ? kExitIo : kExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: Io: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

} // namespace kcard
