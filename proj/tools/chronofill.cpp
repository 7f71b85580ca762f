// chronofill — synthesize, mask, impute, and score time-series tables.
//
// Subcommands mirror the pipeline stages so each artifact can be produced
// (and inspected) on its own; `bench` runs the whole matrix from a config
// file. See README.md for the config grammar and file formats.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chronofill/bench.hpp"
#include "chronofill/common.hpp"
#include "chronofill/csv.hpp"
#include "chronofill/mask.hpp"
#include "chronofill/metrics.hpp"
#include "chronofill/neural.hpp"
#include "chronofill/synth.hpp"
#include "chronofill/table.hpp"
#include "chronofill/time_encode.hpp"

namespace {

using namespace chronofill;

Table load_table(const std::string& path, const std::string& time_hint) {
    auto rows = read_csv_rows(path);
    const std::optional<std::string> hint =
        time_hint.empty() ? std::nullopt : std::optional<std::string>(time_hint);
    return table_from_rows(rows, infer_schema(rows, hint), path);
}

int cmd_synth(const PseudoPeriodicConfig& config, const std::string& out) {
    const Table table = generate_pseudo_periodic(config);
    write_csv(table, out);
    std::printf("wrote %zu rows x %zu columns to %s\n", table.n_rows(), table.n_cols(),
                out.c_str());
    return 0;
}

int cmd_mask(const std::string& in, const std::string& time_hint, const std::string& mechanism,
             double rate, double beta, std::string driver, std::uint64_t seed,
             const std::string& out) {
    const Table table = load_table(in, time_hint);
    Mechanism m;
    m.kind = mechanism_from_name(mechanism);
    m.beta = beta;
    if (m.kind == Mechanism::Kind::MAR) {
        if (driver.empty()) {
            const auto time_col = table.time_column();
            if (!time_col.has_value())
                throw Error("MAR has no default driver: the table has no time column; "
                            "pass --driver");
            driver = table.column_name(*time_col);
        }
        m.driver = driver;
    }
    const Mask mask = make_mask(table, m, rate, seed);
    const ApplyMaskResult result = apply_mask(table, mask.coordinates);
    namespace fs = std::filesystem;
    fs::create_directories(out);
    write_mask(mask, (fs::path(out) / "mask.csv").string());
    write_ground_truth(result.ground_truth, (fs::path(out) / "truth.csv").string());
    write_csv(result.masked, (fs::path(out) / "masked.csv").string());
    std::printf("masked %zu of %zu maskable cells (%s) into %s\n", mask.coordinates.size(),
                table.count_maskable(), mechanism.c_str(), out.c_str());
    return 0;
}

int cmd_impute(const std::string& in, const std::string& time_hint, const std::string& spec_text,
               std::uint64_t seed, const std::string& out, const std::string& logs_dir) {
    const Table table = load_table(in, time_hint);
    const ImputerSpec spec = parse_imputer_spec(spec_text);
    std::map<std::string, std::vector<EpochLog>> logs;
    const ImputationResult result =
        run_imputer(spec, table, seed, logs_dir.empty() ? nullptr : &logs);
    write_csv(result.table, out);
    for (const auto& [column, log] : logs)
        write_training_log(log, (std::filesystem::path(logs_dir) / (column + ".csv")).string());
    std::printf("imputed %zu cells with %s into %s\n", result.filled.size(), spec_text.c_str(),
                out.c_str());
    return 0;
}

int cmd_eval(const std::string& imputed_path, const std::string& truth_path,
             const std::string& time_hint, const EvalIds& ids, const std::string& out) {
    const Table imputed = load_table(imputed_path, time_hint);
    const auto truth = read_ground_truth(truth_path, imputed);
    const EvalReport report = evaluate(imputed, truth, ids);
    if (!out.empty()) write_report_csv({report}, out);
    std::printf("%s\n%s\n", report_csv_header().c_str(), report_csv_row(report).c_str());
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_override,
              const std::optional<std::uint64_t>& seed_override) {
    RunConfig config = load_run_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    if (seed_override.has_value()) config.seeds = {*seed_override};
    const RunManifest manifest = run_pipeline(config);
    std::size_t ok = 0;
    std::size_t cached = 0;
    std::size_t failed = 0;
    for (const JobRecord& job : manifest.jobs) {
        if (job.status == "ok") ++ok;
        else if (job.status == "cached") ++cached;
        else ++failed;
        if (!job.error.empty())
            std::fprintf(stderr, "job %s failed: %s\n", job.id.c_str(), job.error.c_str());
    }
    std::printf("%zu jobs ok, %zu cached, %zu failed; report: %s\n", ok, cached, failed,
                manifest.report_path.c_str());
    return manifest.all_ok ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& metric,
               const std::string& out_md, const std::string& out_csv) {
    std::vector<EvalReport> reports;
    for (const std::string& path : inputs) {
        auto part = read_report_csv(path);
        reports.insert(reports.end(), part.begin(), part.end());
    }
    const ComparisonTable table = render_comparison(reports, metric);
    std::fputs(table.markdown.c_str(), stdout);
    if (!out_md.empty()) write_text_file_atomic(out_md, table.markdown);
    if (!out_csv.empty()) write_text_file_atomic(out_csv, table.csv);
    return 0;
}

int cmd_encode(const std::string& in, const std::string& time_hint, const std::string& out) {
    const Table table = load_table(in, time_hint);
    const auto time_col = table.time_column();
    if (!time_col.has_value())
        throw Error(in + ": no time column to encode (pass --time-column for a numeric axis)");
    const TimeFormat format = table.kind(*time_col).format;
    std::vector<double> canonical;
    canonical.reserve(table.n_rows());
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        canonical.push_back(table.cell(r, *time_col).number());
    const auto names = time_feature_names(format);
    const auto features = expand_time_column(canonical, format);
    std::string text = csv_quote(table.column_name(*time_col));
    for (const std::string& name : names) text += "," + csv_quote(name);
    text += '\n';
    for (std::size_t r = 0; r < features.size(); ++r) {
        text += csv_quote(format_time_value(canonical[r], format));
        for (double value : features[r]) text += "," + format_double(value);
        text += '\n';
    }
    write_text_file_atomic(out, text);
    std::printf("wrote %zu rows x %zu time features to %s\n", features.size(), names.size(),
                out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chronofill: time-series imputation benchmark toolkit"};
    app.set_version_flag("--version", chronofill::kVersion);
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a pseudo-periodic dataset CSV");
    PseudoPeriodicConfig synth_config;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output CSV path")->required();
    synth->add_option("--seed", synth_config.seed, "generator seed");
    synth->add_option("--samples", synth_config.n_samples, "number of series columns");
    synth->add_option("--points", synth_config.n_points, "number of time points");
    synth->add_option("--t-start", synth_config.t_start, "grid start");
    synth->add_option("--t-stop", synth_config.t_stop, "grid stop (inclusive)");
    synth->add_option("--amplitude", synth_config.amplitude, "amplitude mean");
    synth->add_option("--amplitude-sd", synth_config.amplitude_sd, "amplitude std");
    synth->add_option("--frequency", synth_config.frequency, "frequency mean");
    synth->add_option("--frequency-sd", synth_config.frequency_sd, "frequency std");
    synth->add_option("--phase", synth_config.phase, "phase offset (radians)");

    // mask -------------------------------------------------------------
    auto* mask = app.add_subcommand("mask", "hide cells under a missingness mechanism");
    std::string mask_in, mask_time, mask_mechanism = "mcar", mask_driver, mask_out;
    double mask_rate = 0.0, mask_beta = 4.0;
    std::uint64_t mask_seed = 1;
    mask->add_option("--in", mask_in, "input CSV")->required();
    mask->add_option("--time-column", mask_time, "time column name hint");
    mask->add_option("--mechanism", mask_mechanism, "mcar | mar | mnar")
        ->check(CLI::IsMember({"mcar", "mar", "mnar"}));
    mask->add_option("--rate", mask_rate, "fraction of maskable cells to hide")->required();
    mask->add_option("--beta", mask_beta, "logistic slope for mar/mnar");
    mask->add_option("--driver", mask_driver, "mar driver column (default: time column)");
    mask->add_option("--seed", mask_seed, "mask seed");
    mask->add_option("--out", mask_out, "output directory (mask.csv, truth.csv, masked.csv)")
        ->required();

    // impute -----------------------------------------------------------
    auto* impute = app.add_subcommand("impute", "fill the missing cells of a CSV");
    std::string impute_in, impute_time, impute_spec = "neural", impute_out, impute_logs;
    std::uint64_t impute_seed = 1;
    impute->add_option("--in", impute_in, "input CSV with missing cells")->required();
    impute->add_option("--time-column", impute_time, "time column name hint");
    impute->add_option("--imputer", impute_spec,
                       "imputer spec: mean | knn | mf | mice | neural, with optional "
                       ":key=value,... parameters");
    impute->add_option("--seed", impute_seed, "imputer seed");
    impute->add_option("--out", impute_out, "output CSV path")->required();
    impute->add_option("--logs", impute_logs, "directory for neural training logs");

    // eval ---------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "score an imputed CSV against hidden truth");
    std::string eval_imputed, eval_truth, eval_time, eval_out;
    chronofill::EvalIds eval_ids{"dataset", "imputer", "mcar", 0.0};
    eval->add_option("--imputed", eval_imputed, "imputed CSV")->required();
    eval->add_option("--truth", eval_truth, "ground-truth sidecar CSV")->required();
    eval->add_option("--time-column", eval_time, "time column name hint");
    eval->add_option("--dataset", eval_ids.dataset, "dataset label for the report row");
    eval->add_option("--imputer", eval_ids.imputer, "imputer label for the report row");
    eval->add_option("--mechanism", eval_ids.mechanism, "mechanism label for the report row");
    eval->add_option("--rate", eval_ids.rate, "rate label for the report row");
    eval->add_option("--out", eval_out, "also write a one-row report CSV here");

    // bench --------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "run the full benchmark matrix from a config");
    std::string bench_config, bench_out;
    std::uint64_t bench_seed = 0;
    bench->add_option("--config", bench_config, "run config (INI)")->required();
    bench->add_option("--out", bench_out, "override the config's output directory");
    auto* bench_seed_opt =
        bench->add_option("--seed", bench_seed, "replace the config's seed list with one seed");

    // report -------------------------------------------------------------
    auto* report = app.add_subcommand("report", "render a comparison table from report CSVs");
    std::vector<std::string> report_in;
    std::string report_metric = "mre", report_md, report_csv_out;
    report->add_option("--in", report_in, "report CSV (repeatable)")->required();
    report->add_option("--metric", report_metric, "mre | mse | two_norm | pearson_r")
        ->check(CLI::IsMember({"mre", "mse", "two_norm", "pearson_r"}));
    report->add_option("--out-md", report_md, "write the Markdown table here");
    report->add_option("--out-csv", report_csv_out, "write the CSV table here");

    // encode -------------------------------------------------------------
    auto* encode = app.add_subcommand("encode", "dump a table's encoded time features");
    std::string encode_in, encode_time, encode_out;
    encode->add_option("--in", encode_in, "input CSV")->required();
    encode->add_option("--time-column", encode_time, "time column name hint");
    encode->add_option("--out", encode_out, "output feature CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_config, synth_out);
        if (mask->parsed())
            return cmd_mask(mask_in, mask_time, mask_mechanism, mask_rate, mask_beta, mask_driver,
                            mask_seed, mask_out);
        if (impute->parsed())
            return cmd_impute(impute_in, impute_time, impute_spec, impute_seed, impute_out,
                              impute_logs);
        if (eval->parsed()) return cmd_eval(eval_imputed, eval_truth, eval_time, eval_ids, eval_out);
        if (bench->parsed())
            return cmd_bench(bench_config, bench_out,
                             bench_seed_opt->count() ? std::optional<std::uint64_t>(bench_seed)
                                                     : std::nullopt);
        if (report->parsed()) return cmd_report(report_in, report_metric, report_md, report_csv_out);
        if (encode->parsed()) return cmd_encode(encode_in, encode_time, encode_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "chronofill: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
