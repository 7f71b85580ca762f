#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chronofill/impute.hpp"
#include "chronofill/mask.hpp"
#include "chronofill/metrics.hpp"
#include "chronofill/neural.hpp"
#include "chronofill/synth.hpp"
#include "chronofill/table.hpp"

namespace chronofill {

// Parsed INI-style config: section → key → value. Full-line and trailing
// `#` comments are stripped; keys and values are trimmed.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;
ConfigMap parse_ini(const std::string& text, const std::string& origin);

std::vector<std::string> split_list(const std::string& value); // comma-separated

// An imputer selection: id plus free-form parameters, e.g.
// "knn:k=5,weighting=uniform" or just "mean". Known ids: mean, knn, mf,
// mice, neural.
struct ImputerSpec {
    std::string id;
    std::map<std::string, std::string> params;
};
ImputerSpec parse_imputer_spec(const std::string& text);

// Runs one imputer on a table under its spec. Neural training logs land in
// `training_logs` when given.
ImputationResult run_imputer(const ImputerSpec& spec, const Table& table, std::uint64_t seed,
                             std::map<std::string, std::vector<EpochLog>>* training_logs = nullptr);

// The full experiment matrix: one dataset, every (mechanism × rate × seed ×
// imputer) combination as an independent job.
struct RunConfig {
    std::string dataset_name = "synth";
    bool use_synth = true;
    PseudoPeriodicConfig synth;
    std::string csv_path;                  // when use_synth is false
    std::optional<std::string> time_hint;  // schema hint for CSV ingestion

    std::vector<Mechanism> mechanisms;     // MAR driver may be left empty → time column
    std::vector<double> rates;
    std::vector<std::uint64_t> seeds;      // one repetition per entry
    std::vector<ImputerSpec> imputers;
    std::string out_dir;

    ConfigMap raw; // snapshot for the manifest

    void validate() const;
};

RunConfig run_config_from_ini(const ConfigMap& ini, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Seed derivation: the mask seed is shared by every imputer of one
// (mechanism, rate, repetition) so they compete on the same mask; the
// imputer seed additionally mixes in the imputer id.
std::uint64_t job_mask_seed(std::uint64_t seed, const Mechanism& mechanism, double rate);
std::uint64_t job_imputer_seed(std::uint64_t seed, const Mechanism& mechanism, double rate,
                               const std::string& imputer_id);

struct JobRecord {
    std::string id; // "<mechanism>-r<rate>-s<rep>/<imputer>", mask jobs omit the imputer
    std::string mechanism;
    double rate = 0.0;
    std::size_t seed_index = 0;
    std::uint64_t seed_value = 0;
    std::string imputer;
    std::string status; // ok | cached | failed
    std::string error;
    double seconds = 0.0;
    std::vector<std::string> artifacts; // paths relative to out_dir
};

struct RunManifest {
    std::string out_dir;
    std::string report_path;
    std::vector<JobRecord> jobs;
    bool all_ok = true;
};

// Executes the whole matrix: generate/ingest → mask → impute → evaluate,
// writing per-job artifacts, the combined report CSV, and manifest.json
// (atomically) under config.out_dir. Job failures are recorded, not fatal;
// completed jobs are skipped on re-runs. CHRONOFILL_THREADS caps the worker
// pool.
RunManifest run_pipeline(const RunConfig& config);

// Table-2-style comparison: rows = imputers, columns = datasets when the
// reports span several, otherwise mechanisms; cells = mean of `metric` over
// seeds, std in parentheses when more than one, N/A when absent.
struct ComparisonTable {
    std::string markdown;
    std::string csv;
};
ComparisonTable render_comparison(const std::vector<EvalReport>& reports,
                                  const std::string& metric);

// Plot-ready dump of one job's imputations: truth,imputed,mechanism,column,
// one row per numeric masked cell, in ground-truth order.
void scatter_dump(const ImputationResult& result, const std::vector<GroundTruthCell>& truth,
                  const std::string& mechanism, const std::string& path);

} // namespace chronofill
