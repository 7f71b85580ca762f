#include "chronofill/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "chronofill/common.hpp"
#include "chronofill/csv.hpp"
#include "chronofill/rng.hpp"

namespace chronofill {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::uint64_t parse_u64(const std::string& text, const std::string& context) {
    const std::string value = trim(text);
    if (value.empty()) throw Error(context + ": expected an unsigned integer, got an empty field");
    std::uint64_t out = 0;
    for (char c : value) {
        if (c < '0' || c > '9')
            throw Error(context + ": '" + value + "' is not an unsigned integer");
        const std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
        if (out > (UINT64_MAX - digit) / 10)
            throw Error(context + ": '" + value + "' overflows 64 bits");
        out = out * 10 + digit;
    }
    return out;
}

std::size_t parse_size(const std::string& text, const std::string& context) {
    return static_cast<std::size_t>(parse_u64(text, context));
}

// Compact rate tag for directory names; data files always carry the full
// 17-digit form.
std::string format_rate_tag(double rate) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%g", rate);
    return buffer;
}

// Imputer labels may carry ':' '=' ','; directory names keep to a portable
// character set.
std::string sanitize_component(const std::string& label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out += keep ? c : '_';
    }
    return out;
}

std::string imputer_label(const ImputerSpec& spec) {
    if (spec.params.empty()) return spec.id;
    std::string label = spec.id + ":";
    bool first = true;
    for (const auto& [key, value] : spec.params) { // std::map → sorted, stable label
        if (!first) label += ',';
        label += key + "=" + value;
        first = false;
    }
    return label;
}

// ---------------------------------------------------------------------------
// Per-imputer parameter blocks. Each parser consumes its keys and rejects
// leftovers so config typos fail loudly at load time.

void reject_leftovers(const std::map<std::string, std::string>& params, const std::string& id,
                      const std::string& known) {
    if (params.empty()) return;
    throw Error("imputer '" + id + "' does not take a parameter '" + params.begin()->first +
                "' (known: " + known + ")");
}

std::optional<std::string> take(std::map<std::string, std::string>& params,
                                const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    std::string value = it->second;
    params.erase(it);
    return value;
}

struct KnnParams {
    std::size_t k = 5;
    KnnWeighting weighting = KnnWeighting::InverseDistance;
};

KnnParams parse_knn_params(std::map<std::string, std::string> params) {
    KnnParams out;
    if (auto v = take(params, "k")) out.k = parse_size(*v, "knn k");
    if (auto v = take(params, "weighting")) {
        if (*v == "uniform") out.weighting = KnnWeighting::Uniform;
        else if (*v == "inverse") out.weighting = KnnWeighting::InverseDistance;
        else throw Error("knn weighting must be 'uniform' or 'inverse', got '" + *v + "'");
    }
    reject_leftovers(params, "knn", "k, weighting");
    return out;
}

struct MfParams {
    std::size_t rank = 4;
    double lambda = 1e-3;
    std::size_t sweeps = 20;
};

MfParams parse_mf_params(std::map<std::string, std::string> params) {
    MfParams out;
    if (auto v = take(params, "rank")) out.rank = parse_size(*v, "mf rank");
    if (auto v = take(params, "lambda")) out.lambda = parse_double(*v, "mf lambda");
    if (auto v = take(params, "sweeps")) out.sweeps = parse_size(*v, "mf sweeps");
    reject_leftovers(params, "mf", "rank, lambda, sweeps");
    return out;
}

struct MiceParams {
    std::size_t rounds = 5;
    double lambda = 1e-3;
};

MiceParams parse_mice_params(std::map<std::string, std::string> params) {
    MiceParams out;
    if (auto v = take(params, "rounds")) out.rounds = parse_size(*v, "mice rounds");
    if (auto v = take(params, "lambda")) out.lambda = parse_double(*v, "mice lambda");
    reject_leftovers(params, "mice", "rounds, lambda");
    return out;
}

std::vector<std::size_t> parse_hidden_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        const std::size_t dash = std::min(text.find('-', begin), text.size());
        const std::string part = trim(text.substr(begin, dash - begin));
        if (part.empty())
            throw Error("neural hidden sizes must be dash-separated integers, e.g. '64-32'; got '" +
                        text + "'");
        sizes.push_back(parse_size(part, "neural hidden"));
        begin = dash + 1;
        if (dash == text.size()) break;
    }
    return sizes;
}

TrainConfig parse_neural_params(std::map<std::string, std::string> params) {
    TrainConfig out;
    if (auto v = take(params, "hidden")) out.hidden = parse_hidden_sizes(*v);
    if (auto v = take(params, "lr")) out.learning_rate = parse_double(*v, "neural lr");
    if (auto v = take(params, "batch")) out.batch_size = parse_size(*v, "neural batch");
    if (auto v = take(params, "epochs")) out.max_epochs = parse_size(*v, "neural epochs");
    if (auto v = take(params, "patience")) out.patience = parse_size(*v, "neural patience");
    if (auto v = take(params, "val_fraction"))
        out.validation_fraction = parse_double(*v, "neural val_fraction");
    reject_leftovers(params, "neural", "hidden, lr, batch, epochs, patience, val_fraction");
    out.validate();
    return out;
}

// Parses the parameters for their side effects (range/typo validation).
void check_imputer_spec(const ImputerSpec& spec) {
    if (spec.id == "mean") {
        reject_leftovers(spec.params, "mean", "none");
    } else if (spec.id == "knn") {
        parse_knn_params(spec.params);
    } else if (spec.id == "mf") {
        parse_mf_params(spec.params);
    } else if (spec.id == "mice") {
        parse_mice_params(spec.params);
    } else if (spec.id == "neural") {
        parse_neural_params(spec.params);
    } else {
        throw Error("unknown imputer '" + spec.id + "'; known: mean, knn, mf, mice, neural");
    }
}

std::size_t worker_count(std::size_t n_tasks) {
    std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CHRONOFILL_THREADS")) {
        try {
            workers = std::max<std::size_t>(1, parse_size(env, "CHRONOFILL_THREADS"));
        } catch (const Error& e) {
            warn(std::string(e.what()) + "; ignoring");
        }
    }
    return std::min(workers, std::max<std::size_t>(1, n_tasks));
}

// Runs body(i) for i in [0, n) on a bounded pool. Bodies must not throw.
void pooled_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

std::string describe_exception() {
    try {
        throw;
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Config parsing

ConfigMap parse_ini(const std::string& text, const std::string& origin) {
    ConfigMap out;
    std::string section;
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = std::min(text.find('\n', begin), text.size());
        std::string line = text.substr(begin, end - begin);
        begin = end + 1;
        ++line_no;
        if (begin > text.size() && line.empty()) break;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(where + ": unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw Error(where + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(where + ": expected 'key = value' or '[section]'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw Error(where + ": empty key");
        if (value.empty()) throw Error(where + ": key '" + key + "' has an empty value");
        if (section.empty())
            throw Error(where + ": key '" + key + "' appears before any [section]");
        if (!out[section].emplace(key, value).second)
            throw Error(where + ": duplicate key '" + key + "' in section [" + section + "]");
    }
    return out;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::size_t begin = 0;
    while (begin <= value.size()) {
        const std::size_t comma = std::min(value.find(',', begin), value.size());
        const std::string item = trim(value.substr(begin, comma - begin));
        if (!item.empty()) items.push_back(item);
        begin = comma + 1;
        if (comma == value.size()) break;
    }
    return items;
}

ImputerSpec parse_imputer_spec(const std::string& text) {
    ImputerSpec spec;
    const std::string trimmed = trim(text);
    const std::size_t colon = trimmed.find(':');
    spec.id = trim(trimmed.substr(0, colon == std::string::npos ? trimmed.size() : colon));
    if (spec.id.empty()) throw Error("empty imputer spec");
    if (colon == std::string::npos) return spec;
    for (const std::string& pair : split_list(trimmed.substr(colon + 1))) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw Error("imputer spec '" + trimmed + "': parameter '" + pair +
                        "' is not key=value");
        const std::string key = trim(pair.substr(0, eq));
        const std::string value = trim(pair.substr(eq + 1));
        if (key.empty() || value.empty())
            throw Error("imputer spec '" + trimmed + "': parameter '" + pair +
                        "' is not key=value");
        if (!spec.params.emplace(key, value).second)
            throw Error("imputer spec '" + trimmed + "': duplicate parameter '" + key + "'");
    }
    return spec;
}

void RunConfig::validate() const {
    if (mechanisms.empty()) throw Error("run config: no mechanisms selected");
    if (rates.empty()) throw Error("run config: no masking rates selected");
    if (seeds.empty()) throw Error("run config: no seeds selected");
    if (imputers.empty()) throw Error("run config: no imputers selected");
    if (out_dir.empty()) throw Error("run config: no output directory (set out= or pass --out)");
    if (use_synth) {
        synth.validate();
    } else if (csv_path.empty()) {
        throw Error("run config: dataset kind is csv but no path is set");
    }
    std::set<std::string> mech_names;
    for (const auto& m : mechanisms)
        if (!mech_names.insert(mechanism_name(m.kind)).second)
            throw Error(std::string("run config: mechanism '") + mechanism_name(m.kind) +
                        "' listed twice");
    std::set<std::string> rate_names;
    for (double rate : rates) {
        if (!(rate > 0.0 && rate < 1.0))
            throw Error("run config: rate " + format_double(rate) + " is outside (0, 1)");
        if (!rate_names.insert(format_double(rate)).second)
            throw Error("run config: rate " + format_double(rate) + " listed twice");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw Error("run config: duplicate seed");
    std::set<std::string> labels;
    for (const auto& spec : imputers) {
        check_imputer_spec(spec);
        if (!labels.insert(imputer_label(spec)).second)
            throw Error("run config: imputer '" + imputer_label(spec) + "' listed twice");
    }
}

RunConfig run_config_from_ini(const ConfigMap& ini, const std::string& origin) {
    static const std::set<std::string> known_sections = {"dataset", "run",  "mean", "knn",
                                                         "mf",      "mice", "neural"};
    for (const auto& [section, _] : ini)
        if (!known_sections.count(section))
            throw Error(origin + ": unknown section [" + section + "]");

    RunConfig config;
    config.raw = ini;

    auto dataset = ini.count("dataset") ? ini.at("dataset") : std::map<std::string, std::string>{};
    std::string kind = take(dataset, "kind").value_or("synth");
    if (kind == "synth") {
        config.use_synth = true;
        config.dataset_name = take(dataset, "name").value_or("synth");
        auto& s = config.synth;
        if (auto v = take(dataset, "n_samples")) s.n_samples = parse_size(*v, "dataset n_samples");
        if (auto v = take(dataset, "n_points")) s.n_points = parse_size(*v, "dataset n_points");
        if (auto v = take(dataset, "t_start")) s.t_start = parse_double(*v, "dataset t_start");
        if (auto v = take(dataset, "t_stop")) s.t_stop = parse_double(*v, "dataset t_stop");
        if (auto v = take(dataset, "amplitude")) s.amplitude = parse_double(*v, "dataset amplitude");
        if (auto v = take(dataset, "amplitude_sd"))
            s.amplitude_sd = parse_double(*v, "dataset amplitude_sd");
        if (auto v = take(dataset, "frequency")) s.frequency = parse_double(*v, "dataset frequency");
        if (auto v = take(dataset, "frequency_sd"))
            s.frequency_sd = parse_double(*v, "dataset frequency_sd");
        if (auto v = take(dataset, "phase")) s.phase = parse_double(*v, "dataset phase");
        if (auto v = take(dataset, "seed")) s.seed = parse_u64(*v, "dataset seed");
    } else if (kind == "csv") {
        config.use_synth = false;
        if (auto v = take(dataset, "path")) config.csv_path = *v;
        else throw Error(origin + ": [dataset] kind=csv needs path=");
        if (auto v = take(dataset, "time_column")) config.time_hint = *v;
        config.dataset_name =
            take(dataset, "name").value_or(fs::path(config.csv_path).stem().string());
    } else {
        throw Error(origin + ": [dataset] kind must be 'synth' or 'csv', got '" + kind + "'");
    }
    if (!dataset.empty())
        throw Error(origin + ": [dataset] has an unknown key '" + dataset.begin()->first + "'");

    auto run = ini.count("run") ? ini.at("run") : std::map<std::string, std::string>{};
    const double beta = parse_double(take(run, "beta").value_or("4"), "run beta");
    const std::string mar_driver = take(run, "mar_driver").value_or("");
    for (const std::string& name : split_list(take(run, "mechanisms").value_or("mcar,mar,mnar"))) {
        Mechanism m;
        m.kind = mechanism_from_name(name);
        if (m.kind != Mechanism::Kind::MCAR) m.beta = beta;
        if (m.kind == Mechanism::Kind::MAR) m.driver = mar_driver; // empty → time column
        config.mechanisms.push_back(m);
    }
    for (const std::string& rate : split_list(take(run, "rates").value_or("0.3")))
        config.rates.push_back(parse_double(rate, "run rates"));
    for (const std::string& seed : split_list(take(run, "seeds").value_or("1")))
        config.seeds.push_back(parse_u64(seed, "run seeds"));
    const std::string imputers =
        take(run, "imputers").value_or("mean,knn,mf,mice,neural");
    for (const std::string& item : split_list(imputers)) {
        ImputerSpec spec = parse_imputer_spec(item);
        // Section params are the base; spec-string params win.
        if (ini.count(spec.id)) {
            std::map<std::string, std::string> merged = ini.at(spec.id);
            for (const auto& [key, value] : spec.params) merged[key] = value;
            spec.params = std::move(merged);
        }
        check_imputer_spec(spec); // typos fail at load, not mid-run
        config.imputers.push_back(std::move(spec));
    }
    if (auto v = take(run, "out")) config.out_dir = *v;
    if (!run.empty())
        throw Error(origin + ": [run] has an unknown key '" + run.begin()->first + "'");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_ini(parse_ini(read_text_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Seeds and dispatch

std::uint64_t job_mask_seed(std::uint64_t seed, const Mechanism& mechanism, double rate) {
    std::uint64_t s = mix_seed(seed, "mask");
    s = mix_seed(s, mechanism_name(mechanism.kind));
    s = mix_seed(s, format_double(rate));
    return s;
}

std::uint64_t job_imputer_seed(std::uint64_t seed, const Mechanism& mechanism, double rate,
                               const std::string& imputer_id) {
    std::uint64_t s = mix_seed(seed, "impute");
    s = mix_seed(s, mechanism_name(mechanism.kind));
    s = mix_seed(s, format_double(rate));
    s = mix_seed(s, imputer_id);
    return s;
}

ImputationResult run_imputer(const ImputerSpec& spec, const Table& table, std::uint64_t seed,
                             std::map<std::string, std::vector<EpochLog>>* training_logs) {
    if (spec.id == "mean") {
        reject_leftovers(spec.params, "mean", "none");
        return impute_mean(table);
    }
    if (spec.id == "knn") {
        const KnnParams p = parse_knn_params(spec.params);
        return impute_knn(table, p.k, p.weighting);
    }
    if (spec.id == "mf") {
        const MfParams p = parse_mf_params(spec.params);
        return impute_mf(table, p.rank, p.lambda, p.sweeps, seed);
    }
    if (spec.id == "mice") {
        const MiceParams p = parse_mice_params(spec.params);
        return impute_mice(table, p.rounds, p.lambda, seed);
    }
    if (spec.id == "neural") {
        TrainConfig config = parse_neural_params(spec.params);
        config.seed = seed;
        std::vector<std::string> targets;
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            if (table.kind(c).is_time()) continue;
            for (std::size_t r = 0; r < table.n_rows(); ++r) {
                if (!table.cell(r, c).is_missing()) continue;
                targets.push_back(table.column_name(c));
                break;
            }
        }
        return impute_neural(table, targets, config, training_logs);
    }
    throw Error("unknown imputer '" + spec.id + "'; known: mean, knn, mf, mice, neural");
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct TripleJob {
    std::string name; // e.g. mcar-r0.3-s0
    Mechanism mechanism;
    double rate = 0.0;
    std::size_t seed_index = 0;
    std::uint64_t seed_value = 0;
    std::uint64_t mask_seed = 0;

    // Filled by the mask phase.
    std::optional<ApplyMaskResult> masked;
    JobRecord record;
};

struct ImputeJob {
    std::size_t triple = 0; // index into the triple list
    ImputerSpec spec;
    std::string label;
    std::uint64_t seed = 0;

    std::string row; // cached report line when the job succeeded
    JobRecord record;
};

// Runs the mask phase for one triple: reuse mask.csv when present, else
// build and persist it; either way the masked table is rebuilt in memory.
void run_mask_job(const Table& table, const fs::path& out_dir, TripleJob& job) {
    const auto start = std::chrono::steady_clock::now();
    JobRecord& record = job.record;
    record.id = job.name;
    record.mechanism = mechanism_name(job.mechanism.kind);
    record.rate = job.rate;
    record.seed_index = job.seed_index;
    record.seed_value = job.seed_value;
    try {
        const fs::path dir = out_dir / "jobs" / job.name;
        const std::string mask_rel = "jobs/" + job.name + "/mask.csv";
        const std::string truth_rel = "jobs/" + job.name + "/truth.csv";
        Mask mask;
        if (fs::exists(dir / "mask.csv") && fs::exists(dir / "truth.csv")) {
            mask = read_mask((dir / "mask.csv").string());
            record.status = "cached";
        } else {
            mask = make_mask(table, job.mechanism, job.rate, job.mask_seed);
            write_mask(mask, (dir / "mask.csv").string());
            record.status = "ok";
        }
        job.masked = apply_mask(table, mask.coordinates);
        if (record.status == "ok")
            write_ground_truth(job.masked->ground_truth, (dir / "truth.csv").string());
        record.artifacts = {mask_rel, truth_rel};
    } catch (...) {
        record.status = "failed";
        record.error = describe_exception();
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs one (triple, imputer) job: impute, evaluate, and write the artifact
// set, finishing with row.csv as the completeness marker. A pre-existing
// row.csv short-circuits the whole job.
void run_impute_job(const std::string& dataset_name, const TripleJob& triple,
                    const fs::path& out_dir, ImputeJob& job) {
    const auto start = std::chrono::steady_clock::now();
    JobRecord& record = job.record;
    const std::string rel_dir = "jobs/" + triple.name + "/" + sanitize_component(job.label);
    record.id = triple.name + "/" + job.label;
    record.mechanism = mechanism_name(triple.mechanism.kind);
    record.rate = triple.rate;
    record.seed_index = triple.seed_index;
    record.seed_value = triple.seed_value;
    record.imputer = job.label;
    try {
        const fs::path dir = out_dir / rel_dir;
        if (fs::exists(dir / "row.csv")) {
            job.row = trim(read_text_file((dir / "row.csv").string()));
            record.status = "cached";
            for (const auto& entry : fs::recursive_directory_iterator(dir))
                if (entry.is_regular_file())
                    record.artifacts.push_back(
                        fs::relative(entry.path(), out_dir).generic_string());
            std::sort(record.artifacts.begin(), record.artifacts.end());
        } else {
            if (!triple.masked.has_value())
                throw Error("mask phase failed: " + triple.record.error);
            std::map<std::string, std::vector<EpochLog>> logs;
            ImputationResult result =
                run_imputer(job.spec, triple.masked->masked, job.seed, &logs);
            EvalIds ids{dataset_name, job.label, mechanism_name(triple.mechanism.kind),
                        triple.rate};
            const EvalReport report = evaluate(result.table, triple.masked->ground_truth, ids);
            write_csv(result.table, (dir / "imputed.csv").string());
            record.artifacts.push_back(rel_dir + "/imputed.csv");
            scatter_dump(result, triple.masked->ground_truth,
                         mechanism_name(triple.mechanism.kind), (dir / "scatter.csv").string());
            record.artifacts.push_back(rel_dir + "/scatter.csv");
            for (const auto& [column, log] : logs) {
                const std::string log_rel = rel_dir + "/logs/" + sanitize_component(column) +
                                            ".csv";
                write_training_log(log, (out_dir / log_rel).string());
                record.artifacts.push_back(log_rel);
            }
            job.row = report_csv_row(report);
            write_text_file_atomic((dir / "row.csv").string(), job.row + "\n");
            record.artifacts.push_back(rel_dir + "/row.csv");
            record.status = "ok";
        }
    } catch (...) {
        record.status = "failed";
        record.error = describe_exception();
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

nlohmann::json job_to_json(const JobRecord& record) {
    nlohmann::json j;
    j["id"] = record.id;
    j["mechanism"] = record.mechanism;
    j["rate"] = record.rate;
    j["seed_index"] = record.seed_index;
    j["seed_value"] = record.seed_value;
    if (!record.imputer.empty()) j["imputer"] = record.imputer;
    j["status"] = record.status;
    if (!record.error.empty()) j["error"] = record.error;
    j["seconds"] = record.seconds;
    j["artifacts"] = record.artifacts;
    return j;
}

} // namespace

RunManifest run_pipeline(const RunConfig& config) {
    config.validate();
    const fs::path out_dir = config.out_dir;
    fs::create_directories(out_dir);

    Table table = [&] {
        if (config.use_synth) return generate_pseudo_periodic(config.synth);
        auto rows = read_csv_rows(config.csv_path);
        return table_from_rows(rows, infer_schema(rows, config.time_hint), config.csv_path);
    }();

    // A MAR mechanism with no explicit driver falls back to the time axis,
    // which is fully observed and never masked.
    std::vector<Mechanism> mechanisms = config.mechanisms;
    for (Mechanism& m : mechanisms) {
        if (m.kind != Mechanism::Kind::MAR || !m.driver.empty()) continue;
        const auto time_col = table.time_column();
        if (!time_col.has_value())
            throw Error("MAR has no default driver: the dataset has no time column; "
                        "set mar_driver in [run]");
        m.driver = table.column_name(*time_col);
    }

    // Phase 1: one mask per (mechanism, rate, seed), shared by every imputer
    // so they compete on identical missingness.
    std::vector<TripleJob> triples;
    for (const Mechanism& mechanism : mechanisms)
        for (double rate : config.rates)
            for (std::size_t s = 0; s < config.seeds.size(); ++s) {
                TripleJob job;
                job.name = std::string(mechanism_name(mechanism.kind)) + "-r" +
                           format_rate_tag(rate) + "-s" + std::to_string(s);
                job.mechanism = mechanism;
                job.rate = rate;
                job.seed_index = s;
                job.seed_value = config.seeds[s];
                job.mask_seed = job_mask_seed(config.seeds[s], mechanism, rate);
                triples.push_back(std::move(job));
            }
    pooled_for(triples.size(), [&](std::size_t i) { run_mask_job(table, out_dir, triples[i]); });

    // Phase 2: the full (triple × imputer) matrix.
    std::vector<ImputeJob> jobs;
    for (std::size_t t = 0; t < triples.size(); ++t)
        for (const ImputerSpec& spec : config.imputers) {
            ImputeJob job;
            job.triple = t;
            job.spec = spec;
            job.label = imputer_label(spec);
            job.seed = job_imputer_seed(triples[t].seed_value, triples[t].mechanism,
                                        triples[t].rate, spec.id);
            jobs.push_back(std::move(job));
        }
    pooled_for(jobs.size(), [&](std::size_t i) {
        run_impute_job(config.dataset_name, triples[jobs[i].triple], out_dir, jobs[i]);
    });

    // The report concatenates the cached per-job rows in config order, so a
    // re-run reproduces it byte for byte.
    std::string report = report_csv_header();
    report += '\n';
    for (const ImputeJob& job : jobs) {
        if (job.row.empty()) continue;
        report += job.row;
        report += '\n';
    }
    const fs::path report_path = out_dir / "report.csv";
    write_text_file_atomic(report_path.string(), report);

    RunManifest manifest;
    manifest.out_dir = out_dir.string();
    manifest.report_path = report_path.string();
    for (const TripleJob& triple : triples) {
        manifest.jobs.push_back(triple.record);
        if (triple.record.status == "failed") manifest.all_ok = false;
    }
    for (const ImputeJob& job : jobs) {
        manifest.jobs.push_back(job.record);
        if (job.record.status == "failed") manifest.all_ok = false;
    }

    nlohmann::json j;
    j["toolkit_version"] = kVersion;
    j["out_dir"] = manifest.out_dir;
    j["report"] = "report.csv";
    j["all_ok"] = manifest.all_ok;
    j["config"] = config.raw;
    j["jobs"] = nlohmann::json::array();
    for (const JobRecord& record : manifest.jobs) j["jobs"].push_back(job_to_json(record));
    write_text_file_atomic((out_dir / "manifest.json").string(), j.dump(2) + "\n");
    return manifest;
}

// ---------------------------------------------------------------------------
// Comparison table and scatter dump

ComparisonTable render_comparison(const std::vector<EvalReport>& reports,
                                  const std::string& metric) {
    if (reports.empty()) throw Error("render_comparison: no reports");
    double EvalReport::*field = nullptr;
    if (metric == "mre") field = &EvalReport::mre;
    else if (metric == "mse") field = &EvalReport::mse;
    else if (metric == "two_norm") field = &EvalReport::two_norm;
    else if (metric == "pearson_r") field = &EvalReport::pearson_r;
    else throw Error("unknown metric '" + metric + "'; known: mre, mse, two_norm, pearson_r");

    std::vector<std::string> datasets;
    std::vector<std::string> mechanisms;
    std::vector<std::string> imputers;
    auto note = [](std::vector<std::string>& seen, const std::string& value) {
        if (std::find(seen.begin(), seen.end(), value) == seen.end()) seen.push_back(value);
    };
    for (const EvalReport& r : reports) {
        note(datasets, r.dataset);
        note(mechanisms, r.mechanism);
        note(imputers, r.imputer);
    }
    if (datasets.size() > 1 && mechanisms.size() > 1)
        throw Error("render_comparison: reports span " + std::to_string(datasets.size()) +
                    " datasets and " + std::to_string(mechanisms.size()) +
                    " mechanisms; compare one dataset across mechanisms or one mechanism "
                    "across datasets");
    const bool by_dataset = datasets.size() > 1;
    const std::vector<std::string>& columns = by_dataset ? datasets : mechanisms;

    // Cell text: mean over matching reports, std (population) in parentheses
    // when there is more than one.
    auto cell_text = [&](const std::string& imputer, const std::string& column) -> std::string {
        std::vector<double> values;
        for (const EvalReport& r : reports) {
            const std::string& group = by_dataset ? r.dataset : r.mechanism;
            if (r.imputer == imputer && group == column) values.push_back(r.*field);
        }
        if (values.empty()) return "N/A";
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        char buffer[64];
        std::snprintf(buffer, sizeof buffer, "%.4f", mean);
        std::string text = buffer;
        if (values.size() > 1) {
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(values.size());
            std::snprintf(buffer, sizeof buffer, " (%.4f)", std::sqrt(var));
            text += buffer;
        }
        return text;
    };

    std::vector<std::vector<std::string>> grid;
    grid.push_back({"imputer"});
    for (const std::string& column : columns) grid[0].push_back(column);
    for (const std::string& imputer : imputers) {
        std::vector<std::string> row{imputer};
        for (const std::string& column : columns) row.push_back(cell_text(imputer, column));
        grid.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(grid[0].size(), 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    ComparisonTable out;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        std::string line = "|";
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            line += " " + grid[r][c] + std::string(widths[c] - grid[r][c].size(), ' ') + " |";
        }
        out.markdown += line + "\n";
        if (r == 0) {
            std::string rule = "|";
            for (std::size_t c = 0; c < widths.size(); ++c)
                rule += std::string(widths[c] + 2, '-') + "|";
            out.markdown += rule + "\n";
        }
        std::string csv_line;
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            if (c > 0) csv_line += ',';
            csv_line += csv_quote(grid[r][c]);
        }
        out.csv += csv_line + "\n";
    }
    return out;
}

void scatter_dump(const ImputationResult& result, const std::vector<GroundTruthCell>& truth,
                  const std::string& mechanism, const std::string& path) {
    std::string out = "truth,imputed,mechanism,column\n";
    const Table& table = result.table;
    for (const GroundTruthCell& cell : truth) {
        if (cell.value.is_category()) continue; // numeric scatter only
        const auto col = table.find_column(cell.column);
        if (!col.has_value())
            throw Error("scatter_dump: imputed table has no column '" + cell.column + "'");
        const Cell& imputed = table.cell(cell.row, *col);
        if (imputed.is_missing())
            throw Error("scatter_dump: cell (" + std::to_string(cell.row) + ", '" + cell.column +
                        "') was never imputed");
        out += format_double(cell.value.number());
        out += ',';
        out += format_double(imputed.number());
        out += ',';
        out += csv_quote(mechanism);
        out += ',';
        out += csv_quote(cell.column);
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

} // namespace chronofill
