#include "chronofill/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "chronofill/common.hpp"
#include "chronofill/rng.hpp"
#include "chronofill/time_encode.hpp"

namespace chronofill {

namespace {

struct ColumnStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

ColumnStats observed_stats(const Table& table, std::size_t col) {
    ColumnStats stats;
    double sum = 0.0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const Cell& cell = table.cell(r, col);
        if (!cell.is_number()) continue;
        sum += cell.number();
        ++stats.count;
    }
    if (stats.count == 0) return stats;
    stats.mean = sum / static_cast<double>(stats.count);
    double ss = 0.0;
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const Cell& cell = table.cell(r, col);
        if (!cell.is_number()) continue;
        const double d = cell.number() - stats.mean;
        ss += d * d;
    }
    stats.stddev = std::sqrt(ss / static_cast<double>(stats.count));
    return stats;
}

} // namespace

FeatureMatrix featurize(const Table& table, const std::string& target) {
    const std::size_t target_col = table.column_index(target);
    if (table.kind(target_col).is_time())
        throw Error("target '" + target + "' is the time column; the time axis is never imputed");

    FeatureMatrix matrix;
    matrix.n_rows = table.n_rows();

    // Column-block staging: each entry is one feature column's values.
    std::vector<std::vector<double>> blocks;
    auto drop_warning = [&](const std::string& message) {
        matrix.warnings.push_back(message);
        warn(message);
    };

    for (std::size_t c = 0; c < table.n_cols(); ++c) {
        if (c == target_col) continue;
        const std::string& name = table.column_name(c);
        if (table.kind(c).is_numeric()) {
            const ColumnStats stats = observed_stats(table, c);
            if (stats.count > 0 && stats.stddev > 0.0) {
                FeatureInfo info;
                info.source_column = name;
                info.kind = FeatureInfo::Kind::ScaledNumeric;
                info.mean = stats.mean;
                info.stddev = stats.stddev;
                std::vector<double> column(matrix.n_rows, 0.0);
                for (std::size_t r = 0; r < matrix.n_rows; ++r) {
                    const Cell& cell = table.cell(r, c);
                    if (cell.is_number())
                        column[r] = (cell.number() - stats.mean) / stats.stddev;
                }
                matrix.features.push_back(std::move(info));
                blocks.push_back(std::move(column));
            } else {
                drop_warning("column '" + name +
                             "' has zero variance; dropped from the feature matrix");
            }
            FeatureInfo indicator;
            indicator.source_column = name;
            indicator.kind = FeatureInfo::Kind::MissingIndicator;
            std::vector<double> column(matrix.n_rows, 0.0);
            for (std::size_t r = 0; r < matrix.n_rows; ++r)
                if (table.cell(r, c).is_missing()) column[r] = 1.0;
            matrix.features.push_back(std::move(indicator));
            blocks.push_back(std::move(column));
        } else if (table.kind(c).is_categorical()) {
            std::set<std::string> vocabulary;
            for (std::size_t r = 0; r < matrix.n_rows; ++r) {
                const Cell& cell = table.cell(r, c);
                if (cell.is_category()) vocabulary.insert(cell.label());
            }
            for (const std::string& label : vocabulary) {
                FeatureInfo info;
                info.source_column = name;
                info.kind = FeatureInfo::Kind::OneHot;
                info.detail = label;
                std::vector<double> column(matrix.n_rows, 0.0);
                for (std::size_t r = 0; r < matrix.n_rows; ++r) {
                    const Cell& cell = table.cell(r, c);
                    if (cell.is_category() && cell.label() == label) column[r] = 1.0;
                }
                matrix.features.push_back(std::move(info));
                blocks.push_back(std::move(column));
            }
        } else { // time column: expand, then scale like any numeric feature
            std::vector<double> canonical(matrix.n_rows);
            for (std::size_t r = 0; r < matrix.n_rows; ++r)
                canonical[r] = table.cell(r, c).number();
            const auto expanded = expand_time_column(canonical, table.kind(c).format);
            const auto names = time_feature_names(table.kind(c).format);
            for (std::size_t f = 0; f < names.size(); ++f) {
                double mean = 0.0;
                for (std::size_t r = 0; r < matrix.n_rows; ++r) mean += expanded[r][f];
                mean /= static_cast<double>(matrix.n_rows);
                double ss = 0.0;
                for (std::size_t r = 0; r < matrix.n_rows; ++r) {
                    const double d = expanded[r][f] - mean;
                    ss += d * d;
                }
                const double stddev = std::sqrt(ss / static_cast<double>(matrix.n_rows));
                if (stddev == 0.0) {
                    drop_warning("time feature '" + names[f] +
                                 "' is constant; dropped from the feature matrix");
                    continue;
                }
                FeatureInfo info;
                info.source_column = name;
                info.kind = FeatureInfo::Kind::TimeFeature;
                info.detail = names[f];
                info.mean = mean;
                info.stddev = stddev;
                std::vector<double> column(matrix.n_rows);
                for (std::size_t r = 0; r < matrix.n_rows; ++r)
                    column[r] = (expanded[r][f] - mean) / stddev;
                matrix.features.push_back(std::move(info));
                blocks.push_back(std::move(column));
            }
        }
    }

    matrix.n_features = blocks.size();
    matrix.values.resize(matrix.n_rows * matrix.n_features);
    for (std::size_t f = 0; f < matrix.n_features; ++f)
        for (std::size_t r = 0; r < matrix.n_rows; ++r)
            matrix.values[r * matrix.n_features + f] = blocks[f][r];
    return matrix;
}

void TrainConfig::validate() const {
    for (std::size_t h : hidden)
        if (h == 0) throw Error("hidden layer sizes must be positive");
    if (!(learning_rate > 0)) throw Error("learning rate must be positive");
    if (batch_size == 0) throw Error("batch size must be positive");
    if (max_epochs == 0) throw Error("max epochs must be positive");
    if (patience == 0) throw Error("patience must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
        throw Error("validation fraction must lie in (0, 0.5]");
}

namespace {

// Core Adam loop shared by the numeric and categorical heads.
MlpModel train_mlp(const FeatureMatrix& features, MlpTargets all_targets, std::size_t n_out,
                   bool softmax, const TrainConfig& config) {
    config.validate();
    const std::size_t n = features.n_rows;
    if (n < 10)
        throw Error("only " + std::to_string(n) +
                    " rows have an observed target; need at least 10 — use a simpler imputer "
                    "(e.g. mean) for this column");
    if (features.n_features == 0) throw Error("feature matrix has no features");

    MlpModel model;
    model.layout.sizes.push_back(features.n_features);
    for (std::size_t h : config.hidden) model.layout.sizes.push_back(h);
    model.layout.sizes.push_back(n_out);
    model.layout.softmax_head = softmax;
    model.layout.validate();

    // Seeded validation split.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 split_rng(mix_seed(config.seed, "val-split"));
    for (std::size_t i = n; i-- > 1;)
        std::swap(order[i], order[split_rng.next_below(i + 1)]);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    const std::vector<std::size_t> val_rows(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_rows(order.begin() + n_val, order.end());

    const std::size_t n_features = features.n_features;
    auto gather = [&](const std::vector<std::size_t>& rows, std::vector<double>& x,
                      std::vector<double>& y_num, std::vector<std::size_t>& y_lab) {
        x.resize(rows.size() * n_features);
        if (softmax) y_lab.resize(rows.size());
        else y_num.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy_n(features.values.begin() + rows[i] * n_features, n_features,
                        x.begin() + i * n_features);
            if (softmax) y_lab[i] = all_targets.labels[rows[i]];
            else y_num[i] = all_targets.numeric[rows[i]];
        }
    };
    std::vector<double> val_x, val_y;
    std::vector<std::size_t> val_labels;
    gather(val_rows, val_x, val_y, val_labels);
    MlpTargets val_targets;
    if (softmax) val_targets.labels = val_labels.data();
    else val_targets.numeric = val_y.data();

    // Kaiming-style init: weights N(0, 2/fan_in), biases zero.
    const std::size_t n_params = model.layout.param_count();
    model.params.assign(n_params, 0.0);
    GaussianSampler init(mix_seed(config.seed, "init"));
    for (std::size_t l = 0; l < model.layout.n_layers(); ++l) {
        const std::size_t fan_in = model.layout.sizes[l];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        double* w = model.params.data() + model.layout.weight_offset(l);
        const std::size_t n_weights = model.layout.sizes[l + 1] * fan_in;
        for (std::size_t i = 0; i < n_weights; ++i) w[i] = scale * init.next();
    }

    std::vector<double> adam_m(n_params, 0.0), adam_v(n_params, 0.0);
    std::vector<double> best_params = model.params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale_epochs = 0;
    std::size_t steps = 0;
    const Exec exec = default_exec();

    std::vector<double> batch_x, batch_y, grad;
    std::vector<std::size_t> batch_labels;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        SplitMix64 shuffle_rng(mix_seed(config.seed, "epoch-" + std::to_string(epoch)));
        for (std::size_t i = train_rows.size(); i-- > 1;)
            std::swap(train_rows[i], train_rows[shuffle_rng.next_below(i + 1)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
            const std::size_t stop = std::min(start + config.batch_size, train_rows.size());
            const std::vector<std::size_t> rows(train_rows.begin() + start,
                                                train_rows.begin() + stop);
            gather(rows, batch_x, batch_y, batch_labels);
            MlpTargets batch_targets;
            if (softmax) batch_targets.labels = batch_labels.data();
            else batch_targets.numeric = batch_y.data();

            const double loss = mlp_batch_gradient(model.layout, model.params, batch_x,
                                                   rows.size(), batch_targets, grad, exec);
            epoch_loss += loss * static_cast<double>(rows.size());

            ++steps;
            const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(steps));
            const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(steps));
            for (std::size_t p = 0; p < n_params; ++p) {
                adam_m[p] = config.adam_beta1 * adam_m[p] + (1.0 - config.adam_beta1) * grad[p];
                adam_v[p] =
                    config.adam_beta2 * adam_v[p] + (1.0 - config.adam_beta2) * grad[p] * grad[p];
                const double m_hat = adam_m[p] / bias1;
                const double v_hat = adam_v[p] / bias2;
                model.params[p] -=
                    config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
            }
        }
        epoch_loss /= static_cast<double>(train_rows.size());
        const double val_loss = mlp_batch_loss(model.layout, model.params, val_x, val_rows.size(),
                                               val_targets, exec);
        if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss))
            throw Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                        "; lower the learning rate (currently " +
                        format_double(config.learning_rate) + ")");
        model.log.push_back({epoch, epoch_loss, val_loss});

        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = model.params;
            stale_epochs = 0;
        } else if (++stale_epochs >= config.patience) {
            break;
        }
    }

    model.params = std::move(best_params);
    model.best_val_loss = best_val;
    return model;
}

} // namespace

MlpModel train(const FeatureMatrix& features, const std::vector<double>& targets,
               const TrainConfig& config) {
    if (targets.size() != features.n_rows)
        throw Error("target count does not match the feature matrix");
    MlpTargets t;
    t.numeric = targets.data();
    return train_mlp(features, t, 1, false, config);
}

MlpModel train_classifier(const FeatureMatrix& features, const std::vector<std::size_t>& labels,
                          std::size_t n_classes, const TrainConfig& config) {
    if (labels.size() != features.n_rows)
        throw Error("label count does not match the feature matrix");
    if (n_classes == 0) throw Error("classifier needs at least one class");
    for (std::size_t label : labels)
        if (label >= n_classes) throw Error("class label out of range");
    MlpTargets t;
    t.labels = labels.data();
    return train_mlp(features, t, n_classes, true, config);
}

ImputationResult impute_neural(const Table& table, const std::vector<std::string>& targets,
                               const TrainConfig& config,
                               std::map<std::string, std::vector<EpochLog>>* training_logs) {
    config.validate();
    std::vector<FilledCell> fills;
    std::vector<std::string> warnings;
    std::map<std::string, double> stats;

    // Fresh cell grid we patch per target.
    std::vector<std::string> names(table.column_names());
    std::vector<ColumnKind> kinds;
    for (std::size_t c = 0; c < table.n_cols(); ++c) kinds.push_back(table.kind(c));
    std::vector<Cell> cells;
    cells.reserve(table.n_rows() * table.n_cols());
    for (std::size_t r = 0; r < table.n_rows(); ++r)
        for (std::size_t c = 0; c < table.n_cols(); ++c) cells.push_back(table.cell(r, c));

    for (const std::string& target : targets) {
        const std::size_t target_col = table.column_index(target);
        try {
            // Featurize against the ORIGINAL table: sibling targets keep
            // their native missingness (indicators carry it), so target
            // order never changes any model's inputs.
            FeatureMatrix features = featurize(table, target);
            for (const auto& w : features.warnings) warnings.push_back(w);

            std::vector<std::size_t> observed_rows, missing_rows;
            for (std::size_t r = 0; r < table.n_rows(); ++r) {
                if (table.cell(r, target_col).is_missing()) missing_rows.push_back(r);
                else observed_rows.push_back(r);
            }

            FeatureMatrix train_features;
            train_features.n_rows = observed_rows.size();
            train_features.n_features = features.n_features;
            train_features.features = features.features;
            train_features.values.resize(observed_rows.size() * features.n_features);
            for (std::size_t i = 0; i < observed_rows.size(); ++i)
                std::copy_n(features.values.begin() + observed_rows[i] * features.n_features,
                            features.n_features,
                            train_features.values.begin() + i * features.n_features);

            TrainConfig per_target = config;
            per_target.seed = mix_seed(config.seed, target);

            if (table.kind(target_col).is_categorical()) {
                std::set<std::string> vocab_set;
                for (std::size_t r : observed_rows)
                    vocab_set.insert(table.cell(r, target_col).label());
                const std::vector<std::string> vocabulary(vocab_set.begin(), vocab_set.end());
                std::vector<std::size_t> labels(observed_rows.size());
                for (std::size_t i = 0; i < observed_rows.size(); ++i) {
                    const std::string& label = table.cell(observed_rows[i], target_col).label();
                    labels[i] = static_cast<std::size_t>(
                        std::lower_bound(vocabulary.begin(), vocabulary.end(), label) -
                        vocabulary.begin());
                }
                MlpModel model =
                    train_classifier(train_features, labels, vocabulary.size(), per_target);
                if (training_logs) (*training_logs)[target] = model.log;

                std::vector<double> probs(vocabulary.size());
                for (std::size_t r : missing_rows) {
                    mlp_forward_row(model.layout, model.params,
                                    features.values.data() + r * features.n_features,
                                    probs.data());
                    std::size_t best = 0; // ties go to the lowest vocabulary index
                    for (std::size_t k = 1; k < probs.size(); ++k)
                        if (probs[k] > probs[best]) best = k;
                    const Cell value = Cell::category(vocabulary[best]);
                    cells[r * table.n_cols() + target_col] = value;
                    fills.push_back({r, target, value, "neural"});
                }
            } else {
                // z-score the target over its observed values; a constant
                // target keeps std 1 so the un-scaling is still the identity.
                double mean = 0.0;
                for (std::size_t r : observed_rows)
                    mean += table.cell(r, target_col).number();
                mean /= static_cast<double>(observed_rows.size());
                double ss = 0.0;
                for (std::size_t r : observed_rows) {
                    const double d = table.cell(r, target_col).number() - mean;
                    ss += d * d;
                }
                double stddev = std::sqrt(ss / static_cast<double>(observed_rows.size()));
                if (stddev == 0.0) stddev = 1.0;

                std::vector<double> y(observed_rows.size());
                for (std::size_t i = 0; i < observed_rows.size(); ++i)
                    y[i] = (table.cell(observed_rows[i], target_col).number() - mean) / stddev;

                MlpModel model = train(train_features, y, per_target);
                if (training_logs) (*training_logs)[target] = model.log;

                for (std::size_t r : missing_rows) {
                    double out = 0.0;
                    mlp_forward_row(model.layout, model.params,
                                    features.values.data() + r * features.n_features, &out);
                    const Cell value = Cell::number(out * stddev + mean);
                    cells[r * table.n_cols() + target_col] = value;
                    fills.push_back({r, target, value, "neural"});
                }
            }
        } catch (const Error& e) {
            throw Error("neural imputation of column '" + target + "' failed: " + e.what());
        }
    }

    std::sort(fills.begin(), fills.end(), [&](const FilledCell& a, const FilledCell& b) {
        if (a.row != b.row) return a.row < b.row;
        return table.column_index(a.column) < table.column_index(b.column);
    });
    stats["targets_trained"] = static_cast<double>(targets.size());
    return {Table(std::move(names), std::move(kinds), std::move(cells)), std::move(fills),
            std::move(stats), std::move(warnings)};
}

void write_training_log(const std::vector<EpochLog>& log, const std::string& path) {
    std::string out = "epoch,train_loss,val_loss\n";
    for (const auto& entry : log) {
        out += std::to_string(entry.epoch);
        out += ',';
        out += format_double(entry.train_loss);
        out += ',';
        out += format_double(entry.val_loss);
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

} // namespace chronofill
