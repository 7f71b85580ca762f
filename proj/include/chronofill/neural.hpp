#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronofill/impute.hpp"
#include "chronofill/kernels.hpp"
#include "chronofill/table.hpp"

namespace chronofill {

// One column of the dense feature matrix and how it was derived.
struct FeatureInfo {
    enum class Kind { ScaledNumeric, OneHot, TimeFeature, MissingIndicator };

    std::string source_column;
    Kind kind = Kind::ScaledNumeric;
    std::string detail; // one-hot label, or the time feature's name
    double mean = 0.0;  // scaling stats (ScaledNumeric / TimeFeature)
    double stddev = 1.0;

    bool operator==(const FeatureInfo&) const = default;
};

struct FeatureMatrix {
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    std::vector<double> values; // n_rows × n_features, never NaN
    std::vector<FeatureInfo> features;
    std::vector<std::string> warnings;

    double at(std::size_t row, std::size_t feature) const {
        return values[row * n_features + feature];
    }
};

// Dense features from every non-target column: numerics z-scored on observed
// mean/population-std (zero-variance value features dropped with a warning)
// with missing → 0 plus a 0/1 indicator; categoricals one-hot over the
// observed vocabulary (missing/unseen → all zeros); the time column expanded
// by its encoder, then z-scored like any numeric feature.
FeatureMatrix featurize(const Table& table, const std::string& target);

struct TrainConfig {
    std::vector<std::size_t> hidden{64, 32};
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 10; // epochs without validation improvement
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct MlpModel {
    MlpLayout layout;
    std::vector<double> params; // best-validation snapshot
    std::vector<EpochLog> log;
    double best_val_loss = 0.0;
};

// Adam minibatch training with a seeded train/validation split and early
// stopping on validation loss; returns the best-validation snapshot. Throws
// on fewer than 10 rows or when the loss turns non-finite (raise/lower the
// learning rate).
MlpModel train(const FeatureMatrix& features, const std::vector<double>& targets,
               const TrainConfig& config);
MlpModel train_classifier(const FeatureMatrix& features, const std::vector<std::size_t>& labels,
                          std::size_t n_classes, const TrainConfig& config);

// Per-target-column neural imputation: featurize the other columns, train on
// rows where the target is observed, predict its missing rows (numeric
// predictions un-scaled back to original units, categorical via argmax with
// ties to the lowest vocabulary index). Each target derives its own seed
// from config.seed and the column name. Pass `training_logs` to collect the
// per-target epoch logs.
ImputationResult impute_neural(const Table& table, const std::vector<std::string>& targets,
                               const TrainConfig& config,
                               std::map<std::string, std::vector<EpochLog>>* training_logs = nullptr);

// Per-epoch training-log CSV (epoch,train_loss,val_loss).
void write_training_log(const std::vector<EpochLog>& log, const std::string& path);

} // namespace chronofill
