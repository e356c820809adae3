#pragma once

// Projected mini-batch gradient training under a nuclear-norm ball, plus the
// stratified k-fold and hold-out evaluation drivers.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cvxattn/dataio.hpp"
#include "cvxattn/model.hpp"

namespace cvxattn {

struct TrainConfig {
    double radius = 10.0;             // nuclear-norm ball radius R
    std::size_t m = 3;                // random feature dimension
    double gamma = 1.0;               // RBF width
    double eta = 0.01;                // learning rate
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::size_t batches_per_epoch = 128;
    LossKind loss = LossKind::hinge;
    std::uint64_t seed = 0;
    std::size_t classes = 4;
    PatchSpec spec{6, 10, 10};
    std::size_t variance_meta = 0;    // carried for preset fidelity, unused

    void validate() const;
};

/// Named hyperparameter sets: "tap", "swipe" (default sizing) and
/// "tap-appxB", "swipe-appxB" (tuned configurations).
TrainConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;            // full training set, attention recomputed
    double train_accuracy = 0.0;
    double nuclear_norm = 0.0;    // after the epoch's projection
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    double final_nuclear_norm = 0.0;
    std::size_t epochs_to_convergence = 0;   // first epoch at 100% train accuracy, 0 if never
    double wall_seconds = 0.0;
};

struct TrainResult {
    ModelBundle bundle;
    TrainReport report;
};

/// Deterministic given config.seed.
TrainResult train(const Dataset& data, const TrainConfig& config);

/// counts[true * K + predicted]
struct Confusion {
    std::size_t classes = 0;
    std::vector<std::size_t> counts;

    explicit Confusion(std::size_t k = 0) : classes(k), counts(k * k, 0) {}
    std::size_t& at(std::size_t truth, std::size_t predicted) { return counts[truth * classes + predicted]; }
    std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
    std::size_t total() const;
    double accuracy() const;
};

/// Unweighted mean of per-class F1; a class with P + R = 0 contributes 0.
double macro_f1(const Confusion& confusion);

Confusion evaluate(const ModelBundle& bundle, const Dataset& data);

/// Fold index per sample. Each class is shuffled and dealt round-robin, so
/// per-class fold sizes differ by at most one.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, std::uint64_t seed);

struct FoldResult {
    std::size_t fold = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::size_t test_size = 0;
};

struct KFoldReport {
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;    // population
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
};

/// Fold f trains from scratch with seed config.seed + f. `jobs` > 1 runs
/// folds on worker threads; results are assembled by fold index.
KFoldReport kfold_evaluate(const Dataset& data, const TrainConfig& config, std::size_t folds,
                           std::size_t jobs = 1);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Per class: round(0.6 n) train, round(0.2 n) validation, rest test.
SplitIndices stratified_split(const Dataset& data, std::uint64_t seed);

struct SplitReport {
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
    std::size_t test_size = 0;
    double validation_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_macro_f1 = 0.0;
};

SplitReport split_evaluate(const Dataset& data, const TrainConfig& config);

} // namespace cvxattn
