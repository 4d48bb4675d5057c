#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcgc/graph.hpp"
#include "mcgc/model.hpp"
#include "mcgc/numerics.hpp"

namespace mcgc {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 100;
    int folds = 10;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;

    /// learning_rate must be finite and >= 0 (zero is legal and leaves the
    /// parameters untouched — handy for smoke tests); epochs >= 1; folds >= 2.
    void validate() const;
};

// Adam constants; fixed, not searched.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// First/second-moment accumulators plus the shared step counter.
struct AdamState {
    ParamStore m;
    ParamStore v;
    long step = 0;
};

/// Standard bias-corrected Adam update, applied tensor by tensor.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               double learning_rate);

/// Plain gradient descent: p -= lr * g.
void sgd_step(ParamStore& params, const ParamStore& grads, double learning_rate);

struct EpochStats {
    double train_loss = 0.0;     // mean per-graph loss over the epoch
    double train_accuracy = 0.0; // running accuracy of the pre-update forwards
    double wall_seconds = 0.0;   // excluded from JSON output (nondeterministic)
};

struct FoldResult {
    std::vector<EpochStats> epochs;
    double test_accuracy = 0.0;
    std::size_t test_size = 0;
};

struct Metrics {
    std::vector<EpochStats> epochs;     // filled by train()
    std::vector<FoldResult> folds;      // filled by kfold_cv()
    double mean_accuracy = 0.0;         // across folds
    double std_accuracy = 0.0;          // population standard deviation
    std::vector<std::string> warnings;  // e.g. stratification notes
};

/// Fraction of positions where the two label lists agree.
/// Length mismatch or empty lists -> ValidationError.
double evaluate_accuracy(const std::vector<int>& predictions,
                         const std::vector<int>& truth);

/// Fills cluster_sizes (when empty) from the dataset's largest graph,
/// validates the result, and checks that feature widths are uniform.
PoolingConfig resolve_config(const PoolingConfig& pcfg, const GraphDataset& ds);

/// Class index with the highest probability; ties break to the lowest index.
int predict_label(const Matrix& probs);

struct TrainResult {
    ParamStore params;
    Metrics metrics;
};

/// Seeded-shuffled full passes, one optimizer step per graph. Deterministic
/// given the seed. A non-finite loss or gradient raises TrainingError naming
/// the epoch and graph index.
TrainResult train(const GraphDataset& ds, const TrainConfig& cfg,
                  const PoolingConfig& pcfg);

/// Stratified k-fold cross-validation: per-class seeded shuffle, dealt
/// round-robin, so test folds are disjoint, exhaustive, and class-balanced
/// within one graph. Each fold trains a fresh model with seed + fold index.
/// A class absent from some training fold adds a warning; a class with a
/// single member (which would leave one fold untrained on it) is an error.
Metrics kfold_cv(const GraphDataset& ds, const TrainConfig& cfg,
                 const PoolingConfig& pcfg);

/// Test-fold index assignment, exposed for partition property tests.
/// Returns fold_of[i] in [0, folds) for every graph index i.
std::vector<int> stratified_folds(const GraphDataset& ds, int folds,
                                  std::uint64_t seed);

/// Machine-readable metrics. Timing is deliberately omitted so reruns with
/// the same seed produce byte-identical files.
std::string metrics_to_json(const Metrics& metrics);
void write_metrics_json(const Metrics& metrics, const std::string& path);

/// Aligned human-readable summary table.
std::string metrics_table(const Metrics& metrics);

/// Per-epoch curves as CSV (fold,epoch,train_loss,train_accuracy) for plots.
void write_epoch_csv(const Metrics& metrics, const std::string& path);

} // namespace mcgc
