#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "afdc/dataset.hpp"
#include "afdc/model.hpp"

namespace afdc {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
    std::size_t batch_size = 50;
    double lr = 5e-5;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    bool shuffle = true;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;   // 1-based
    double train_mse = 0.0;  // mean of the per-batch training losses
    double valid_mse = 0.0;  // infer mode over the full validation split
    double seconds = 0.0;    // wall clock for the epoch
};

using MetricsHistory = std::vector<EpochMetrics>;

struct TrainResult {
    Model model;      // weights after the last epoch
    Model best_model; // weights at the best validation epoch
    std::size_t best_epoch = 0; // 1-based
    MetricsHistory history;
};

/// Mini-batch training in normalized label space. The dataset's train-split
/// stats are copied into the model before the first step; shuffling uses its
/// own seeded generator so runs with equal seeds are bitwise identical.
TrainResult train(const Model& initial, const Dataset& dataset, const TrainConfig& config);

/// Mean squared error of the model over one split in normalized label space;
/// pure function of (weights, dataset, split).
double split_mse_normalized(Model& model, const Dataset& dataset, SplitKind split,
                            std::size_t batch_size = 50);

struct EvalResult {
    double mse = 0.0; // in denormalized target units
    std::vector<std::pair<double, double>> pairs; // (truth, prediction), sample order
};

/// Infer-mode evaluation; truth and predictions in physical target units.
EvalResult evaluate(Model& model, const Dataset& dataset, SplitKind split,
                    std::size_t batch_size = 50);

struct TimingCase {
    AirfoilGeometry geometry; // normalized
    double aoa_deg = 0.0;
    double clearance = 0.3;
};

struct TimingReport {
    double nn_seconds_per_sample = 0.0;
    double oracle_seconds_per_sample = 0.0;
    std::size_t sample_count = 0;
    std::string hardware_note;
};

/// Wall-clock comparison of batched model inference against per-sample
/// oracle labeling. Rasterization happens outside both timed regions; a
/// warm-up pass on each side is excluded.
TimingReport time_comparison(Model& model, const std::vector<TimingCase>& cases,
                             const GridSpec& grid, const OracleConfig& oracle);

/// CSV schema: epoch,train_mse,valid_mse,seconds with LF endings and
/// 17-significant-digit reals.
void write_metrics_csv(const MetricsHistory& history, const std::string& path);

/// Formats with 17 significant digits, '.' decimal, locale-independent.
std::string format_g17(double v);

} // namespace afdc
