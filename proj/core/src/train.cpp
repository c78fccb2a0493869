#include "afdc/train.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

namespace afdc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor assemble_batch(const Dataset& dataset, const std::vector<std::size_t>& indices,
                      std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t h = dataset.grid.height, w = dataset.grid.width;
    Tensor x({n, 1, h, w});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& img = dataset.samples[indices[begin + i]].image;
        double* dst = x.data() + i * h * w;
        for (std::size_t p = 0; p < h * w; ++p) dst[p] = img.pixels[p] ? 1.0 : 0.0;
    }
    return x;
}

Tensor assemble_targets(const Dataset& dataset, const std::vector<std::size_t>& indices,
                        std::size_t begin, std::size_t end, const LabelStats& stats) {
    const std::size_t n = end - begin;
    Tensor y({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        const double v = dataset.target_value(dataset.samples[indices[begin + i]]);
        y[i] = (v - stats.mean) / stats.std_dev;
    }
    return y;
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
    if (!(lr > 0.0) && lr != 0.0) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
    if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
}

double split_mse_normalized(Model& model, const Dataset& dataset, SplitKind split,
                            std::size_t batch_size) {
    const auto indices = dataset.split_indices(split);
    if (indices.empty())
        throw Error(ErrorCode::EmptySplit, std::string(split_name(split)) + " split is empty");
    double sum_sq = 0.0;
    for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        Tensor x = assemble_batch(dataset, indices, begin, end);
        Tensor y = assemble_targets(dataset, indices, begin, end, dataset.stats);
        Tensor pred = model_forward(model, x, NnMode::Infer);
        for (std::size_t i = 0; i < pred.numel(); ++i) {
            const double d = pred[i] - y[i];
            sum_sq += d * d;
        }
    }
    return sum_sq / static_cast<double>(indices.size());
}

TrainResult train(const Model& initial, const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    auto train_idx = dataset.split_indices(SplitKind::Train);
    const auto valid_idx = dataset.split_indices(SplitKind::Valid);
    if (train_idx.empty()) throw Error(ErrorCode::EmptySplit, "train split is empty");
    if (valid_idx.empty()) throw Error(ErrorCode::EmptySplit, "valid split is empty");

    TrainResult result;
    result.model = initial;
    result.model.label_mean = dataset.stats.mean;
    result.model.label_std = dataset.stats.std_dev;

    std::vector<AdamState> states;
    {
        auto params = result.model.parameters();
        states.reserve(params.size());
        for (auto* p : params) states.push_back(AdamState::init(*p));
    }
    AdamConfig adam;
    adam.lr = config.lr;

    std::mt19937_64 shuffle_rng(config.seed);
    double best_valid = 0.0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = Clock::now();
        if (config.shuffle) {
            for (std::size_t i = train_idx.size(); i > 1; --i)
                std::swap(train_idx[i - 1], train_idx[shuffle_rng() % i]);
        }

        double batch_loss_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size) {
            const std::size_t end = std::min(train_idx.size(), begin + config.batch_size);
            Tensor x = assemble_batch(dataset, train_idx, begin, end);
            Tensor y = assemble_targets(dataset, train_idx, begin, end, dataset.stats);

            ForwardCache cache;
            Tensor pred = model_forward(result.model, x, NnMode::Train, &cache);
            MseResult loss = mse_loss(pred, y);
            batch_loss_sum += loss.loss;
            ++batch_count;

            auto grads = model_backward(result.model, cache, loss.dpred);
            auto params = result.model.parameters();
            for (std::size_t p = 0; p < params.size(); ++p) {
                if (config.optimizer == OptimizerKind::Adam)
                    adam_step(*params[p], grads[p], states[p], adam);
                else
                    sgd_step(*params[p], grads[p], config.lr);
            }
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_mse = batch_loss_sum / static_cast<double>(batch_count);
        m.valid_mse = split_mse_normalized(result.model, dataset, SplitKind::Valid, config.batch_size);
        m.seconds = seconds_since(t0);
        result.history.push_back(m);

        if (result.best_epoch == 0 || m.valid_mse < best_valid) {
            best_valid = m.valid_mse;
            result.best_epoch = epoch;
            result.best_model = result.model;
        }
    }
    return result;
}

EvalResult evaluate(Model& model, const Dataset& dataset, SplitKind split,
                    std::size_t batch_size) {
    const auto indices = dataset.split_indices(split);
    if (indices.empty())
        throw Error(ErrorCode::EmptySplit, std::string(split_name(split)) + " split is empty");

    EvalResult res;
    res.pairs.reserve(indices.size());
    double sum_sq = 0.0;
    for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        Tensor x = assemble_batch(dataset, indices, begin, end);
        Tensor pred = model_forward(model, x, NnMode::Infer);
        for (std::size_t i = 0; i < pred.numel(); ++i) {
            const double truth = dataset.target_value(dataset.samples[indices[begin + i]]);
            const double value = pred[i] * model.label_std + model.label_mean;
            res.pairs.emplace_back(truth, value);
            const double d = value - truth;
            sum_sq += d * d;
        }
    }
    res.mse = sum_sq / static_cast<double>(indices.size());
    return res;
}

TimingReport time_comparison(Model& model, const std::vector<TimingCase>& cases,
                             const GridSpec& grid, const OracleConfig& oracle) {
    if (cases.size() < 10)
        throw Error(ErrorCode::InvalidArgument, "need at least 10 samples to time");

    // Shared preprocessing, outside both timed regions.
    const std::size_t n = cases.size();
    Tensor x({n, 1, grid.height, grid.width});
    for (std::size_t i = 0; i < n; ++i) {
        PosedSection sec = pose(cases[i].geometry, cases[i].aoa_deg, cases[i].clearance);
        BinaryImage img = close3x3(rasterize(sec, grid, true));
        double* dst = x.data() + i * grid.height * grid.width;
        for (std::size_t p = 0; p < img.pixels.size(); ++p) dst[p] = img.pixels[p] ? 1.0 : 0.0;
    }

    TimingReport report;
    report.sample_count = n;

    // Warm-up passes touch caches and page in weights before timing.
    (void)model_forward(model, x, NnMode::Infer);
    const auto nn_start = Clock::now();
    (void)model_forward(model, x, NnMode::Infer);
    report.nn_seconds_per_sample = seconds_since(nn_start) / static_cast<double>(n);

    OracleConfig oc = oracle;
    oc.clearance = cases[0].clearance;
    (void)label(cases[0].geometry, cases[0].aoa_deg, oc);
    const auto oracle_start = Clock::now();
    for (const auto& c : cases) {
        oc.clearance = c.clearance;
        (void)label(c.geometry, c.aoa_deg, oc);
    }
    report.oracle_seconds_per_sample = seconds_since(oracle_start) / static_cast<double>(n);

    report.hardware_note = std::to_string(std::thread::hardware_concurrency()) +
                           " hardware threads, " +
#if defined(__clang__)
                           "clang"
#elif defined(__GNUC__)
                           "gcc"
#else
                           "unknown compiler"
#endif
                           + std::string(", ") + std::to_string(oracle.panels) + " oracle panels";
    return report;
}

std::string format_g17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_metrics_csv(const MetricsHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
    out << "epoch,train_mse,valid_mse,seconds\n";
    for (const auto& m : history)
        out << m.epoch << "," << format_g17(m.train_mse) << "," << format_g17(m.valid_mse)
            << "," << format_g17(m.seconds) << "\n";
}

} // namespace afdc
