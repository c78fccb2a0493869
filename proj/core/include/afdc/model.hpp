#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afdc/nn.hpp"
#include "afdc/tensor.hpp"

namespace afdc {

/// Architecture description. Each conv block is conv3x3(pad 1) ->
/// [batchnorm] -> ReLU -> maxpool2x2; the head is FC -> ReLU -> FC(1).
struct ModelConfig {
    std::vector<std::size_t> conv_blocks = {8, 16}; // output channels per block
    std::size_t fc_hidden = 128;
    std::size_t input_channels = 1;
    std::size_t input_height = 128;
    std::size_t input_width = 128;
    bool use_batchnorm = true;

    void validate() const;
    std::size_t spatial_after_blocks() const { return input_height >> conv_blocks.size(); }
    std::size_t flatten_width() const {
        return conv_blocks.back() * (input_height >> conv_blocks.size()) *
               (input_width >> conv_blocks.size());
    }
};

struct ConvBlock {
    Tensor w; // (out, in, 3, 3)
    Tensor b; // (out)
    BatchNormParams bn;
};

/// The regression network plus the z-score statistics of its training labels.
/// Outputs live in normalized label space; predict_denormalized maps back.
struct Model {
    ModelConfig config;
    std::vector<ConvBlock> blocks;
    Tensor fc1_w, fc1_b;
    Tensor fc2_w, fc2_b;
    double label_mean = 0.0;
    double label_std = 1.0;

    /// Trainable parameters in the fixed file order (batch-norm running
    /// statistics are excluded; they are state, not parameters).
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;
};

/// Deterministic He-uniform initialization from the seed.
Model build_model(const ModelConfig& config, std::uint64_t seed);

/// Per-layer activations retained for the backward pass.
struct ForwardCache {
    Tensor input;
    struct BlockCache {
        Tensor conv_in;
        BatchNormCache bn;
        Tensor act; // ReLU output; its positive-support mask drives relu_bwd
        std::vector<std::uint32_t> pool_argmax;
        std::vector<std::size_t> pool_in_shape;
    };
    std::vector<BlockCache> blocks;
    Tensor flat;
    Tensor fc1_out;
    Tensor fc1_act;
};

/// Forward pass; X is (N, C, H, W) matching the config. Train mode uses batch
/// statistics (and updates running stats); infer mode is a pure function of
/// (weights, input). The cache is required for backward and may be null.
Tensor model_forward(Model& model, const Tensor& x, NnMode mode, ForwardCache* cache = nullptr);

/// Gradients aligned with Model::parameters(). d_output is dLoss/dPred, (N, 1).
std::vector<Tensor> model_backward(const Model& model, const ForwardCache& cache,
                                   const Tensor& d_output);

/// Forward then affine de-normalization with the stored label stats.
std::vector<double> predict_denormalized(Model& model, const Tensor& x);

/// Binary weight file: magic "AFW1", format version, config block, label
/// stats, then each tensor (rank, dims, row-major f64 payload), all
/// little-endian, in fixed layer order including running statistics.
void save_weights(const Model& model, const std::string& path);
Model load_weights(const std::string& path);

} // namespace afdc
