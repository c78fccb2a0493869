#pragma once

#include <cstdint>
#include <vector>

#include "afdc/tensor.hpp"

namespace afdc {

// ---------------------------------------------------------------------------
// Convolution, 3x3 kernel, pad 1, stride 1 (cross-correlation, no kernel
// flip). X: (N, Cin, H, W), W: (Cout, Cin, 3, 3), b: (Cout) -> (N, Cout, H, W).
// ---------------------------------------------------------------------------

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b);

struct ConvGrads {
    Tensor dx;
    Tensor dw;
    Tensor db;
};
ConvGrads conv2d_bwd(const Tensor& dy, const Tensor& x, const Tensor& w);

// ---------------------------------------------------------------------------
// Fully connected. X: (N, in), W: (out, in), b: (out) -> Y = X * W^T + b.
// ---------------------------------------------------------------------------

Tensor fc_fwd(const Tensor& x, const Tensor& w, const Tensor& b);

struct FcGrads {
    Tensor dx;
    Tensor dw;
    Tensor db;
};
FcGrads fc_bwd(const Tensor& dy, const Tensor& x, const Tensor& w);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2, disjoint windows; ties go to the first element
// in row-major window order. Backward routes each upstream gradient to the
// recorded argmax position.
// ---------------------------------------------------------------------------

struct PoolResult {
    Tensor y;                          // (N, C, H/2, W/2)
    std::vector<std::uint32_t> argmax; // flat index into x.data() per output
};
PoolResult maxpool2x2_fwd(const Tensor& x);
Tensor maxpool2x2_bwd(const Tensor& dy, const std::vector<std::uint32_t>& argmax,
                      const std::vector<std::size_t>& input_shape);

// ---------------------------------------------------------------------------
// ReLU; the subgradient at 0 is taken as 0.
// ---------------------------------------------------------------------------

Tensor relu_fwd(const Tensor& x);
Tensor relu_bwd(const Tensor& dy, const Tensor& x);

// ---------------------------------------------------------------------------
// Batch normalization over (N, C, H, W) or (N, C); statistics per channel.
// Train mode normalizes by biased batch moments (eps = 1e-5), then updates
// the running statistics with momentum 0.1. Infer mode uses running stats.
// ---------------------------------------------------------------------------

struct BatchNormParams {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;

    static BatchNormParams init(std::size_t channels);
};

struct BatchNormCache {
    Tensor x_hat;            // normalized input, shaped like x
    std::vector<double> inv_std; // per channel
};

enum class NnMode { Train, Infer };

Tensor batchnorm_fwd(const Tensor& x, BatchNormParams& params, NnMode mode,
                     BatchNormCache* cache = nullptr, double momentum = 0.1,
                     double eps = 1e-5);

struct BatchNormGrads {
    Tensor dx;
    Tensor dgamma;
    Tensor dbeta;
};
BatchNormGrads batchnorm_bwd(const Tensor& dy, const BatchNormCache& cache, const Tensor& gamma);

// ---------------------------------------------------------------------------
// Mean squared error over (N, 1) predictions: loss = mean((pred - target)^2),
// dpred = 2/N * (pred - target).
// ---------------------------------------------------------------------------

struct MseResult {
    double loss = 0.0;
    Tensor dpred;
};
MseResult mse_loss(const Tensor& pred, const Tensor& target);

// ---------------------------------------------------------------------------
// Optimizers. Adam keeps per-parameter moment tensors and a step counter.
// ---------------------------------------------------------------------------

struct AdamState {
    Tensor m;
    Tensor v;
    std::uint64_t t = 0;

    static AdamState init(const Tensor& param);
};

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config);
void sgd_step(Tensor& param, const Tensor& grad, double lr);

} // namespace afdc
