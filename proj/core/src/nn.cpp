#include "afdc/nn.hpp"

#include <cmath>
#include <cstring>

#include "afdc/parallel.hpp"

namespace afdc {

namespace {

void require_conv_shapes(const Tensor& x, const Tensor& w, const Tensor* b) {
    require_rank(x, 4, "conv2d input");
    require_rank(w, 4, "conv2d kernel");
    if (w.dim(2) != 3 || w.dim(3) != 3)
        throw Error(ErrorCode::ShapeMismatch, "conv2d kernel must be 3x3");
    if (w.dim(1) != x.dim(1))
        throw Error(ErrorCode::ShapeMismatch, "conv2d kernel channel count does not match input");
    if (b) require_shape(*b, {w.dim(0)}, "conv2d bias");
}

} // namespace

namespace {

// Fixed-order dot product with eight independent accumulators; the compiler
// turns the strided partial sums into vector FMAs without touching the
// (deterministic) summation order.
double dot(const double* a, const double* b, std::size_t n) {
    double acc[8] = {};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
           tail;
}

// One plane of 3x3 cross-correlation with zero padding:
//   Assign:  dst[r][c]  = bias + sum_{m,k} w9[m*3+k] * src[r+m-1][c+k-1]
//   !Assign: dst[r][c] +=        sum_{m,k} w9[m*3+k] * src[r+m-1][c+k-1]
// The hot middle loop does all nine taps in one pass.
template <bool Assign>
void correlate3x3(double* dst, const double* src, const double* w9, std::size_t h,
                  std::size_t wd, double bias) {
    const double w00 = w9[0], w01 = w9[1], w02 = w9[2];
    const double w10 = w9[3], w11 = w9[4], w12 = w9[5];
    const double w20 = w9[6], w21 = w9[7], w22 = w9[8];
    for (std::size_t r = 0; r < h; ++r) {
        const double* x0 = r > 0 ? src + (r - 1) * wd : nullptr;
        const double* x1 = src + r * wd;
        const double* x2 = r + 1 < h ? src + (r + 1) * wd : nullptr;
        double* out = dst + r * wd;

        auto tap = [&](std::size_t c) {
            double acc = w11 * x1[c];
            if (c > 0) acc += w10 * x1[c - 1];
            if (c + 1 < wd) acc += w12 * x1[c + 1];
            if (x0) {
                acc += w01 * x0[c];
                if (c > 0) acc += w00 * x0[c - 1];
                if (c + 1 < wd) acc += w02 * x0[c + 1];
            }
            if (x2) {
                acc += w21 * x2[c];
                if (c > 0) acc += w20 * x2[c - 1];
                if (c + 1 < wd) acc += w22 * x2[c + 1];
            }
            return acc;
        };
        auto emit = [&](std::size_t c, double acc) {
            if constexpr (Assign)
                out[c] = bias + acc;
            else
                out[c] += acc;
        };

        emit(0, tap(0));
        if (wd < 2) continue;
        if (x0 && x2) {
            for (std::size_t c = 1; c + 1 < wd; ++c)
                emit(c, w00 * x0[c - 1] + w01 * x0[c] + w02 * x0[c + 1] +
                        w10 * x1[c - 1] + w11 * x1[c] + w12 * x1[c + 1] +
                        w20 * x2[c - 1] + w21 * x2[c] + w22 * x2[c + 1]);
        } else {
            for (std::size_t c = 1; c + 1 < wd; ++c) emit(c, tap(c));
        }
        emit(wd - 1, tap(wd - 1));
    }
}

} // namespace

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_conv_shapes(x, w, &b);
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(0);

    Tensor y({n, cout, h, wd});
    // One task per (image, output channel); each output element is reduced in
    // a fixed order, so the result does not depend on the worker count.
    parallel_for(n * cout, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t task = lo; task < hi; ++task) {
            const std::size_t img = task / cout;
            const std::size_t oc = task % cout;
            double* yp = y.data() + ((img * cout + oc) * h) * wd;
            for (std::size_t ic = 0; ic < cin; ++ic) {
                const double* xp = x.data() + ((img * cin + ic) * h) * wd;
                const double* wp = w.data() + ((oc * cin + ic) * 3) * 3;
                if (ic == 0)
                    correlate3x3<true>(yp, xp, wp, h, wd, b[oc]);
                else
                    correlate3x3<false>(yp, xp, wp, h, wd, 0.0);
            }
        }
    });
    debug_check_finite(y, "conv2d_fwd");
    return y;
}

ConvGrads conv2d_bwd(const Tensor& dy, const Tensor& x, const Tensor& w) {
    require_conv_shapes(x, w, nullptr);
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(0);
    require_shape(dy, {n, cout, h, wd}, "conv2d upstream gradient");

    ConvGrads g{Tensor({n, cin, h, wd}), Tensor({cout, cin, 3, 3}), Tensor({cout})};

    // db and dW: one task per output channel keeps every reduction on a
    // single worker in batch-major order. All nine dW taps of a plane pair
    // are reduced in one pass while both planes are cache resident.
    parallel_for(cout, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t oc = lo; oc < hi; ++oc) {
            double db = 0.0;
            for (std::size_t img = 0; img < n; ++img) {
                const double* dyp = dy.data() + ((img * cout + oc) * h) * wd;
                for (std::size_t i = 0; i < h * wd; ++i) db += dyp[i];
            }
            g.db[oc] = db;

            for (std::size_t ic = 0; ic < cin; ++ic) {
                double acc[9] = {};
                for (std::size_t img = 0; img < n; ++img) {
                    const double* dyp = dy.data() + ((img * cout + oc) * h) * wd;
                    const double* xp = x.data() + ((img * cin + ic) * h) * wd;
                    for (std::size_t m = 0; m < 3; ++m) {
                        for (std::size_t k = 0; k < 3; ++k) {
                            const std::size_t r0 = (m == 0) ? 1 : 0;
                            const std::size_t r1 = (m == 2) ? h - 1 : h;
                            const std::size_t c0 = (k == 0) ? 1 : 0;
                            const std::size_t c1 = (k == 2) ? wd - 1 : wd;
                            double tap = 0.0;
                            for (std::size_t r = r0; r < r1; ++r)
                                tap += dot(dyp + r * wd + c0, xp + (r + m - 1) * wd + c0 + k - 1,
                                           c1 - c0);
                            acc[m * 3 + k] += tap;
                        }
                    }
                }
                double* dwp = g.dw.data() + ((oc * cin + ic) * 3) * 3;
                for (int t = 0; t < 9; ++t) dwp[t] = acc[t];
            }
        }
    });

    // dX = correlation of dY with the flipped kernel; one task per
    // (image, input channel).
    parallel_for(n * cin, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t task = lo; task < hi; ++task) {
            const std::size_t img = task / cin;
            const std::size_t ic = task % cin;
            double* dxp = g.dx.data() + ((img * cin + ic) * h) * wd;
            for (std::size_t oc = 0; oc < cout; ++oc) {
                const double* dyp = dy.data() + ((img * cout + oc) * h) * wd;
                const double* wp = w.data() + ((oc * cin + ic) * 3) * 3;
                const double flipped[9] = {wp[8], wp[7], wp[6], wp[5], wp[4],
                                           wp[3], wp[2], wp[1], wp[0]};
                if (oc == 0)
                    correlate3x3<true>(dxp, dyp, flipped, h, wd, 0.0);
                else
                    correlate3x3<false>(dxp, dyp, flipped, h, wd, 0.0);
            }
        }
    });
    return g;
}

Tensor fc_fwd(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank(x, 2, "fc input");
    require_rank(w, 2, "fc weights");
    if (w.dim(1) != x.dim(1))
        throw Error(ErrorCode::ShapeMismatch, "fc weight width does not match input");
    require_shape(b, {w.dim(0)}, "fc bias");
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);

    Tensor y({n, out});
    // Output rows are processed in blocks so a block of W stays cache
    // resident across the whole batch.
    constexpr std::size_t kBlock = 8;
    const std::size_t blocks = (out + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t blk = lo; blk < hi; ++blk) {
            const std::size_t o0 = blk * kBlock;
            const std::size_t o1 = std::min(out, o0 + kBlock);
            for (std::size_t r = 0; r < n; ++r) {
                const double* xp = x.data() + r * in;
                double* yp = y.data() + r * out;
                for (std::size_t o = o0; o < o1; ++o)
                    yp[o] = b[o] + dot(xp, w.data() + o * in, in);
            }
        }
    });
    debug_check_finite(y, "fc_fwd");
    return y;
}

FcGrads fc_bwd(const Tensor& dy, const Tensor& x, const Tensor& w) {
    require_rank(dy, 2, "fc upstream gradient");
    require_rank(x, 2, "fc input");
    const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
    require_shape(dy, {n, out}, "fc upstream gradient");

    FcGrads g{Tensor({n, in}), Tensor({out, in}), Tensor({out})};
    // dX rows accumulate over W-row blocks that stay cache resident.
    constexpr std::size_t kBlock = 8;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t o0 = 0; o0 < out; o0 += kBlock) {
            const std::size_t o1 = std::min(out, o0 + kBlock);
            for (std::size_t r = lo; r < hi; ++r) {
                const double* dyp = dy.data() + r * out;
                double* dxp = g.dx.data() + r * in;
                for (std::size_t o = o0; o < o1; ++o) {
                    const double dv = dyp[o];
                    if (dv == 0.0) continue;
                    const double* wp = w.data() + o * in;
                    for (std::size_t i = 0; i < in; ++i) dxp[i] += dv * wp[i];
                }
            }
        }
    });
    const std::size_t blocks = (out + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t blk = lo; blk < hi; ++blk) {
            const std::size_t o0 = blk * kBlock;
            const std::size_t o1 = std::min(out, o0 + kBlock);
            for (std::size_t r = 0; r < n; ++r) {
                const double* dyp = dy.data() + r * out;
                const double* xp = x.data() + r * in;
                for (std::size_t o = o0; o < o1; ++o) {
                    const double dv = dyp[o];
                    if (dv == 0.0) continue;
                    double* dwp = g.dw.data() + o * in;
                    for (std::size_t i = 0; i < in; ++i) dwp[i] += dv * xp[i];
                }
            }
            for (std::size_t o = o0; o < o1; ++o) {
                double db = 0.0;
                for (std::size_t r = 0; r < n; ++r) db += dy.data()[r * out + o];
                g.db[o] = db;
            }
        }
    });
    return g;
}

PoolResult maxpool2x2_fwd(const Tensor& x) {
    require_rank(x, 4, "maxpool input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw Error(ErrorCode::OddSpatialDim, "maxpool requires even spatial dims");

    PoolResult res{Tensor({n, c, h / 2, w / 2}), {}};
    res.argmax.resize(res.y.numel());
    const std::size_t oh = h / 2, ow = w / 2;
    parallel_for(n * c, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t plane = lo; plane < hi; ++plane) {
            const std::size_t base = plane * h * w;
            const std::size_t obase = plane * oh * ow;
            for (std::size_t r = 0; r < oh; ++r) {
                for (std::size_t col = 0; col < ow; ++col) {
                    const std::size_t i00 = base + (2 * r) * w + 2 * col;
                    const std::size_t candidates[4] = {i00, i00 + 1, i00 + w, i00 + w + 1};
                    std::size_t best = candidates[0];
                    double bv = x[best];
                    for (int k = 1; k < 4; ++k) {
                        if (x[candidates[k]] > bv) { // strict: ties keep the earliest
                            bv = x[candidates[k]];
                            best = candidates[k];
                        }
                    }
                    res.y[obase + r * ow + col] = bv;
                    res.argmax[obase + r * ow + col] = static_cast<std::uint32_t>(best);
                }
            }
        }
    });
    return res;
}

Tensor maxpool2x2_bwd(const Tensor& dy, const std::vector<std::uint32_t>& argmax,
                      const std::vector<std::size_t>& input_shape) {
    if (dy.numel() != argmax.size())
        throw Error(ErrorCode::ShapeMismatch, "maxpool argmax table does not match gradient");
    Tensor dx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i)
        dx[argmax[i]] += dy[i];
    return dx;
}

Tensor relu_fwd(const Tensor& x) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.numel(); ++i)
        if (y[i] < 0.0) y[i] = 0.0;
    return y;
}

Tensor relu_bwd(const Tensor& dy, const Tensor& x) {
    if (!dy.same_shape(x))
        throw Error(ErrorCode::ShapeMismatch, "relu gradient shape mismatch");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.numel(); ++i)
        if (x[i] <= 0.0) dx[i] = 0.0;
    return dx;
}

BatchNormParams BatchNormParams::init(std::size_t channels) {
    BatchNormParams p;
    p.gamma = Tensor::full({channels}, 1.0);
    p.beta = Tensor({channels});
    p.running_mean = Tensor({channels});
    p.running_var = Tensor::full({channels}, 1.0);
    return p;
}

namespace {

struct BnLayout {
    std::size_t n, c, spatial; // per-channel element count = n * spatial
};

BnLayout bn_layout(const Tensor& x) {
    if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)};
    if (x.rank() == 2) return {x.dim(0), x.dim(1), 1};
    throw Error(ErrorCode::ShapeMismatch, "batchnorm expects rank 2 or 4 input");
}

} // namespace

Tensor batchnorm_fwd(const Tensor& x, BatchNormParams& params, NnMode mode,
                     BatchNormCache* cache, double momentum, double eps) {
    const BnLayout l = bn_layout(x);
    require_shape(params.gamma, {l.c}, "batchnorm gamma");

    Tensor y = Tensor(x.shape());
    if (mode == NnMode::Infer) {
        parallel_for(l.n * l.c, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t plane = lo; plane < hi; ++plane) {
                const std::size_t ch = plane % l.c;
                const double inv = 1.0 / std::sqrt(params.running_var[ch] + eps);
                const double g = params.gamma[ch], bt = params.beta[ch];
                const double mu = params.running_mean[ch];
                const double* xp = x.data() + plane * l.spatial;
                double* yp = y.data() + plane * l.spatial;
                for (std::size_t s = 0; s < l.spatial; ++s)
                    yp[s] = g * ((xp[s] - mu) * inv) + bt;
            }
        });
        debug_check_finite(y, "batchnorm_fwd");
        return y;
    }

    const std::size_t m = l.n * l.spatial;
    if (m < 2)
        throw Error(ErrorCode::BatchTooSmall, "batchnorm train mode needs >= 2 values per channel");

    if (cache) {
        cache->x_hat = Tensor(x.shape());
        cache->inv_std.assign(l.c, 0.0);
    }
    // Per-channel reductions run on one worker each, in batch-major order.
    parallel_for(l.c, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ch = lo; ch < hi; ++ch) {
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t img = 0; img < l.n; ++img) {
                const double* xp = x.data() + (img * l.c + ch) * l.spatial;
                double acc[4] = {}, acc_sq[4] = {};
                std::size_t s = 0;
                for (; s + 4 <= l.spatial; s += 4)
                    for (std::size_t k = 0; k < 4; ++k) {
                        acc[k] += xp[s + k];
                        acc_sq[k] += xp[s + k] * xp[s + k];
                    }
                for (; s < l.spatial; ++s) {
                    acc[0] += xp[s];
                    acc_sq[0] += xp[s] * xp[s];
                }
                sum += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                sum_sq += (acc_sq[0] + acc_sq[1]) + (acc_sq[2] + acc_sq[3]);
            }
            const double mean = sum / static_cast<double>(m);
            double var = sum_sq / static_cast<double>(m) - mean * mean;
            if (var < 0.0) var = 0.0; // rounding guard

            const double inv = 1.0 / std::sqrt(var + eps);
            const double g = params.gamma[ch], bt = params.beta[ch];
            for (std::size_t img = 0; img < l.n; ++img) {
                const std::size_t base = (img * l.c + ch) * l.spatial;
                const double* xp = x.data() + base;
                double* yp = y.data() + base;
                if (cache) {
                    double* xh = cache->x_hat.data() + base;
                    for (std::size_t s = 0; s < l.spatial; ++s) {
                        xh[s] = (xp[s] - mean) * inv;
                        yp[s] = g * xh[s] + bt;
                    }
                } else {
                    for (std::size_t s = 0; s < l.spatial; ++s)
                        yp[s] = g * ((xp[s] - mean) * inv) + bt;
                }
            }
            if (cache) cache->inv_std[ch] = inv;

            params.running_mean[ch] = (1.0 - momentum) * params.running_mean[ch] + momentum * mean;
            params.running_var[ch] = (1.0 - momentum) * params.running_var[ch] + momentum * var;
        }
    });
    debug_check_finite(y, "batchnorm_fwd");
    return y;
}

BatchNormGrads batchnorm_bwd(const Tensor& dy, const BatchNormCache& cache, const Tensor& gamma) {
    const BnLayout l = bn_layout(dy);
    if (!dy.same_shape(cache.x_hat))
        throw Error(ErrorCode::ShapeMismatch, "batchnorm gradient shape mismatch");

    BatchNormGrads g{Tensor(dy.shape()), Tensor({l.c}), Tensor({l.c})};
    const double m = static_cast<double>(l.n * l.spatial);
    parallel_for(l.c, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ch = lo; ch < hi; ++ch) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t img = 0; img < l.n; ++img) {
                const std::size_t base = (img * l.c + ch) * l.spatial;
                const double* dyp = dy.data() + base;
                const double* xh = cache.x_hat.data() + base;
                double acc[4] = {}, acc_xh[4] = {};
                std::size_t s = 0;
                for (; s + 4 <= l.spatial; s += 4)
                    for (std::size_t k = 0; k < 4; ++k) {
                        acc[k] += dyp[s + k];
                        acc_xh[k] += dyp[s + k] * xh[s + k];
                    }
                for (; s < l.spatial; ++s) {
                    acc[0] += dyp[s];
                    acc_xh[0] += dyp[s] * xh[s];
                }
                sum_dy += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                sum_dy_xhat += (acc_xh[0] + acc_xh[1]) + (acc_xh[2] + acc_xh[3]);
            }
            g.dbeta[ch] = sum_dy;
            g.dgamma[ch] = sum_dy_xhat;

            const double coef = gamma[ch] * cache.inv_std[ch] / m;
            for (std::size_t img = 0; img < l.n; ++img) {
                const std::size_t base = (img * l.c + ch) * l.spatial;
                const double* dyp = dy.data() + base;
                const double* xh = cache.x_hat.data() + base;
                double* dxp = g.dx.data() + base;
                for (std::size_t s = 0; s < l.spatial; ++s)
                    dxp[s] = coef * (m * dyp[s] - sum_dy - xh[s] * sum_dy_xhat);
            }
        }
    });
    return g;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw Error(ErrorCode::ShapeMismatch, "mse operands differ in shape");
    if (pred.numel() == 0)
        throw Error(ErrorCode::InvalidArgument, "mse needs at least one element");
    const double inv_n = 1.0 / static_cast<double>(pred.dim(0));
    MseResult res;
    res.dpred = Tensor(pred.shape());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
        res.dpred[i] = 2.0 * inv_n * d;
    }
    res.loss = acc * inv_n;
    return res;
}

AdamState AdamState::init(const Tensor& param) {
    return AdamState{Tensor(param.shape()), Tensor(param.shape()), 0};
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, const AdamConfig& config) {
    if (!param.same_shape(grad) || !param.same_shape(state.m))
        throw Error(ErrorCode::ShapeMismatch, "adam state/gradient shape mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    parallel_for(
        param.numel(),
        [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
                state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                const double m_hat = state.m[i] / bc1;
                const double v_hat = state.v[i] / bc2;
                param[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
            }
        },
        /*grain=*/1 << 16);
}

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
    if (!param.same_shape(grad))
        throw Error(ErrorCode::ShapeMismatch, "sgd gradient shape mismatch");
    for (std::size_t i = 0; i < param.numel(); ++i)
        param[i] -= lr * grad[i];
}

} // namespace afdc
