#include "afdc/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace afdc {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'W', '1'};
constexpr std::uint32_t kFormatVersion = 1;

// [0, 1) from the top 53 bits; avoids distribution objects so streams are
// identical across standard libraries.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void he_uniform_fill(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.numel(); ++i)
        t[i] = (2.0 * next_unit(rng) - 1.0) * limit;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw Error(ErrorCode::CorruptFile, "unexpected end of weight file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw Error(ErrorCode::CorruptFile, "unexpected end of weight file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d)
        write_u32(out, static_cast<std::uint32_t>(t.dim(d)));
    for (std::size_t i = 0; i < t.numel(); ++i) write_f64(out, t[i]);
}

Tensor read_tensor(std::istream& in, const std::vector<std::size_t>& expected_shape,
                   const char* what) {
    const std::uint32_t rank = read_u32(in);
    if (rank != expected_shape.size())
        throw Error(ErrorCode::CorruptFile, std::string("bad rank for ") + what);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u32(in);
    if (shape != expected_shape)
        throw Error(ErrorCode::CorruptFile, std::string("shape table mismatch for ") + what);
    Tensor t(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = read_f64(in);
    return t;
}

// Saved tensors, in file order: per block conv W, conv b and (when batch
// norm is on) gamma, beta, running mean, running var; then both FC layers.
template <typename ModelT, typename Fn>
void for_each_saved_tensor(ModelT& model, Fn&& fn) {
    for (auto& blk : model.blocks) {
        fn(blk.w);
        fn(blk.b);
        if (model.config.use_batchnorm) {
            fn(blk.bn.gamma);
            fn(blk.bn.beta);
            fn(blk.bn.running_mean);
            fn(blk.bn.running_var);
        }
    }
    fn(model.fc1_w);
    fn(model.fc1_b);
    fn(model.fc2_w);
    fn(model.fc2_b);
}

} // namespace

void ModelConfig::validate() const {
    if (conv_blocks.empty())
        throw Error(ErrorCode::InvalidArgument, "need at least one conv block");
    if (fc_hidden == 0)
        throw Error(ErrorCode::InvalidArgument, "fc hidden width must be positive");
    const std::size_t div = std::size_t{1} << conv_blocks.size();
    if (input_height % div != 0 || input_width % div != 0)
        throw Error(ErrorCode::IndivisibleSpatialDims,
                    "input dims must be divisible by 2^" + std::to_string(conv_blocks.size()));
    if ((input_height >> conv_blocks.size()) == 0 || (input_width >> conv_blocks.size()) == 0)
        throw Error(ErrorCode::IndivisibleSpatialDims, "too many blocks for the input size");
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& blk : blocks) {
        out.push_back(&blk.w);
        out.push_back(&blk.b);
        if (config.use_batchnorm) {
            out.push_back(&blk.bn.gamma);
            out.push_back(&blk.bn.beta);
        }
    }
    out.push_back(&fc1_w);
    out.push_back(&fc1_b);
    out.push_back(&fc2_w);
    out.push_back(&fc2_b);
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    auto mutable_params = const_cast<Model*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->numel();
    return n;
}

Model build_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Model model;
    model.config = config;

    std::mt19937_64 rng(seed);
    std::size_t in_ch = config.input_channels;
    for (std::size_t out_ch : config.conv_blocks) {
        ConvBlock blk;
        blk.w = Tensor({out_ch, in_ch, 3, 3});
        he_uniform_fill(blk.w, in_ch * 9, rng);
        blk.b = Tensor({out_ch});
        blk.bn = BatchNormParams::init(out_ch);
        model.blocks.push_back(std::move(blk));
        in_ch = out_ch;
    }

    const std::size_t flat = config.flatten_width();
    model.fc1_w = Tensor({config.fc_hidden, flat});
    he_uniform_fill(model.fc1_w, flat, rng);
    model.fc1_b = Tensor({config.fc_hidden});
    model.fc2_w = Tensor({1, config.fc_hidden});
    he_uniform_fill(model.fc2_w, config.fc_hidden, rng);
    model.fc2_b = Tensor({1});
    return model;
}

Tensor model_forward(Model& model, const Tensor& x, NnMode mode, ForwardCache* cache) {
    const auto& cfg = model.config;
    require_rank(x, 4, "model input");
    if (x.dim(1) != cfg.input_channels || x.dim(2) != cfg.input_height || x.dim(3) != cfg.input_width)
        throw Error(ErrorCode::ShapeMismatch, "input does not match the configured image size");

    if (cache) {
        cache->input = x;
        cache->blocks.assign(model.blocks.size(), {});
    }

    Tensor cur = x;
    for (std::size_t bi = 0; bi < model.blocks.size(); ++bi) {
        auto& blk = model.blocks[bi];
        ForwardCache::BlockCache* bc = cache ? &cache->blocks[bi] : nullptr;
        if (bc) bc->conv_in = cur;

        Tensor conv = conv2d_fwd(cur, blk.w, blk.b);
        Tensor act = cfg.use_batchnorm
                         ? batchnorm_fwd(conv, blk.bn, mode, bc ? &bc->bn : nullptr)
                         : std::move(conv);
        for (std::size_t i = 0; i < act.numel(); ++i)
            if (act[i] < 0.0) act[i] = 0.0;
        if (bc) bc->act = act;

        PoolResult pooled = maxpool2x2_fwd(act);
        if (bc) {
            bc->pool_argmax = pooled.argmax;
            bc->pool_in_shape = act.shape();
        }
        cur = std::move(pooled.y);
    }

    Tensor flat = cur.reshaped({x.dim(0), cfg.flatten_width()});
    if (cache) cache->flat = flat;

    Tensor fc1 = fc_fwd(flat, model.fc1_w, model.fc1_b);
    if (cache) cache->fc1_out = fc1;
    Tensor fc1_act = relu_fwd(fc1);
    if (cache) cache->fc1_act = fc1_act;

    return fc_fwd(fc1_act, model.fc2_w, model.fc2_b);
}

std::vector<Tensor> model_backward(const Model& model, const ForwardCache& cache,
                                   const Tensor& d_output) {
    const auto& cfg = model.config;
    std::vector<Tensor> grads;

    FcGrads g2 = fc_bwd(d_output, cache.fc1_act, model.fc2_w);
    Tensor d_fc1 = relu_bwd(g2.dx, cache.fc1_out);
    FcGrads g1 = fc_bwd(d_fc1, cache.flat, model.fc1_w);

    Tensor d_cur = g1.dx;
    std::vector<Tensor> block_grads; // reversed order, unpacked below
    for (std::size_t bi = model.blocks.size(); bi-- > 0;) {
        const auto& blk = model.blocks[bi];
        const auto& bc = cache.blocks[bi];

        const std::size_t bn = bc.pool_in_shape[0], bch = bc.pool_in_shape[1];
        const std::size_t bh = bc.pool_in_shape[2], bw = bc.pool_in_shape[3];
        Tensor d_pool_out = d_cur.reshaped({bn, bch, bh / 2, bw / 2});
        Tensor d_act = maxpool2x2_bwd(d_pool_out, bc.pool_argmax, bc.pool_in_shape);
        Tensor d_act_in = relu_bwd(d_act, bc.act);

        Tensor d_conv_out;
        Tensor d_gamma, d_beta;
        if (cfg.use_batchnorm) {
            BatchNormGrads bg = batchnorm_bwd(d_act_in, bc.bn, blk.bn.gamma);
            d_conv_out = std::move(bg.dx);
            d_gamma = std::move(bg.dgamma);
            d_beta = std::move(bg.dbeta);
        } else {
            d_conv_out = std::move(d_act_in);
        }

        ConvGrads cg = conv2d_bwd(d_conv_out, bc.conv_in, blk.w);
        block_grads.push_back(std::move(cg.dw));
        block_grads.push_back(std::move(cg.db));
        if (cfg.use_batchnorm) {
            block_grads.push_back(std::move(d_gamma));
            block_grads.push_back(std::move(d_beta));
        }
        d_cur = std::move(cg.dx);
    }

    // Assemble in parameters() order: blocks first, then the FC head.
    const std::size_t per_block = cfg.use_batchnorm ? 4 : 2;
    for (std::size_t bi = 0; bi < model.blocks.size(); ++bi) {
        const std::size_t rev = model.blocks.size() - 1 - bi;
        for (std::size_t k = 0; k < per_block; ++k)
            grads.push_back(block_grads[rev * per_block + k]);
    }
    grads.push_back(std::move(g1.dw));
    grads.push_back(std::move(g1.db));
    grads.push_back(std::move(g2.dw));
    grads.push_back(std::move(g2.db));
    return grads;
}

std::vector<double> predict_denormalized(Model& model, const Tensor& x) {
    Tensor y = model_forward(model, x, NnMode::Infer);
    std::vector<double> out(y.numel());
    for (std::size_t i = 0; i < y.numel(); ++i)
        out[i] = y[i] * model.label_std + model.label_mean;
    return out;
}

void save_weights(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");

    out.write(kMagic, 4);
    write_u32(out, kFormatVersion);
    write_u32(out, static_cast<std::uint32_t>(model.config.conv_blocks.size()));
    for (std::size_t ch : model.config.conv_blocks)
        write_u32(out, static_cast<std::uint32_t>(ch));
    write_u32(out, static_cast<std::uint32_t>(model.config.fc_hidden));
    out.put(model.config.use_batchnorm ? 1 : 0);
    write_f64(out, model.label_mean);
    write_f64(out, model.label_std);
    for_each_saved_tensor(model, [&](const Tensor& t) { write_tensor(out, t); });
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path);
}

Model load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::CorruptFile, "cannot open " + path);

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(ErrorCode::CorruptFile, "bad magic");
    const std::uint32_t version = read_u32(in);
    if (version != kFormatVersion)
        throw Error(ErrorCode::VersionMismatch,
                    "weight format version " + std::to_string(version) + " not supported");

    ModelConfig cfg;
    cfg.conv_blocks.resize(read_u32(in));
    if (cfg.conv_blocks.empty() || cfg.conv_blocks.size() > 16)
        throw Error(ErrorCode::CorruptFile, "implausible block count");
    for (auto& ch : cfg.conv_blocks) ch = read_u32(in);
    cfg.fc_hidden = read_u32(in);
    int bn_flag = in.get();
    if (bn_flag != 0 && bn_flag != 1)
        throw Error(ErrorCode::CorruptFile, "bad batchnorm flag");
    cfg.use_batchnorm = bn_flag == 1;

    const double mean = read_f64(in);
    const double stddev = read_f64(in);

    // The config block stores no input size; recover the (square) spatial
    // extent from the first FC width.
    Model model;
    model.config = cfg;
    model.label_mean = mean;
    model.label_std = stddev;

    std::size_t in_ch = cfg.input_channels;
    for (std::size_t out_ch : cfg.conv_blocks) {
        ConvBlock blk;
        blk.w = read_tensor(in, {out_ch, in_ch, 3, 3}, "conv weights");
        blk.b = read_tensor(in, {out_ch}, "conv bias");
        if (cfg.use_batchnorm) {
            blk.bn.gamma = read_tensor(in, {out_ch}, "bn gamma");
            blk.bn.beta = read_tensor(in, {out_ch}, "bn beta");
            blk.bn.running_mean = read_tensor(in, {out_ch}, "bn running mean");
            blk.bn.running_var = read_tensor(in, {out_ch}, "bn running var");
        } else {
            blk.bn = BatchNormParams::init(out_ch);
        }
        model.blocks.push_back(std::move(blk));
        in_ch = out_ch;
    }

    // fc1 first: its width pins the flatten size.
    const std::uint32_t rank = read_u32(in);
    if (rank != 2) throw Error(ErrorCode::CorruptFile, "bad rank for fc1 weights");
    const std::size_t fc_out = read_u32(in);
    const std::size_t fc_in = read_u32(in);
    if (fc_out != cfg.fc_hidden)
        throw Error(ErrorCode::CorruptFile, "fc1 height does not match config");
    const std::size_t last_ch = cfg.conv_blocks.back();
    if (fc_in % last_ch != 0)
        throw Error(ErrorCode::CorruptFile, "fc1 width not divisible by channel count");
    const std::size_t spatial_sq = fc_in / last_ch;
    const std::size_t spatial = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(spatial_sq))));
    if (spatial * spatial != spatial_sq)
        throw Error(ErrorCode::CorruptFile, "fc1 width implies a non-square feature map");
    model.config.input_height = spatial << cfg.conv_blocks.size();
    model.config.input_width = model.config.input_height;

    model.fc1_w = Tensor({fc_out, fc_in});
    for (std::size_t i = 0; i < model.fc1_w.numel(); ++i) model.fc1_w[i] = read_f64(in);
    model.fc1_b = read_tensor(in, {cfg.fc_hidden}, "fc1 bias");
    model.fc2_w = read_tensor(in, {1, cfg.fc_hidden}, "fc2 weights");
    model.fc2_b = read_tensor(in, {1}, "fc2 bias");

    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::CorruptFile, "trailing bytes after parameter table");
    if (!(model.label_std > 0.0))
        throw Error(ErrorCode::CorruptFile, "label std must be positive");
    model.config.validate();
    return model;
}

} // namespace afdc
