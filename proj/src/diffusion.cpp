#include "webgen/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace webgen {

using nn::Tensor;

NoiseSchedule NoiseSchedule::geometric(int steps, double sigma_min, double sigma_max) {
    if (steps < 1 || sigma_min <= 0.0 || sigma_max < sigma_min) {
        throw Error("NoiseSchedule: need steps >= 1 and 0 < sigma_min <= sigma_max");
    }
    NoiseSchedule s;
    s.sigmas.resize(steps);
    for (int i = 1; i <= steps; ++i) {
        double frac = steps == 1 ? 0.0 : static_cast<double>(steps - i) / (steps - 1);
        s.sigmas[i - 1] = sigma_max * std::pow(sigma_min / sigma_max, frac);
    }
    return s;
}

double NoiseSchedule::total_variance() const {
    double s = 0.0;
    for (double x : sigmas) s += x * x;
    return s;
}

double NoiseSchedule::mean_step_variance() const {
    return sigmas.empty() ? 0.0 : total_variance() / static_cast<double>(sigmas.size());
}

UNetConfig desk_unet_config(int in_width) {
    UNetConfig cfg;
    cfg.in_width = in_width;
    cfg.channels = 32;
    cfg.resnet_blocks = 1;
    cfg.heads = 4;
    cfg.d_cond = 64;
    return cfg;
}

UNetConfig paper_unet_config(int in_width) {
    UNetConfig cfg;
    cfg.in_width = in_width;
    cfg.channels = in_width == kSparseWidth ? 128 : 256;
    cfg.resnet_blocks = in_width == kSparseWidth ? 2 : 3;
    cfg.heads = 8;
    cfg.d_cond = 256;
    return cfg;
}

// ---------------------------------------------------------------------------
// UNet blocks
// ---------------------------------------------------------------------------

Tensor UNet::ResBlock::forward(const Tensor& x) {
    x_cache = x;
    Tensor h = conv1.forward(act1.forward(norm1.forward(x)));
    h = conv2.forward(act2.forward(norm2.forward(h)));
    Tensor skip = has_proj ? proj.forward(x) : x;
    h += skip;
    return h;
}

Tensor UNet::ResBlock::backward(const Tensor& dy) {
    Tensor dx = norm1.backward(act1.backward(conv1.backward(
        norm2.backward(act2.backward(conv2.backward(dy))))));
    if (has_proj) {
        dx += proj.backward(dy);
    } else {
        dx += dy;
    }
    return dx;
}

Tensor UNet::AttnBlock::forward(const Tensor& x, const Tensor& cond) {
    Tensor h = x;
    {
        Tensor q = norm_self.forward(h);
        h += self_attn.forward(q, q);
    }
    {
        Tensor q = norm_cross.forward(h);
        h += cross_attn.forward(q, cond);
    }
    return h;
}

Tensor UNet::AttnBlock::backward(const Tensor& dy, Tensor& d_cond) {
    Tensor d = dy;
    {
        Tensor d_kv;
        Tensor dq = cross_attn.backward(d, d_kv);
        d_cond += d_kv;
        d += norm_cross.backward(dq);
    }
    {
        Tensor d_kv;
        Tensor dq = self_attn.backward(d, d_kv);
        dq += d_kv;  // self-attention: query and key/value share the input
        d += norm_self.backward(dq);
    }
    return d;
}

UNet::ResBlock UNet::make_resblock(const std::string& name, int cin, int cout, Rng* init) {
    ResBlock b;
    b.norm1 = nn::LayerNorm(*store_, name + ".n1", cin);
    b.conv1 = nn::Conv1d(*store_, name + ".c1", cin, cout, 1, init);
    b.norm2 = nn::LayerNorm(*store_, name + ".n2", cout);
    b.conv2 = nn::Conv1d(*store_, name + ".c2", cout, cout, 1, init);
    b.has_proj = cin != cout;
    if (b.has_proj) b.proj = nn::Linear(*store_, name + ".proj", cin, cout, init);
    return b;
}

UNet::AttnBlock UNet::make_attnblock(const std::string& name, int ch, Rng* init) {
    if (ch % cfg_.heads != 0) throw Error("UNet: channels not divisible by heads");
    AttnBlock b;
    b.norm_self = nn::LayerNorm(*store_, name + ".ns", ch);
    b.norm_cross = nn::LayerNorm(*store_, name + ".nc", ch);
    nn::AttentionConfig sa{ch, ch, ch, cfg_.heads, ch / cfg_.heads, nn::MaskMode::None};
    nn::AttentionConfig ca{ch, cfg_.d_cond, ch, cfg_.heads, ch / cfg_.heads, nn::MaskMode::None};
    b.self_attn = nn::MultiheadAttention(*store_, name + ".sa", sa, init);
    b.cross_attn = nn::MultiheadAttention(*store_, name + ".ca", ca, init);
    return b;
}

UNet::UNet(nn::ParameterStore& store, const UNetConfig& cfg, Rng* init)
    : cfg_(cfg), store_(&store) {
    const int w0 = cfg.level_channels(0), w1 = cfg.level_channels(1), w2 = cfg.level_channels(2);
    cond_embed_ = &store.create_or_bind("cond.embed", {kCondTokens, cfg.d_cond});
    if (init) {
        for (double& v : cond_embed_->value.v) v = init->normal(0.0, 0.02);
    }

    stem_ = nn::Conv1d(store, "stem", cfg.in_width, w0, 1, init);
    for (int i = 0; i < cfg.resnet_blocks; ++i) {
        enc0_.push_back(make_resblock("enc0.b" + std::to_string(i), w0, w0, init));
    }
    down1_ = nn::Conv1d(store, "down1", w0, w1, 4, init);
    for (int i = 0; i < cfg.resnet_blocks; ++i) {
        enc1_.push_back(make_resblock("enc1.b" + std::to_string(i), w1, w1, init));
    }
    enc1_attn_ = make_attnblock("enc1.attn", w1, init);
    down2_ = nn::Conv1d(store, "down2", w1, w2, 4, init);
    mid_block1_ = make_resblock("mid.b0", w2, w2, init);
    mid_attn_ = make_attnblock("mid.attn", w2, init);
    mid_block2_ = make_resblock("mid.b1", w2, w2, init);
    up1_conv_ = nn::Conv1d(store, "up1", w2, w1, 1, init);
    dec1_.push_back(make_resblock("dec1.b0", 2 * w1, w1, init));
    for (int i = 1; i < cfg.resnet_blocks; ++i) {
        dec1_.push_back(make_resblock("dec1.b" + std::to_string(i), w1, w1, init));
    }
    dec1_attn_ = make_attnblock("dec1.attn", w1, init);
    up0_conv_ = nn::Conv1d(store, "up0", w1, w0, 1, init);
    dec0_.push_back(make_resblock("dec0.b0", 2 * w0, w0, init));
    for (int i = 1; i < cfg.resnet_blocks; ++i) {
        dec0_.push_back(make_resblock("dec0.b" + std::to_string(i), w0, w0, init));
    }
    head_norm_ = nn::LayerNorm(store, "head.norm", w0);
    head_conv_ = nn::Conv1d(store, "head.conv", w0, cfg.in_width, 1, init);
}

namespace {

Tensor upsample4(const Tensor& x) {
    Tensor y({x.rows() * 4, x.cols()});
    for (int r = 0; r < x.rows(); ++r) {
        for (int rep = 0; rep < 4; ++rep) {
            std::copy(&x.v[static_cast<size_t>(r) * x.cols()],
                      &x.v[static_cast<size_t>(r) * x.cols()] + x.cols(),
                      &y.v[static_cast<size_t>(4 * r + rep) * x.cols()]);
        }
    }
    return y;
}

Tensor upsample4_backward(const Tensor& dy) {
    Tensor dx({dy.rows() / 4, dy.cols()});
    for (int r = 0; r < dx.rows(); ++r) {
        for (int rep = 0; rep < 4; ++rep) {
            for (int c = 0; c < dy.cols(); ++c) dx.at(r, c) += dy.at(4 * r + rep, c);
        }
    }
    return dx;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    Tensor y({a.rows(), a.cols() + b.cols()});
    for (int r = 0; r < a.rows(); ++r) {
        std::copy(&a.v[static_cast<size_t>(r) * a.cols()],
                  &a.v[static_cast<size_t>(r) * a.cols()] + a.cols(),
                  &y.v[static_cast<size_t>(r) * y.cols()]);
        std::copy(&b.v[static_cast<size_t>(r) * b.cols()],
                  &b.v[static_cast<size_t>(r) * b.cols()] + b.cols(),
                  &y.v[static_cast<size_t>(r) * y.cols() + a.cols()]);
    }
    return y;
}

void split_cols(const Tensor& dy, Tensor& da, Tensor& db) {
    for (int r = 0; r < dy.rows(); ++r) {
        for (int c = 0; c < da.cols(); ++c) da.at(r, c) = dy.at(r, c);
        for (int c = 0; c < db.cols(); ++c) db.at(r, c) = dy.at(r, da.cols() + c);
    }
}

}  // namespace

Tensor UNet::cond_tokens(int t_index, const std::array<double, 7>& cond) const {
    Tensor tokens({kCondTokens, cfg_.d_cond});
    for (int j = 0; j < kCondTokens; ++j) {
        double value = j < 7 ? cond[j] * kCondFourierScale
                             : static_cast<double>(t_index);  // time token uses the raw step index
        auto e = nn::fourier_embed(value, cfg_.d_cond);
        for (int c = 0; c < cfg_.d_cond; ++c) tokens.at(j, c) = e[c] + cond_embed_->value.at(j, c);
    }
    return tokens;
}

Tensor UNet::forward(const Tensor& z, int t_index, const std::array<double, 7>& cond) {
    if (z.rows() != cfg_.length || z.cols() != cfg_.in_width) {
        throw Error("UNet: input shape " + z.shape_str() + " does not match config");
    }
    cond_cache_ = cond_tokens(t_index, cond);

    Tensor h = stem_.forward(z);
    for (auto& b : enc0_) h = b.forward(h);
    skip0_ = h;
    h = down1_.forward(h);
    for (auto& b : enc1_) h = b.forward(h);
    h = enc1_attn_.forward(h, cond_cache_);
    skip1_ = h;
    h = down2_.forward(h);
    h = mid_block1_.forward(h);
    h = mid_attn_.forward(h, cond_cache_);
    h = mid_block2_.forward(h);
    h = up1_conv_.forward(upsample4(h));
    h = concat_cols(h, skip1_);
    for (auto& b : dec1_) h = b.forward(h);
    h = dec1_attn_.forward(h, cond_cache_);
    h = up0_conv_.forward(upsample4(h));
    h = concat_cols(h, skip0_);
    for (auto& b : dec0_) h = b.forward(h);
    h = head_norm_.forward(h);
    return head_conv_.forward(h);
}

Tensor UNet::backward(const Tensor& d_out) {
    Tensor d_cond({kCondTokens, cfg_.d_cond});

    Tensor d = head_norm_.backward(head_conv_.backward(d_out));
    Tensor d_skip0({skip0_.rows(), skip0_.cols()});
    {
        for (auto it = dec0_.rbegin(); it != dec0_.rend(); ++it) d = it->backward(d);
        Tensor d_main({d.rows(), d.cols() - skip0_.cols()});
        split_cols(d, d_main, d_skip0);
        d = upsample4_backward(up0_conv_.backward(d_main));
    }
    d = dec1_attn_.backward(d, d_cond);
    Tensor d_skip1({skip1_.rows(), skip1_.cols()});
    {
        for (auto it = dec1_.rbegin(); it != dec1_.rend(); ++it) d = it->backward(d);
        Tensor d_main({d.rows(), d.cols() - skip1_.cols()});
        split_cols(d, d_main, d_skip1);
        d = upsample4_backward(up1_conv_.backward(d_main));
    }
    d = mid_block2_.backward(d);
    d = mid_attn_.backward(d, d_cond);
    d = mid_block1_.backward(d);
    d = down2_.backward(d);
    d += d_skip1;
    d = enc1_attn_.backward(d, d_cond);
    for (auto it = enc1_.rbegin(); it != enc1_.rend(); ++it) d = it->backward(d);
    d = down1_.backward(d);
    d += d_skip0;
    for (auto it = enc0_.rbegin(); it != enc0_.rend(); ++it) d = it->backward(d);
    d = stem_.backward(d);

    cond_embed_->grad += d_cond;
    return d;
}

// ---------------------------------------------------------------------------
// DiffusionModel
// ---------------------------------------------------------------------------

DiffusionModel::DiffusionModel(DiffusionKind kind, const UNetConfig& cfg,
                               const NoiseSchedule& schedule, uint64_t init_seed)
    : kind_(kind), cfg_(cfg), schedule_(schedule) {
    Rng init(init_seed);
    net_ = std::make_unique<UNet>(store_, cfg_, &init);
}

DiffusionModel::DiffusionModel(DiffusionKind kind, const UNetConfig& cfg,
                               const NoiseSchedule& schedule, nn::ParameterStore store)
    : kind_(kind), cfg_(cfg), schedule_(schedule), store_(std::move(store)) {
    net_ = std::make_unique<UNet>(store_, cfg_, nullptr);
}

ForwardNoise forward_noise(const Tensor& z0, int i, const NoiseSchedule& schedule, Rng& rng) {
    if (i < 1 || i > schedule.steps()) throw Error("forward_noise: step out of range");
    ForwardNoise out;
    out.z = z0;
    out.target = Tensor(z0.shape);
    for (int k = 1; k <= i; ++k) {
        const double s = schedule.sigma(k);
        if (k == i) {
            for (size_t e = 0; e < out.z.size(); ++e) {
                double n = s > 0.0 ? rng.normal(0.0, s) : 0.0;
                out.target.v[e] = n;
                out.z.v[e] += n;
            }
        } else if (s > 0.0) {
            for (size_t e = 0; e < out.z.size(); ++e) out.z.v[e] += rng.normal(0.0, s);
        }
    }
    return out;
}

namespace {

double batch_pass(DiffusionModel& model, const std::vector<DiffusionBatchItem>& batch, Rng& rng,
                  bool train) {
    if (batch.empty()) throw Error("diffusion: empty batch");
    const auto& schedule = model.schedule();
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& item : batch) {
        int i = rng.uniform_int(1, schedule.steps());
        ForwardNoise fn = forward_noise(*item.z0, i, schedule, rng);
        Tensor pred = model.net().forward(fn.z, i, item.cond);
        Tensor diff = pred;
        diff -= fn.target;
        double item_loss = 0.0;
        for (double d : diff.v) item_loss += d * d;
        item_loss /= static_cast<double>(diff.size());
        loss += item_loss * scale;
        if (train) {
            Tensor d_pred = diff;
            d_pred *= 2.0 * scale / static_cast<double>(diff.size());
            model.net().backward(d_pred);
        }
    }
    if (!std::isfinite(loss)) {
        throw Error("diffusion train: loss is not finite (step " +
                    std::to_string(model.store().step_count()) + ")");
    }
    return loss;
}

}  // namespace

double diffusion_train_step(DiffusionModel& model, const std::vector<DiffusionBatchItem>& batch,
                            Rng& rng, const nn::AdamConfig& adam) {
    model.store().zero_grads();
    double loss = batch_pass(model, batch, rng, true);
    model.store().adam_step(adam);
    return loss;
}

double diffusion_eval_loss(DiffusionModel& model, const std::vector<DiffusionBatchItem>& batch,
                           Rng& rng) {
    return batch_pass(model, batch, rng, false);
}

Tensor denoise_with(const std::function<Tensor(const Tensor&, int)>& predict, const Tensor& z_init,
                    int steps) {
    Tensor z = z_init;
    for (int i = steps; i >= 1; --i) {
        Tensor eps = predict(z, i);
        z -= eps;
    }
    return z;
}

Tensor denoise_sample(DiffusionModel& model, const std::array<double, 7>& cond, Rng& rng) {
    const auto& schedule = model.schedule();
    const double std0 = std::sqrt(schedule.total_variance());
    Tensor z({model.config().length, model.config().in_width});
    for (double& v : z.v) v = rng.normal(0.0, std0);
    z = denoise_with(
        [&](const Tensor& zt, int i) { return model.net().forward(zt, i, cond); }, z,
        schedule.steps());
    for (double& v : z.v) v = std::clamp(v, -1.05, 1.05);
    return z;
}

DecodeResult diffusion_generate(DiffusionModel& model, const std::array<double, 7>& cond_norm,
                                const NormalizationParams& params, Rng& rng) {
    Tensor z0 = denoise_sample(model, cond_norm, rng);
    if (model.kind() == DiffusionKind::Sparse) {
        SparseZ sz;
        sz.m = z0;
        return decode_sparse(sz, params);
    }
    FullZ fz;
    fz.m = z0;
    return decode_full(fz, params);
}

}  // namespace webgen
