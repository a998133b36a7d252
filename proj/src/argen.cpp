#include "webgen/argen.hpp"

#include <cmath>

namespace webgen {

using nn::Tensor;

ArgenConfig desk_argen_config() { return ArgenConfig{}; }

ArgenConfig paper_argen_config() {
    ArgenConfig cfg;
    cfg.d_model = 512;
    cfg.depth = 12;
    cfg.heads = 16;
    cfg.head_dim = 64;
    cfg.d_cond = 64;
    return cfg;
}

void ArgenModel::build(Rng* init) {
    cond_embed_ = &store_.create_or_bind("cond.embed", {7, cfg_.d_cond});
    if (init) {
        for (double& v : cond_embed_->value.v) v = init->normal(0.0, 0.02);
    }
    in_proj_ = nn::Linear(store_, "in_proj", cfg_.row_width, cfg_.d_model, init);
    cond_ff_in_ = nn::Linear(store_, "cond.ff_in", 1, cfg_.d_cond, init);
    cond_ff_out_ = nn::Linear(store_, "cond.ff_out", cfg_.d_cond, cfg_.d_cond, init);
    for (int l = 0; l < cfg_.depth; ++l) {
        const std::string p = "block" + std::to_string(l);
        Block b;
        b.norm_self = nn::LayerNorm(store_, p + ".ns", cfg_.d_model);
        b.norm_cross = nn::LayerNorm(store_, p + ".nc", cfg_.d_model);
        b.norm_ff = nn::LayerNorm(store_, p + ".nf", cfg_.d_model);
        nn::AttentionConfig sa{cfg_.d_model, cfg_.d_model, cfg_.d_model,
                               cfg_.heads, cfg_.head_dim, nn::MaskMode::Causal};
        nn::AttentionConfig ca{cfg_.d_model, cfg_.d_cond, cfg_.d_model,
                               cfg_.heads, cfg_.head_dim, nn::MaskMode::None};
        b.self_attn = nn::MultiheadAttention(store_, p + ".sa", sa, init);
        b.cross_attn = nn::MultiheadAttention(store_, p + ".ca", ca, init);
        b.ff = nn::FeedForward(store_, p + ".ff", cfg_.d_model, cfg_.ff_hidden(), init);
        blocks_.push_back(std::move(b));
    }
    final_norm_ = nn::LayerNorm(store_, "final_norm", cfg_.d_model);
    out_proj_ = nn::Linear(store_, "out_proj", cfg_.d_model, cfg_.row_width, init);
}

ArgenModel::ArgenModel(const ArgenConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    Rng init(init_seed);
    build(&init);
}

ArgenModel::ArgenModel(const ArgenConfig& cfg, nn::ParameterStore store)
    : cfg_(cfg), store_(std::move(store)) {
    build(nullptr);
}

Tensor ArgenModel::encode_condition(const std::array<double, 7>& cond) {
    // Shared 1 -> d_cond feed-forward per feature plus a learned per-feature
    // identity so equal feature values still yield distinct tokens.
    Tensor scalars({7, 1});
    for (int j = 0; j < 7; ++j) scalars.at(j, 0) = cond[j];
    Tensor tokens = cond_ff_out_.forward(cond_act_.forward(cond_ff_in_.forward(scalars)));
    tokens += cond_embed_->value;
    return tokens;
}

Tensor ArgenModel::decoder_forward(const Tensor& prefix, const std::array<double, 7>& cond) {
    if (prefix.rows() < 1 || prefix.cols() != cfg_.row_width) {
        throw Error("decoder_forward: prefix must be [rows, " + std::to_string(cfg_.row_width) + "]");
    }
    bool starts_with_token = true;
    for (int c = 0; c < prefix.cols(); ++c) {
        if (prefix.at(0, c) != kStartTokenValue) {
            starts_with_token = false;
            break;
        }
    }
    if (!starts_with_token) throw Error("decoder_forward: prefix missing start token");
    if (prefix.rows() > cfg_.max_rows + 1) throw Error("decoder_forward: prefix too long");

    cond_tokens_cache_ = encode_condition(cond);

    Tensor h = in_proj_.forward(prefix);
    for (int r = 0; r < h.rows(); ++r) {
        auto pe = nn::fourier_embed(static_cast<double>(r), cfg_.d_model);
        for (int c = 0; c < cfg_.d_model; ++c) h.at(r, c) += pe[c];
    }
    for (auto& b : blocks_) {
        {
            Tensor q = b.norm_self.forward(h);
            h += b.self_attn.forward(q, q);
        }
        {
            Tensor q = b.norm_cross.forward(h);
            h += b.cross_attn.forward(q, cond_tokens_cache_);
        }
        {
            Tensor q = b.norm_ff.forward(h);
            h += b.ff.forward(q);
        }
    }
    h = final_norm_.forward(h);
    return out_proj_.forward(h);
}

Tensor ArgenModel::backward(const Tensor& d_out) {
    Tensor d = final_norm_.backward(out_proj_.backward(d_out));
    Tensor d_cond({7, cfg_.d_cond});
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
        d += it->norm_ff.backward(it->ff.backward(d));
        {
            Tensor d_kv;
            Tensor dq = it->cross_attn.backward(d, d_kv);
            d_cond += d_kv;
            d += it->norm_cross.backward(dq);
        }
        {
            Tensor d_kv;
            Tensor dq = it->self_attn.backward(d, d_kv);
            dq += d_kv;
            d += it->norm_self.backward(dq);
        }
    }
    // Through the conditioning encoder.
    cond_embed_->grad += d_cond;
    cond_ff_in_.backward(cond_act_.backward(cond_ff_out_.backward(d_cond)));
    return in_proj_.backward(d);
}

double ar_loss(const Tensor& predictions, const Tensor& targets) {
    if (!predictions.same_shape(targets)) throw Error("ar_loss: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        double d = predictions.v[i] - targets.v[i];
        s += d * d;
    }
    return s / static_cast<double>(predictions.size());
}

namespace {

double argen_batch_pass(ArgenModel& model, const std::vector<ArgenBatchItem>& batch, bool train) {
    if (batch.empty()) throw Error("argen: empty batch");
    const int n = model.config().max_rows;
    const int w = model.config().row_width;
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& item : batch) {
        if (!item.z->has_token) throw Error("argen: training rows must carry the start token");
        Tensor pred = model.decoder_forward(item.z->m, item.cond);
        // Position p predicts input row p+1; the prediction at the last
        // position has no target and is excluded.
        Tensor used({n, w}), target({n, w});
        for (int p = 0; p < n; ++p) {
            for (int c = 0; c < w; ++c) {
                used.at(p, c) = pred.at(p, c);
                target.at(p, c) = item.z->m.at(p + 1, c);
            }
        }
        double item_loss = ar_loss(used, target);
        loss += item_loss * scale;
        if (train) {
            Tensor d_pred({pred.rows(), w});
            const double g = 2.0 * scale / static_cast<double>(used.size());
            for (int p = 0; p < n; ++p) {
                for (int c = 0; c < w; ++c) {
                    d_pred.at(p, c) = g * (used.at(p, c) - target.at(p, c));
                }
            }
            model.backward(d_pred);
        }
    }
    if (!std::isfinite(loss)) {
        throw Error("argen train: loss is not finite (step " +
                    std::to_string(model.store().step_count()) + ")");
    }
    return loss;
}

}  // namespace

double argen_train_step(ArgenModel& model, const std::vector<ArgenBatchItem>& batch,
                        const nn::AdamConfig& adam) {
    model.store().zero_grads();
    double loss = argen_batch_pass(model, batch, true);
    model.store().adam_step(adam);
    return loss;
}

double argen_eval_loss(ArgenModel& model, const std::vector<ArgenBatchItem>& batch) {
    return argen_batch_pass(model, batch, false);
}

GenerationTrace argen_rollout(ArgenModel& model, const std::array<double, 7>& cond) {
    const int n = model.config().max_rows;
    const int w = model.config().row_width;
    Tensor prefix({1, w});
    for (int c = 0; c < w; ++c) prefix.at(0, c) = kStartTokenValue;

    GenerationTrace trace;
    trace.z.has_token = false;
    trace.z.m = Tensor({n, w});
    for (int step = 0; step < n; ++step) {
        Tensor pred = model.decoder_forward(prefix, cond);
        const int last = pred.rows() - 1;
        double rms = 0.0;
        for (int c = 0; c < w; ++c) {
            double v = pred.at(last, c);
            trace.z.m.at(step, c) = v;
            rms += v * v;
        }
        trace.row_rmse.push_back(std::sqrt(rms / w));

        Tensor next({prefix.rows() + 1, w});
        std::copy(prefix.v.begin(), prefix.v.end(), next.v.begin());
        for (int c = 0; c < w; ++c) next.at(prefix.rows(), c) = pred.at(last, c);
        prefix = std::move(next);
    }
    return trace;
}

DecodeResult argen_generate(ArgenModel& model, const std::array<double, 7>& cond_norm,
                            const NormalizationParams& params) {
    GenerationTrace trace = argen_rollout(model, cond_norm);
    return decode_full(trace.z, params);
}

}  // namespace webgen
