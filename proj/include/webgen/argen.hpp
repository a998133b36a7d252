#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "webgen/nn/layers.hpp"
#include "webgen/zspace.hpp"

namespace webgen {

struct ArgenConfig {
    int d_model = 64;
    int depth = 2;
    int heads = 4;
    int head_dim = 16;
    double ff_mult = 4.0;
    int d_cond = 64;              // width of the 7 conditioning tokens
    int row_width = kFullWidth;   // 3 + N
    int max_rows = kMaxNodes;     // N generated rows

    int ff_hidden() const { return static_cast<int>(ff_mult * d_model); }
};

ArgenConfig desk_argen_config();
ArgenConfig paper_argen_config();

// Decoder-only autoregressive transformer over FullZ rows: causal
// self-attention, cross-attention against the expanded conditioning tokens,
// pre-norm blocks, continuous (L2) row regression.
class ArgenModel {
public:
    ArgenModel(const ArgenConfig& cfg, uint64_t init_seed);
    ArgenModel(const ArgenConfig& cfg, nn::ParameterStore store);  // checkpoint load path

    const ArgenConfig& config() const { return cfg_; }
    nn::ParameterStore& store() { return store_; }
    const nn::ParameterStore& store() const { return store_; }

    // Expands the 7 normalized features into [7, d_cond] conditioning tokens.
    nn::Tensor encode_condition(const std::array<double, 7>& cond);

    // prefix: rows starting with the start token; returns one predicted next
    // row per input position, width row_width.
    nn::Tensor decoder_forward(const nn::Tensor& prefix, const std::array<double, 7>& cond);
    nn::Tensor backward(const nn::Tensor& d_out);

private:
    struct Block {
        nn::LayerNorm norm_self, norm_cross, norm_ff;
        nn::MultiheadAttention self_attn, cross_attn;
        nn::FeedForward ff;
    };

    ArgenConfig cfg_;
    nn::ParameterStore store_;
    nn::Param* cond_embed_ = nullptr;  // per-feature identity, [7, d_cond]
    nn::Linear in_proj_;
    nn::Linear cond_ff_in_;
    nn::SiLU cond_act_;
    nn::Linear cond_ff_out_;
    std::vector<Block> blocks_;
    nn::LayerNorm final_norm_;
    nn::Linear out_proj_;
    nn::Tensor cond_tokens_cache_;

    void build(Rng* init);
};

struct ArgenBatchItem {
    const FullZ* z;  // with start token
    std::array<double, 7> cond;
};

// Teacher forcing: position p predicts data row p+1; MSE over all N rows
// (padding rows included). Applies one Adam update.
double argen_train_step(ArgenModel& model, const std::vector<ArgenBatchItem>& batch,
                        const nn::AdamConfig& adam);

double argen_eval_loss(ArgenModel& model, const std::vector<ArgenBatchItem>& batch);

// Plain squared-error-per-element between predictions and targets.
double ar_loss(const nn::Tensor& predictions, const nn::Tensor& targets);

struct GenerationTrace {
    FullZ z;                       // N emitted rows, no token
    std::vector<double> row_rmse;  // per-row magnitude diagnostic
};

// Greedy deterministic rollout: start token, append each predicted row, stop
// after N rows.
GenerationTrace argen_rollout(ArgenModel& model, const std::array<double, 7>& cond);

// Rollout plus zspace decode into a repaired, validated sample.
DecodeResult argen_generate(ArgenModel& model, const std::array<double, 7>& cond_norm,
                            const NormalizationParams& params);

}  // namespace webgen
