#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "webgen/nn/layers.hpp"
#include "webgen/zspace.hpp"

namespace webgen {

inline constexpr int kDiffusionSteps = 96;  // F

// Per-step noise standard deviations, indexed 1..F via sigma(i). Denoising
// runs i = F..1, along which sigma is nonincreasing.
struct NoiseSchedule {
    std::vector<double> sigmas;  // sigmas[i-1] = sigma_i

    static NoiseSchedule geometric(int steps = kDiffusionSteps, double sigma_min = 0.01,
                                   double sigma_max = 1.0);

    int steps() const { return static_cast<int>(sigmas.size()); }
    double sigma(int i) const { return sigmas[i - 1]; }
    double total_variance() const;      // sum of sigma_k^2
    double mean_step_variance() const;  // (1/F) sum of sigma_k^2
};

// Conditioning signal for the denoiser: the 7 normalized features plus the
// step index, turned into per-feature Fourier tokens with learned identities.
inline constexpr int kCondTokens = 8;
inline constexpr double kCondFourierScale = 32.0;

struct UNetConfig {
    int in_width = kSparseWidth;  // row width of the representation
    int length = kMaxNodes;       // node axis, downsampled 64 -> 16 -> 4
    int channels = 32;
    std::array<int, 3> multipliers{1, 2, 4};
    int resnet_blocks = 1;  // per level
    int heads = 4;
    int d_cond = 64;

    int level_channels(int level) const { return channels * multipliers[level]; }
};

UNetConfig desk_unet_config(int in_width);
UNetConfig paper_unet_config(int in_width);

// 1D U-Net over the node axis: stride-4 conv downsampling with channel
// multipliers [1,2,4], ResNet blocks, self-attention plus cross-attention
// against the conditioning tokens at the reduced levels, symmetric decoder
// with skip connections. Input and output shapes match (noise prediction).
class UNet {
public:
    UNet(nn::ParameterStore& store, const UNetConfig& cfg, Rng* init = nullptr);

    nn::Tensor forward(const nn::Tensor& z, int t_index, const std::array<double, 7>& cond);
    // Backpropagates the loss gradient; parameter gradients land in the store.
    nn::Tensor backward(const nn::Tensor& d_out);

    const UNetConfig& config() const { return cfg_; }

private:
    struct ResBlock {
        nn::LayerNorm norm1, norm2;
        nn::SiLU act1, act2;
        nn::Conv1d conv1, conv2;
        nn::Linear proj;  // 1x1 skip projection when channel counts differ
        bool has_proj = false;
        nn::Tensor x_cache;

        nn::Tensor forward(const nn::Tensor& x);
        nn::Tensor backward(const nn::Tensor& dy);
    };
    struct AttnBlock {
        nn::LayerNorm norm_self, norm_cross;
        nn::MultiheadAttention self_attn, cross_attn;

        nn::Tensor forward(const nn::Tensor& x, const nn::Tensor& cond);
        nn::Tensor backward(const nn::Tensor& dy, nn::Tensor& d_cond);
    };

    ResBlock make_resblock(const std::string& name, int cin, int cout, Rng* init);
    AttnBlock make_attnblock(const std::string& name, int ch, Rng* init);

    nn::Tensor cond_tokens(int t_index, const std::array<double, 7>& cond) const;

    UNetConfig cfg_;
    nn::ParameterStore* store_;
    nn::Param* cond_embed_;  // [kCondTokens, d_cond]

    nn::Conv1d stem_;
    std::vector<ResBlock> enc0_;
    nn::Conv1d down1_;
    std::vector<ResBlock> enc1_;
    AttnBlock enc1_attn_;
    nn::Conv1d down2_;
    ResBlock mid_block1_;
    AttnBlock mid_attn_;
    ResBlock mid_block2_;
    nn::Conv1d up1_conv_;
    std::vector<ResBlock> dec1_;
    AttnBlock dec1_attn_;
    nn::Conv1d up0_conv_;
    std::vector<ResBlock> dec0_;
    nn::LayerNorm head_norm_;
    nn::Conv1d head_conv_;

    // forward caches
    nn::Tensor cond_cache_;
    nn::Tensor skip0_, skip1_;
    int skip1_rows_ = 0, skip0_rows_ = 0;
};

enum class DiffusionKind { Sparse, Full };

// Model 1 (sparse rows) / Model 2 (full adjacency rows): a U-Net denoiser
// plus its schedule, trained to predict the per-step added noise.
class DiffusionModel {
public:
    DiffusionModel(DiffusionKind kind, const UNetConfig& cfg, const NoiseSchedule& schedule,
                   uint64_t init_seed);
    // Binds to parameters already present in `store` (checkpoint load path).
    DiffusionModel(DiffusionKind kind, const UNetConfig& cfg, const NoiseSchedule& schedule,
                   nn::ParameterStore store);

    DiffusionKind kind() const { return kind_; }
    const UNetConfig& config() const { return cfg_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    nn::ParameterStore& store() { return store_; }
    const nn::ParameterStore& store() const { return store_; }
    UNet& net() { return *net_; }

private:
    DiffusionKind kind_;
    UNetConfig cfg_;
    NoiseSchedule schedule_;
    nn::ParameterStore store_;
    std::unique_ptr<UNet> net_;
};

// z_i = z0 + sum_{k<=i} eps_k with eps_k ~ N(0, sigma_k^2) elementwise.
// Returns z_i and eps_i, the step-i noise that is the training target.
struct ForwardNoise {
    nn::Tensor z;
    nn::Tensor target;
};
ForwardNoise forward_noise(const nn::Tensor& z0, int i, const NoiseSchedule& schedule, Rng& rng);

struct DiffusionBatchItem {
    const nn::Tensor* z0;
    std::array<double, 7> cond;
};

// One optimizer step over the batch; returns the mean per-element MSE.
double diffusion_train_step(DiffusionModel& model, const std::vector<DiffusionBatchItem>& batch,
                            Rng& rng, const nn::AdamConfig& adam);

// Evaluation-only loss over a batch (no parameter update).
double diffusion_eval_loss(DiffusionModel& model, const std::vector<DiffusionBatchItem>& batch,
                           Rng& rng);

// Reverse chain: z_F ~ N(0, total_variance I), then z_{i-1} = z_i - eps'.
// The final estimate is clamped to [-1.05, 1.05].
nn::Tensor denoise_sample(DiffusionModel& model, const std::array<double, 7>& cond, Rng& rng);

// Noise-removal iteration with a caller-supplied predictor; denoise_sample is
// this with the trained U-Net. Exposed so an oracle predictor can drive it.
nn::Tensor denoise_with(const std::function<nn::Tensor(const nn::Tensor&, int)>& predict,
                        const nn::Tensor& z_init, int steps);

// Sampled graph decoded from a trained model.
DecodeResult diffusion_generate(DiffusionModel& model, const std::array<double, 7>& cond_norm,
                                const NormalizationParams& params, Rng& rng);

}  // namespace webgen
