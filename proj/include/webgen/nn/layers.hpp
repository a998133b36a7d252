#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "webgen/graph.hpp"  // Error
#include "webgen/nn/tensor.hpp"
#include "webgen/rng.hpp"

namespace webgen::nn {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m;  // Adam first moment
    Tensor v;  // Adam second moment
};

// Named parameters plus their Adam state. Layers bind to entries by name, so
// several model instances can share one store (same weights, distinct
// activation caches).
class ParameterStore {
public:
    Param& create_or_bind(const std::string& name, const std::vector<int>& shape);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }

    void zero_grads();
    // Bias-corrected Adam update over every parameter; steps the shared counter.
    void adam_step(const AdamConfig& cfg);

    long step_count() const { return step_; }
    void set_step_count(long s) { step_ = s; }

    std::map<std::string, Param>& entries() { return params_; }
    const std::map<std::string, Param>& entries() const { return params_; }

    size_t parameter_count() const;

private:
    std::map<std::string, Param> params_;
    long step_ = 0;
};

void xavier_init(Tensor& t, int fan_in, int fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// Layers. forward() caches what backward() needs; backward() accumulates
// parameter gradients into the store and returns the input gradient.
// ---------------------------------------------------------------------------

class Linear {
public:
    Linear() = default;
    Linear(ParameterStore& st, const std::string& prefix, int in, int out, Rng* init = nullptr);

    Tensor forward(const Tensor& x);   // [rows, in] -> [rows, out]
    Tensor backward(const Tensor& dy);

    int in_dim() const { return in_; }
    int out_dim() const { return out_; }

private:
    Param* W_ = nullptr;
    Param* b_ = nullptr;
    Tensor x_cache_;
    int in_ = 0, out_ = 0;
};

// 1D convolution along the row axis, kernel size 3, zero same-padding.
// Stride 1 preserves length; stride 4 downsamples (used for 64 -> 16 -> 4).
class Conv1d {
public:
    static constexpr int kKernel = 3;

    Conv1d() = default;
    Conv1d(ParameterStore& st, const std::string& prefix, int in_ch, int out_ch, int stride,
           Rng* init = nullptr);

    Tensor forward(const Tensor& x);   // [L, in_ch] -> [L_out, out_ch]
    Tensor backward(const Tensor& dy);

    static int out_length(int length, int stride) { return (length + 2 - kKernel) / stride + 1; }

private:
    Param* K_ = nullptr;  // [out_ch, in_ch, 3]
    Param* b_ = nullptr;
    Tensor x_cache_;
    int in_ch_ = 0, out_ch_ = 0, stride_ = 1;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ParameterStore& st, const std::string& prefix, int dim);

    Tensor forward(const Tensor& x);   // normalizes each row over the last dim
    Tensor backward(const Tensor& dy);

private:
    Param* gamma_ = nullptr;
    Param* beta_ = nullptr;
    Tensor xhat_cache_;
    Tensor inv_std_cache_;
    int dim_ = 0;
    static constexpr double kEps = 1e-5;
};

class SiLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    Tensor x_cache_;
};

enum class MaskMode { None, Causal };

struct AttentionConfig {
    int query_dim = 0;   // width of the query-side input
    int kv_dim = 0;      // width of the key/value-side input
    int out_dim = 0;     // width of the output
    int heads = 1;
    int head_dim = 0;    // d_q = d_k = d_v per head
    MaskMode mask = MaskMode::None;
};

// Scaled dot-product attention in multi-headed form. Self-attention passes
// the same tensor for both inputs; cross-attention feeds conditioning tokens
// on the key/value side.
class MultiheadAttention {
public:
    MultiheadAttention() = default;
    MultiheadAttention(ParameterStore& st, const std::string& prefix, const AttentionConfig& cfg,
                       Rng* init = nullptr);

    Tensor forward(const Tensor& q_in, const Tensor& kv_in);  // [Lq, out_dim]
    // Returns d(q_in); d(kv_in) written to the out parameter.
    Tensor backward(const Tensor& dy, Tensor& d_kv_in);

    // Row-stochastic attention weights of head h from the last forward.
    const Tensor& weights(int h) const { return attn_[h]; }
    const AttentionConfig& config() const { return cfg_; }

private:
    AttentionConfig cfg_;
    Param* Wq_ = nullptr;
    Param* Wk_ = nullptr;
    Param* Wv_ = nullptr;
    Param* Wo_ = nullptr;
    Param* bq_ = nullptr;
    Param* bk_ = nullptr;
    Param* bv_ = nullptr;
    Param* bo_ = nullptr;
    Tensor q_in_, kv_in_, Q_, K_, V_, ctx_;
    std::vector<Tensor> attn_;  // per-head [Lq, Lk]
};

// Two-layer feed-forward with SiLU, the transformer-style MLP.
class FeedForward {
public:
    FeedForward() = default;
    FeedForward(ParameterStore& st, const std::string& prefix, int dim, int hidden,
                Rng* init = nullptr);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    Linear in_;
    SiLU act_;
    Linear out_;
};

// ---------------------------------------------------------------------------
// Fourier embeddings
// ---------------------------------------------------------------------------

// Interleaved sin/cos at geometrically spaced frequencies (base 10000):
// out[2k] = sin(x * w_k), out[2k+1] = cos(x * w_k). dim must be even.
std::vector<double> fourier_embed(double x, int dim);

// Vector form: mean of the per-component embeddings (additive combination).
std::vector<double> fourier_embed(const std::vector<double>& c, int dim);

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckEntry {
    Tensor* value;
    const Tensor* grad;
    std::string name;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
    std::string worst;

    bool passes(double tol) const { return checked > 0 && max_rel_err <= tol; }
};

// Central finite differences against analytic gradients. grad_fn must run
// forward+backward and leave gradients in the entries; loss_fn must run the
// same forward and return the scalar loss. With max_coords > 0 only a
// deterministic subsample of coordinates per tensor is probed.
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           const std::vector<GradCheckEntry>& entries, double h = 1e-5,
                           int max_coords = 0, uint64_t seed = 12345);

}  // namespace webgen::nn
