#include "webgen/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace webgen::nn {

Param& ParameterStore::create_or_bind(const std::string& name, const std::vector<int>& shape) {
    auto it = params_.find(name);
    if (it != params_.end()) {
        if (it->second.value.shape != shape) {
            throw Error("parameter shape mismatch for " + name + ": have " +
                        it->second.value.shape_str() + ", want " + Tensor(shape).shape_str());
        }
        return it->second;
    }
    Param p;
    p.name = name;
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    p.m = Tensor(shape);
    p.v = Tensor(shape);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParameterStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter: " + name);
    return it->second;
}

const Param& ParameterStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter: " + name);
    return it->second;
}

void ParameterStore::zero_grads() {
    for (auto& [name, p] : params_) p.grad.zero();
}

void ParameterStore::adam_step(const AdamConfig& cfg) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (auto& [name, p] : params_) {
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.v[i];
            p.m.v[i] = cfg.beta1 * p.m.v[i] + (1.0 - cfg.beta1) * g;
            p.v.v[i] = cfg.beta2 * p.v.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = p.m.v[i] / bc1;
            const double vhat = p.v.v[i] / bc2;
            p.value.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

size_t ParameterStore::parameter_count() const {
    size_t n = 0;
    for (const auto& [name, p] : params_) n += p.value.size();
    return n;
}

void xavier_init(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : t.v) x = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------

Linear::Linear(ParameterStore& st, const std::string& prefix, int in, int out, Rng* init)
    : in_(in), out_(out) {
    bool fresh = !st.has(prefix + ".W");
    W_ = &st.create_or_bind(prefix + ".W", {in, out});
    b_ = &st.create_or_bind(prefix + ".b", {out});
    if (fresh && init) xavier_init(W_->value, in, out, *init);
}

Tensor Linear::forward(const Tensor& x) {
    if (x.cols() != in_) throw Error("Linear: input width " + std::to_string(x.cols()) +
                                     " != " + std::to_string(in_));
    x_cache_ = x;
    Tensor y({x.rows(), out_});
    matmul(x.v.data(), W_->value.v.data(), y.v.data(), x.rows(), in_, out_);
    for (int r = 0; r < y.rows(); ++r) {
        for (int c = 0; c < out_; ++c) y.at(r, c) += b_->value.v[c];
    }
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    const int rows = x_cache_.rows();
    // dW += x^T dy ; db += colsum(dy) ; dx = dy W^T
    matmul_at_acc(x_cache_.v.data(), dy.v.data(), W_->grad.v.data(), in_, rows, out_);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < out_; ++c) b_->grad.v[c] += dy.at(r, c);
    }
    Tensor dx({rows, in_});
    matmul_bt(dy.v.data(), W_->value.v.data(), dx.v.data(), rows, out_, in_);
    return dx;
}

// ---------------------------------------------------------------------------

Conv1d::Conv1d(ParameterStore& st, const std::string& prefix, int in_ch, int out_ch, int stride,
               Rng* init)
    : in_ch_(in_ch), out_ch_(out_ch), stride_(stride) {
    if (stride != 1 && stride != 4) throw Error("Conv1d: stride must be 1 or 4");
    bool fresh = !st.has(prefix + ".K");
    K_ = &st.create_or_bind(prefix + ".K", {out_ch, in_ch, kKernel});
    b_ = &st.create_or_bind(prefix + ".b", {out_ch});
    if (fresh && init) xavier_init(K_->value, in_ch * kKernel, out_ch, *init);
}

Tensor Conv1d::forward(const Tensor& x) {
    if (x.cols() != in_ch_) throw Error("Conv1d: channel mismatch");
    x_cache_ = x;
    const int L = x.rows();
    const int Lo = out_length(L, stride_);
    Tensor y({Lo, out_ch_});
    const double* k = K_->value.v.data();
    for (int lo = 0; lo < Lo; ++lo) {
        for (int t = 0; t < kKernel; ++t) {
            const int li = lo * stride_ + t - 1;
            if (li < 0 || li >= L) continue;
            const double* xr = &x.v[static_cast<size_t>(li) * in_ch_];
            double* yr = &y.v[static_cast<size_t>(lo) * out_ch_];
            for (int co = 0; co < out_ch_; ++co) {
                const double* kr = k + (static_cast<size_t>(co) * in_ch_ + 0) * kKernel + t;
                double acc = 0.0;
                for (int ci = 0; ci < in_ch_; ++ci) acc += xr[ci] * kr[static_cast<size_t>(ci) * kKernel];
                yr[co] += acc;
            }
        }
        for (int co = 0; co < out_ch_; ++co) y.at(lo, co) += b_->value.v[co];
    }
    return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
    const int L = x_cache_.rows();
    const int Lo = dy.rows();
    Tensor dx({L, in_ch_});
    double* dk = K_->grad.v.data();
    const double* k = K_->value.v.data();
    for (int lo = 0; lo < Lo; ++lo) {
        const double* dyr = &dy.v[static_cast<size_t>(lo) * out_ch_];
        for (int co = 0; co < out_ch_; ++co) b_->grad.v[co] += dyr[co];
        for (int t = 0; t < kKernel; ++t) {
            const int li = lo * stride_ + t - 1;
            if (li < 0 || li >= L) continue;
            const double* xr = &x_cache_.v[static_cast<size_t>(li) * in_ch_];
            double* dxr = &dx.v[static_cast<size_t>(li) * in_ch_];
            for (int co = 0; co < out_ch_; ++co) {
                const double g = dyr[co];
                if (g == 0.0) continue;
                const size_t base = (static_cast<size_t>(co) * in_ch_) * kKernel + t;
                for (int ci = 0; ci < in_ch_; ++ci) {
                    dk[base + static_cast<size_t>(ci) * kKernel] += g * xr[ci];
                    dxr[ci] += g * k[base + static_cast<size_t>(ci) * kKernel];
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------

LayerNorm::LayerNorm(ParameterStore& st, const std::string& prefix, int dim) : dim_(dim) {
    bool fresh = !st.has(prefix + ".gamma");
    gamma_ = &st.create_or_bind(prefix + ".gamma", {dim});
    beta_ = &st.create_or_bind(prefix + ".beta", {dim});
    if (fresh) gamma_->value.fill(1.0);
}

Tensor LayerNorm::forward(const Tensor& x) {
    if (x.cols() != dim_) throw Error("LayerNorm: width mismatch");
    const int rows = x.rows();
    xhat_cache_ = Tensor({rows, dim_});
    inv_std_cache_ = Tensor({rows});
    Tensor y({rows, dim_});
    for (int r = 0; r < rows; ++r) {
        const double* xr = &x.v[static_cast<size_t>(r) * dim_];
        double mean = 0.0;
        for (int c = 0; c < dim_; ++c) mean += xr[c];
        mean /= dim_;
        double var = 0.0;
        for (int c = 0; c < dim_; ++c) {
            double d = xr[c] - mean;
            var += d * d;
        }
        var /= dim_;
        const double inv = 1.0 / std::sqrt(var + kEps);
        inv_std_cache_.v[r] = inv;
        for (int c = 0; c < dim_; ++c) {
            double xh = (xr[c] - mean) * inv;
            xhat_cache_.at(r, c) = xh;
            y.at(r, c) = gamma_->value.v[c] * xh + beta_->value.v[c];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& dy) {
    const int rows = dy.rows();
    Tensor dx({rows, dim_});
    for (int r = 0; r < rows; ++r) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int c = 0; c < dim_; ++c) {
            const double dyv = dy.at(r, c);
            const double xh = xhat_cache_.at(r, c);
            gamma_->grad.v[c] += dyv * xh;
            beta_->grad.v[c] += dyv;
            const double dxh = dyv * gamma_->value.v[c];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
        }
        const double inv = inv_std_cache_.v[r];
        for (int c = 0; c < dim_; ++c) {
            const double dxh = dy.at(r, c) * gamma_->value.v[c];
            const double xh = xhat_cache_.at(r, c);
            dx.at(r, c) = inv * (dxh - sum_dxhat / dim_ - xh * sum_dxhat_xhat / dim_);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------

Tensor SiLU::forward(const Tensor& x) {
    x_cache_ = x;
    Tensor y = x;
    for (double& v : y.v) v = v / (1.0 + std::exp(-v));
    return y;
}

Tensor SiLU::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i) {
        const double x = x_cache_.v[i];
        const double s = 1.0 / (1.0 + std::exp(-x));
        dx.v[i] *= s * (1.0 + x * (1.0 - s));
    }
    return dx;
}

// ---------------------------------------------------------------------------

MultiheadAttention::MultiheadAttention(ParameterStore& st, const std::string& prefix,
                                       const AttentionConfig& cfg, Rng* init)
    : cfg_(cfg) {
    const int H = cfg.heads * cfg.head_dim;
    bool fresh = !st.has(prefix + ".Wq");
    Wq_ = &st.create_or_bind(prefix + ".Wq", {cfg.query_dim, H});
    Wk_ = &st.create_or_bind(prefix + ".Wk", {cfg.kv_dim, H});
    Wv_ = &st.create_or_bind(prefix + ".Wv", {cfg.kv_dim, H});
    Wo_ = &st.create_or_bind(prefix + ".Wo", {H, cfg.out_dim});
    bq_ = &st.create_or_bind(prefix + ".bq", {H});
    bk_ = &st.create_or_bind(prefix + ".bk", {H});
    bv_ = &st.create_or_bind(prefix + ".bv", {H});
    bo_ = &st.create_or_bind(prefix + ".bo", {cfg.out_dim});
    if (fresh && init) {
        xavier_init(Wq_->value, cfg.query_dim, H, *init);
        xavier_init(Wk_->value, cfg.kv_dim, H, *init);
        xavier_init(Wv_->value, cfg.kv_dim, H, *init);
        xavier_init(Wo_->value, H, cfg.out_dim, *init);
    }
}

namespace {

Tensor project(const Tensor& x, const Param& W, const Param& b) {
    Tensor y({x.rows(), W.value.cols()});
    matmul(x.v.data(), W.value.v.data(), y.v.data(), x.rows(), x.cols(), W.value.cols());
    for (int r = 0; r < y.rows(); ++r) {
        for (int c = 0; c < y.cols(); ++c) y.at(r, c) += b.value.v[c];
    }
    return y;
}

void project_backward(const Tensor& x, Param& W, Param& b, const Tensor& dy, Tensor& dx_acc) {
    matmul_at_acc(x.v.data(), dy.v.data(), W.grad.v.data(), x.cols(), x.rows(), dy.cols());
    for (int r = 0; r < dy.rows(); ++r) {
        for (int c = 0; c < dy.cols(); ++c) b.grad.v[c] += dy.at(r, c);
    }
    Tensor dx({x.rows(), x.cols()});
    matmul_bt(dy.v.data(), W.value.v.data(), dx.v.data(), dy.rows(), dy.cols(), x.cols());
    dx_acc += dx;
}

}  // namespace

Tensor MultiheadAttention::forward(const Tensor& q_in, const Tensor& kv_in) {
    if (cfg_.mask == MaskMode::Causal && q_in.rows() != kv_in.rows()) {
        throw Error("attention: causal mask needs equal sequence lengths");
    }
    q_in_ = q_in;
    kv_in_ = kv_in;
    Q_ = project(q_in, *Wq_, *bq_);
    K_ = project(kv_in, *Wk_, *bk_);
    V_ = project(kv_in, *Wv_, *bv_);

    const int Lq = q_in.rows(), Lk = kv_in.rows();
    const int dh = cfg_.head_dim, H = cfg_.heads * dh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    ctx_ = Tensor({Lq, H});
    attn_.assign(cfg_.heads, Tensor({Lq, Lk}));

    for (int h = 0; h < cfg_.heads; ++h) {
        Tensor& A = attn_[h];
        for (int i = 0; i < Lq; ++i) {
            const double* qi = &Q_.v[static_cast<size_t>(i) * H + h * dh];
            const int limit = cfg_.mask == MaskMode::Causal ? i + 1 : Lk;
            double row_max = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < limit; ++j) {
                const double* kj = &K_.v[static_cast<size_t>(j) * H + h * dh];
                double s = 0.0;
                for (int d = 0; d < dh; ++d) s += qi[d] * kj[d];
                s *= scale;
                A.at(i, j) = s;
                row_max = std::max(row_max, s);
            }
            double denom = 0.0;
            for (int j = 0; j < limit; ++j) {
                double e = std::exp(A.at(i, j) - row_max);
                A.at(i, j) = e;
                denom += e;
            }
            for (int j = 0; j < limit; ++j) A.at(i, j) /= denom;
            for (int j = limit; j < Lk; ++j) A.at(i, j) = 0.0;  // masked out

            double* ci = &ctx_.v[static_cast<size_t>(i) * H + h * dh];
            for (int d = 0; d < dh; ++d) ci[d] = 0.0;
            for (int j = 0; j < limit; ++j) {
                const double a = A.at(i, j);
                if (a == 0.0) continue;
                const double* vj = &V_.v[static_cast<size_t>(j) * H + h * dh];
                for (int d = 0; d < dh; ++d) ci[d] += a * vj[d];
            }
        }
    }
    return project(ctx_, *Wo_, *bo_);
}

Tensor MultiheadAttention::backward(const Tensor& dy, Tensor& d_kv_in) {
    const int Lq = q_in_.rows(), Lk = kv_in_.rows();
    const int dh = cfg_.head_dim, H = cfg_.heads * dh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // Through the output projection.
    Tensor d_ctx({Lq, H});
    {
        matmul_at_acc(ctx_.v.data(), dy.v.data(), Wo_->grad.v.data(), H, Lq, cfg_.out_dim);
        for (int r = 0; r < Lq; ++r) {
            for (int c = 0; c < cfg_.out_dim; ++c) bo_->grad.v[c] += dy.at(r, c);
        }
        matmul_bt(dy.v.data(), Wo_->value.v.data(), d_ctx.v.data(), Lq, cfg_.out_dim, H);
    }

    Tensor dQ({Lq, H}), dK({Lk, H}), dV({Lk, H});
    for (int h = 0; h < cfg_.heads; ++h) {
        const Tensor& A = attn_[h];
        for (int i = 0; i < Lq; ++i) {
            const int limit = cfg_.mask == MaskMode::Causal ? i + 1 : Lk;
            const double* dci = &d_ctx.v[static_cast<size_t>(i) * H + h * dh];

            // dA[i,j] = dci . V_j ; dV_j += A[i,j] * dci
            double dot_dA_A = 0.0;
            std::vector<double> dA(limit);
            for (int j = 0; j < limit; ++j) {
                const double* vj = &V_.v[static_cast<size_t>(j) * H + h * dh];
                double s = 0.0;
                for (int d = 0; d < dh; ++d) s += dci[d] * vj[d];
                dA[j] = s;
                dot_dA_A += s * A.at(i, j);
                double* dvj = &dV.v[static_cast<size_t>(j) * H + h * dh];
                const double a = A.at(i, j);
                for (int d = 0; d < dh; ++d) dvj[d] += a * dci[d];
            }
            // Softmax backward: dS = A o (dA - sum(dA o A)), then through the
            // scaled dot product.
            const double* qi = &Q_.v[static_cast<size_t>(i) * H + h * dh];
            double* dqi = &dQ.v[static_cast<size_t>(i) * H + h * dh];
            for (int j = 0; j < limit; ++j) {
                const double ds = A.at(i, j) * (dA[j] - dot_dA_A) * scale;
                if (ds == 0.0) continue;
                const double* kj = &K_.v[static_cast<size_t>(j) * H + h * dh];
                double* dkj = &dK.v[static_cast<size_t>(j) * H + h * dh];
                for (int d = 0; d < dh; ++d) {
                    dqi[d] += ds * kj[d];
                    dkj[d] += ds * qi[d];
                }
            }
        }
    }

    Tensor dq_in({Lq, cfg_.query_dim});
    d_kv_in = Tensor({Lk, cfg_.kv_dim});
    project_backward(q_in_, *Wq_, *bq_, dQ, dq_in);
    project_backward(kv_in_, *Wk_, *bk_, dK, d_kv_in);
    project_backward(kv_in_, *Wv_, *bv_, dV, d_kv_in);
    return dq_in;
}

// ---------------------------------------------------------------------------

FeedForward::FeedForward(ParameterStore& st, const std::string& prefix, int dim, int hidden,
                         Rng* init)
    : in_(st, prefix + ".in", dim, hidden, init), out_(st, prefix + ".out", hidden, dim, init) {}

Tensor FeedForward::forward(const Tensor& x) { return out_.forward(act_.forward(in_.forward(x))); }

Tensor FeedForward::backward(const Tensor& dy) {
    return in_.backward(act_.backward(out_.backward(dy)));
}

// ---------------------------------------------------------------------------

std::vector<double> fourier_embed(double x, int dim) {
    if (dim <= 0 || dim % 2 != 0) throw Error("fourier_embed: dim must be positive and even");
    std::vector<double> out(dim);
    for (int k = 0; k < dim / 2; ++k) {
        double omega = std::pow(10000.0, -2.0 * k / dim);
        out[2 * k] = std::sin(x * omega);
        out[2 * k + 1] = std::cos(x * omega);
    }
    return out;
}

std::vector<double> fourier_embed(const std::vector<double>& c, int dim) {
    if (c.empty()) throw Error("fourier_embed: empty input");
    std::vector<double> out(dim, 0.0);
    for (double x : c) {
        auto e = fourier_embed(x, dim);
        for (int i = 0; i < dim; ++i) out[i] += e[i];
    }
    for (double& v : out) v /= static_cast<double>(c.size());
    return out;
}

// ---------------------------------------------------------------------------

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           const std::vector<GradCheckEntry>& entries, double h, int max_coords,
                           uint64_t seed) {
    grad_fn();
    // Snapshot analytic gradients before probing mutates state.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(entries.size());
    for (const auto& e : entries) analytic.push_back(e.grad->v);

    GradCheckReport report;
    Rng rng(seed);
    for (size_t ei = 0; ei < entries.size(); ++ei) {
        Tensor& value = *entries[ei].value;
        const size_t n = value.size();
        std::vector<size_t> coords;
        if (max_coords <= 0 || n <= static_cast<size_t>(max_coords)) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            for (int i = 0; i < max_coords; ++i) coords.push_back(rng.next_u64() % n);
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        }
        for (size_t idx : coords) {
            const double keep = value.v[idx];
            value.v[idx] = keep + h;
            const double lp = loss_fn();
            value.v[idx] = keep - h;
            const double lm = loss_fn();
            value.v[idx] = keep;
            const double numeric = (lp - lm) / (2.0 * h);
            const double a = analytic[ei][idx];
            const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = entries[ei].name + "[" + std::to_string(idx) + "]";
            }
        }
    }
    return report;
}

}  // namespace webgen::nn
