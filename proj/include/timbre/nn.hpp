#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "timbre/kernels.hpp"
#include "timbre/rng.hpp"
#include "timbre/tensor.hpp"

namespace timbre::nn {

struct NnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { train, infer };
enum class Padding { valid, same_time_only, same_both };

// FULL pool extent: collapse the whole axis.
constexpr int kPoolFull = 0;

template <typename T>
const kern::Kernels<T>& kernels();
template <>
inline const kern::Kernels<float>& kernels<float>() { return kern::f32(); }
template <>
inline const kern::Kernels<double>& kernels<double>() { return kern::f64(); }

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool decay = false;  // weight decay applies to conv filters and dense weights only

    void reset_grad() {
        grad.shape = value.shape;
        grad.data.assign(value.numel(), T(0));
    }
};

// Named tensor serialized into checkpoints. Covers trainable parameters plus
// batch-norm running statistics.
template <typename T>
struct StateRef {
    std::string name;
    Tensor<T>* tensor;
};

template <typename T>
struct Layer {
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
    virtual void collect_params(std::vector<Param<T>*>& out) {}
    virtual void collect_state(std::vector<StateRef<T>>& out) {}
};

// ---------------------------------------------------------------------------
// Convolution (cross-correlation), input B x C x M x N, filters F x C x m x n.

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::string name, int in_channels, int n_filters, int fm, int fn, Padding padding,
           bool needs_input_grad = true)
        : padding_(padding), in_channels_(in_channels), n_filters_(n_filters), fm_(fm), fn_(fn),
          needs_input_grad_(needs_input_grad) {
        if (fm < 1 || fn < 1) throw NnError("conv: filter dims must be >= 1");
        w_.name = name + ".w";
        w_.value = Tensor<T>({n_filters, in_channels, fm, fn});
        w_.decay = true;
        b_.name = name + ".b";
        b_.value = Tensor<T>({n_filters});
    }

    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / (double(in_channels_) * fm_ * fn_));
        for (auto& v : w_.value.data) v = static_cast<T>(rng.gaussian() * stddev);
        b_.value.fill(T(0));
    }

    int pad_m() const { return padding_ == Padding::same_both ? (fm_ - 1) / 2 : 0; }
    int pad_n() const { return padding_ == Padding::valid ? 0 : (fn_ - 1) / 2; }

    std::pair<int, int> out_dims(int M, int N) const {
        const int mo = padding_ == Padding::same_both ? M : M - fm_ + 1;
        const int no = padding_ == Padding::valid ? N - fn_ + 1 : N;
        if (mo < 1 || no < 1) throw NnError("conv: filter larger than input (shape underflow)");
        return {mo, no};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.ndim() != 4 || x.dim(1) != in_channels_)
            throw NnError("conv: expected B x " + std::to_string(in_channels_) + " x M x N input");
        x_ = x;
        const int B = x.dim(0), M = x.dim(2), N = x.dim(3);
        const auto [MO, NO] = out_dims(M, N);
        const int pm = pad_m(), pn = pad_n();
        const auto& k = kernels<T>();

        Tensor<T> y({B, n_filters_, MO, NO});
        for (int b = 0; b < B; ++b) {
            for (int f = 0; f < n_filters_; ++f) {
                T* ybase = y.ptr() + ((std::size_t(b) * n_filters_ + f) * MO) * NO;
                const T bias = b_.value.data[f];
                for (std::size_t i = 0; i < std::size_t(MO) * NO; ++i) ybase[i] = bias;
                for (int c = 0; c < in_channels_; ++c) {
                    const T* xbase = x.ptr() + ((std::size_t(b) * in_channels_ + c) * M) * N;
                    const T* wbase =
                        w_.value.ptr() + ((std::size_t(f) * in_channels_ + c) * fm_) * fn_;
                    for (int dm = 0; dm < fm_; ++dm) {
                        const int mo_lo = std::max(0, pm - dm);
                        const int mo_hi = std::min(MO, M + pm - dm);
                        for (int mo = mo_lo; mo < mo_hi; ++mo) {
                            const T* xrow = xbase + std::size_t(mo + dm - pm) * N;
                            T* yrow = ybase + std::size_t(mo) * NO;
                            for (int dn = 0; dn < fn_; ++dn) {
                                const T w = wbase[dm * fn_ + dn];
                                if (w == T(0)) continue;
                                const int no_lo = std::max(0, pn - dn);
                                const int no_hi = std::min(NO, N + pn - dn);
                                if (no_hi > no_lo)
                                    k.axpy(std::size_t(no_hi - no_lo), w,
                                           xrow + (no_lo + dn - pn), yrow + no_lo);
                            }
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int B = x_.dim(0), M = x_.dim(2), N = x_.dim(3);
        const auto [MO, NO] = out_dims(M, N);
        const int pm = pad_m(), pn = pad_n();
        const auto& k = kernels<T>();

        Tensor<T> gx;
        if (needs_input_grad_) gx = Tensor<T>({B, in_channels_, M, N});

        for (int b = 0; b < B; ++b) {
            for (int f = 0; f < n_filters_; ++f) {
                const T* gybase = gy.ptr() + ((std::size_t(b) * n_filters_ + f) * MO) * NO;
                T gb = T(0);
                for (std::size_t i = 0; i < std::size_t(MO) * NO; ++i) gb += gybase[i];
                b_.grad.data[f] += gb;
                for (int c = 0; c < in_channels_; ++c) {
                    const T* xbase = x_.ptr() + ((std::size_t(b) * in_channels_ + c) * M) * N;
                    T* gxbase = needs_input_grad_
                                    ? gx.ptr() + ((std::size_t(b) * in_channels_ + c) * M) * N
                                    : nullptr;
                    const T* wbase =
                        w_.value.ptr() + ((std::size_t(f) * in_channels_ + c) * fm_) * fn_;
                    T* gwbase = w_.grad.ptr() + ((std::size_t(f) * in_channels_ + c) * fm_) * fn_;
                    for (int dm = 0; dm < fm_; ++dm) {
                        const int mo_lo = std::max(0, pm - dm);
                        const int mo_hi = std::min(MO, M + pm - dm);
                        for (int mo = mo_lo; mo < mo_hi; ++mo) {
                            const T* xrow = xbase + std::size_t(mo + dm - pm) * N;
                            const T* gyrow = gybase + std::size_t(mo) * NO;
                            T* gxrow = gxbase ? gxbase + std::size_t(mo + dm - pm) * N : nullptr;
                            for (int dn = 0; dn < fn_; ++dn) {
                                const int no_lo = std::max(0, pn - dn);
                                const int no_hi = std::min(NO, N + pn - dn);
                                if (no_hi <= no_lo) continue;
                                const std::size_t len = std::size_t(no_hi - no_lo);
                                gwbase[dm * fn_ + dn] +=
                                    k.dot(len, gyrow + no_lo, xrow + (no_lo + dn - pn));
                                if (gxrow)
                                    k.axpy(len, wbase[dm * fn_ + dn], gyrow + no_lo,
                                           gxrow + (no_lo + dn - pn));
                            }
                        }
                    }
                }
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param<T>*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }
    void collect_state(std::vector<StateRef<T>>& out) override {
        out.push_back({w_.name, &w_.value});
        out.push_back({b_.name, &b_.value});
    }

    Param<T>& weights() { return w_; }
    Param<T>& bias() { return b_; }
    int n_filters() const { return n_filters_; }
    int filter_m() const { return fm_; }
    int filter_n() const { return fn_; }

private:
    Padding padding_;
    int in_channels_, n_filters_, fm_, fn_;
    bool needs_input_grad_;
    Param<T> w_, b_;
    Tensor<T> x_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Elu final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        y_ = x;
        for (auto& v : y_.data)
            if (v <= T(0)) v = std::exp(v) - T(1);
        return y_;
    }
    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i)
            if (y_.data[i] <= T(0)) gx.data[i] *= y_.data[i] + T(1);  // exp(x) = y + 1
        return gx;
    }

private:
    Tensor<T> y_;
};

// ---------------------------------------------------------------------------
// Non-overlapping max pooling. Extent kPoolFull collapses the axis. When an
// extent does not divide the axis, the trailing remainder is dropped (floor
// semantics, which the single-layer architectures rely on). Ties route the
// gradient to the first element in row-major scan order.

template <typename T>
class MaxPool final : public Layer<T> {
public:
    MaxPool(int pool_m, int pool_n) : pool_m_(pool_m), pool_n_(pool_n) {
        if (pool_m < 0 || pool_n < 0) throw NnError("maxpool: negative extent");
    }

    static std::pair<int, int> out_dims(int M, int N, int pool_m, int pool_n) {
        const int pm = pool_m == kPoolFull ? M : pool_m;
        const int pn = pool_n == kPoolFull ? N : pool_n;
        if (pm > M || pn > N) throw NnError("maxpool: extent larger than axis");
        return {M / pm, N / pn};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        in_shape_ = x.shape;
        const int B = x.dim(0), C = x.dim(1), M = x.dim(2), N = x.dim(3);
        const auto [MO, NO] = out_dims(M, N, pool_m_, pool_n_);
        const int pm = pool_m_ == kPoolFull ? M : pool_m_;
        const int pn = pool_n_ == kPoolFull ? N : pool_n_;

        Tensor<T> y({B, C, MO, NO});
        argmax_.assign(y.numel(), 0);
        std::size_t oi = 0;
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c) {
                const T* xc = x.ptr() + ((std::size_t(b) * C + c) * M) * N;
                for (int mo = 0; mo < MO; ++mo)
                    for (int no = 0; no < NO; ++no, ++oi) {
                        T best = xc[std::size_t(mo * pm) * N + no * pn];
                        std::size_t best_i = std::size_t(mo * pm) * N + no * pn;
                        for (int i = 0; i < pm; ++i)
                            for (int j = 0; j < pn; ++j) {
                                const std::size_t idx = std::size_t(mo * pm + i) * N + no * pn + j;
                                if (xc[idx] > best) {
                                    best = xc[idx];
                                    best_i = idx;
                                }
                            }
                        y.data[oi] = best;
                        argmax_[oi] = ((std::size_t(b) * C + c) * M) * N + best_i;
                    }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx(in_shape_);
        for (std::size_t i = 0; i < gy.data.size(); ++i) gx.data[argmax_[i]] += gy.data[i];
        return gx;
    }

private:
    int pool_m_, pool_n_;
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------
// Batch normalization over (batch, spatial) per channel, input B x C x M x N.

template <typename T>
class BatchNorm final : public Layer<T> {
public:
    BatchNorm(std::string name, int channels, double momentum = 0.9, double epsilon = 1e-5)
        : channels_(channels), momentum_(momentum), epsilon_(epsilon) {
        gamma_.name = name + ".gamma";
        gamma_.value = Tensor<T>({channels});
        gamma_.value.fill(T(1));
        beta_.name = name + ".beta";
        beta_.value = Tensor<T>({channels});
        running_mean_ = Tensor<T>({channels});
        running_var_ = Tensor<T>({channels});
        running_var_.fill(T(1));
        rm_name_ = name + ".running_mean";
        rv_name_ = name + ".running_var";
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        const int B = x.dim(0), C = x.dim(1), M = x.dim(2), N = x.dim(3);
        if (C != channels_) throw NnError("batchnorm: channel mismatch");
        const std::size_t spatial = std::size_t(M) * N;
        const std::size_t pop = std::size_t(B) * spatial;
        if (mode == Mode::train && pop < 2)
            throw NnError("batchnorm: train mode needs population >= 2");

        Tensor<T> y(x.shape);
        if (mode == Mode::train) {
            xhat_ = Tensor<T>(x.shape);
            invstd_.assign(C, T(0));
            pop_ = pop;
            for (int c = 0; c < C; ++c) {
                double sum = 0.0, sumsq = 0.0;
                for (int b = 0; b < B; ++b) {
                    const T* p = x.ptr() + ((std::size_t(b) * C + c) * spatial);
                    for (std::size_t i = 0; i < spatial; ++i) {
                        sum += double(p[i]);
                        sumsq += double(p[i]) * double(p[i]);
                    }
                }
                const double mean = sum / double(pop);
                const double var = std::max(0.0, sumsq / double(pop) - mean * mean);
                const T invstd = static_cast<T>(1.0 / std::sqrt(var + epsilon_));
                invstd_[c] = invstd;
                running_mean_.data[c] = static_cast<T>(momentum_ * running_mean_.data[c] +
                                                       (1.0 - momentum_) * mean);
                running_var_.data[c] =
                    static_cast<T>(momentum_ * running_var_.data[c] + (1.0 - momentum_) * var);
                const T g = gamma_.value.data[c], be = beta_.value.data[c], mu = static_cast<T>(mean);
                for (int b = 0; b < B; ++b) {
                    const T* p = x.ptr() + ((std::size_t(b) * C + c) * spatial);
                    T* xh = xhat_.ptr() + ((std::size_t(b) * C + c) * spatial);
                    T* yo = y.ptr() + ((std::size_t(b) * C + c) * spatial);
                    for (std::size_t i = 0; i < spatial; ++i) {
                        xh[i] = (p[i] - mu) * invstd;
                        yo[i] = g * xh[i] + be;
                    }
                }
            }
        } else {
            for (int c = 0; c < C; ++c) {
                const T invstd =
                    static_cast<T>(1.0 / std::sqrt(double(running_var_.data[c]) + epsilon_));
                const T g = gamma_.value.data[c], be = beta_.value.data[c];
                const T mu = running_mean_.data[c];
                for (int b = 0; b < B; ++b) {
                    const T* p = x.ptr() + ((std::size_t(b) * C + c) * spatial);
                    T* yo = y.ptr() + ((std::size_t(b) * C + c) * spatial);
                    for (std::size_t i = 0; i < spatial; ++i)
                        yo[i] = g * (p[i] - mu) * invstd + be;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int B = gy.dim(0), C = gy.dim(1), M = gy.dim(2), N = gy.dim(3);
        const std::size_t spatial = std::size_t(M) * N;
        Tensor<T> gx(gy.shape);
        for (int c = 0; c < C; ++c) {
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (int b = 0; b < B; ++b) {
                const T* g = gy.ptr() + ((std::size_t(b) * C + c) * spatial);
                const T* xh = xhat_.ptr() + ((std::size_t(b) * C + c) * spatial);
                for (std::size_t i = 0; i < spatial; ++i) {
                    sum_gy += double(g[i]);
                    sum_gy_xhat += double(g[i]) * double(xh[i]);
                }
            }
            gamma_.grad.data[c] += static_cast<T>(sum_gy_xhat);
            beta_.grad.data[c] += static_cast<T>(sum_gy);
            const double inv_pop = 1.0 / double(pop_);
            const double gam = double(gamma_.value.data[c]);
            const double istd = double(invstd_[c]);
            for (int b = 0; b < B; ++b) {
                const T* g = gy.ptr() + ((std::size_t(b) * C + c) * spatial);
                const T* xh = xhat_.ptr() + ((std::size_t(b) * C + c) * spatial);
                T* gxo = gx.ptr() + ((std::size_t(b) * C + c) * spatial);
                for (std::size_t i = 0; i < spatial; ++i)
                    gxo[i] = static_cast<T>(gam * istd *
                                            (double(g[i]) - inv_pop * sum_gy -
                                             double(xh[i]) * inv_pop * sum_gy_xhat));
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param<T>*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }
    void collect_state(std::vector<StateRef<T>>& out) override {
        out.push_back({gamma_.name, &gamma_.value});
        out.push_back({beta_.name, &beta_.value});
        out.push_back({rm_name_, &running_mean_});
        out.push_back({rv_name_, &running_var_});
    }

private:
    int channels_;
    double momentum_, epsilon_;
    Param<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    std::string rm_name_, rv_name_;
    Tensor<T> xhat_;
    std::vector<T> invstd_;
    std::size_t pop_ = 0;
};

// ---------------------------------------------------------------------------
// Inverted dropout; identity in inference mode.

template <typename T>
class Dropout final : public Layer<T> {
public:
    Dropout(double p, Rng* rng) : p_(p), rng_(rng) {
        if (p < 0.0 || p >= 1.0) throw NnError("dropout: p must be in [0, 1)");
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (mode == Mode::infer || p_ == 0.0) {
            mask_.clear();
            return x;
        }
        const T scale = static_cast<T>(1.0 / (1.0 - p_));
        Tensor<T> y = x;
        mask_.assign(x.numel(), T(0));
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            if (rng_->uniform() < p_) {
                y.data[i] = T(0);
            } else {
                mask_[i] = scale;
                y.data[i] *= scale;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        if (mask_.empty()) return gy;
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= mask_[i];
        return gx;
    }

private:
    double p_;
    Rng* rng_;
    std::vector<T> mask_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Flatten final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        in_shape_ = x.shape;
        Tensor<T> y = x;
        y.shape = {x.dim(0), static_cast<int>(x.numel()) / x.dim(0)};
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx = gy;
        gx.shape = in_shape_;
        return gx;
    }

private:
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Affine map, input B x D, weights U x D.

template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::string name, int in_features, int units)
        : in_(in_features), units_(units) {
        w_.name = name + ".w";
        w_.value = Tensor<T>({units, in_features});
        w_.decay = true;
        b_.name = name + ".b";
        b_.value = Tensor<T>({units});
    }

    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / double(in_));
        for (auto& v : w_.value.data) v = static_cast<T>(rng.gaussian() * stddev);
        b_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.ndim() != 2 || x.dim(1) != in_) throw NnError("dense: input shape mismatch");
        x_ = x;
        const int B = x.dim(0);
        const auto& k = kernels<T>();
        Tensor<T> y({B, units_});
        for (int b = 0; b < B; ++b) {
            const T* xb = x.ptr() + std::size_t(b) * in_;
            T* yb = y.ptr() + std::size_t(b) * units_;
            for (int u = 0; u < units_; ++u)
                yb[u] = k.dot(std::size_t(in_), w_.value.ptr() + std::size_t(u) * in_, xb) +
                        b_.value.data[u];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int B = x_.dim(0);
        const auto& k = kernels<T>();
        Tensor<T> gx({B, in_});
        for (int b = 0; b < B; ++b) {
            const T* xb = x_.ptr() + std::size_t(b) * in_;
            const T* gyb = gy.ptr() + std::size_t(b) * units_;
            T* gxb = gx.ptr() + std::size_t(b) * in_;
            for (int u = 0; u < units_; ++u) {
                const T g = gyb[u];
                b_.grad.data[u] += g;
                if (g == T(0)) continue;
                k.axpy(std::size_t(in_), g, xb, w_.grad.ptr() + std::size_t(u) * in_);
                k.axpy(std::size_t(in_), g, w_.value.ptr() + std::size_t(u) * in_, gxb);
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param<T>*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }
    void collect_state(std::vector<StateRef<T>>& out) override {
        out.push_back({w_.name, &w_.value});
        out.push_back({b_.name, &b_.value});
    }

    Param<T>& weights() { return w_; }
    Param<T>& bias() { return b_; }
    int units() const { return units_; }

private:
    int in_, units_;
    Param<T> w_, b_;
    Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Losses. Both return the mean per-example loss over the batch and write the
// logits gradient (already divided by batch size).

template <typename T>
T softmax_xent(const Tensor<T>& logits, const Tensor<T>& targets, Tensor<T>& grad) {
    const int B = logits.dim(0), K = logits.dim(1);
    grad = Tensor<T>(logits.shape);
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
        const T* z = logits.ptr() + std::size_t(b) * K;
        const T* t = targets.ptr() + std::size_t(b) * K;
        T* g = grad.ptr() + std::size_t(b) * K;
        T zmax = z[0];
        for (int k = 1; k < K; ++k) zmax = std::max(zmax, z[k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(double(z[k] - zmax));
        const double log_denom = std::log(denom);
        for (int k = 0; k < K; ++k) {
            const double p = std::exp(double(z[k] - zmax)) / denom;
            g[k] = static_cast<T>((p - double(t[k])) / B);
            if (t[k] > T(0.5)) total -= (double(z[k] - zmax) - log_denom);
        }
    }
    return static_cast<T>(total / B);
}

template <typename T>
void softmax_inplace(Tensor<T>& logits) {
    const int B = logits.dim(0), K = logits.dim(1);
    for (int b = 0; b < B; ++b) {
        T* z = logits.ptr() + std::size_t(b) * K;
        T zmax = z[0];
        for (int k = 1; k < K; ++k) zmax = std::max(zmax, z[k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(double(z[k] - zmax));
        for (int k = 0; k < K; ++k)
            z[k] = static_cast<T>(std::exp(double(z[k] - zmax)) / denom);
    }
}

// Sum of per-tag binary cross-entropies, numerically stable form.
template <typename T>
T sigmoid_bce(const Tensor<T>& logits, const Tensor<T>& targets, Tensor<T>& grad) {
    const int B = logits.dim(0), K = logits.dim(1);
    grad = Tensor<T>(logits.shape);
    double total = 0.0;
    for (int b = 0; b < B; ++b) {
        const T* z = logits.ptr() + std::size_t(b) * K;
        const T* t = targets.ptr() + std::size_t(b) * K;
        T* g = grad.ptr() + std::size_t(b) * K;
        for (int k = 0; k < K; ++k) {
            const double zi = double(z[k]), ti = double(t[k]);
            // max(z,0) - z*t + log(1 + exp(-|z|))
            total += std::max(zi, 0.0) - zi * ti + std::log1p(std::exp(-std::abs(zi)));
            const double sig = 1.0 / (1.0 + std::exp(-zi));
            g[k] = static_cast<T>((sig - ti) / B);
        }
    }
    return static_cast<T>(total / B);
}

template <typename T>
void sigmoid_inplace(Tensor<T>& logits) {
    for (auto& v : logits.data) v = static_cast<T>(1.0 / (1.0 + std::exp(-double(v))));
}

// ---------------------------------------------------------------------------

struct SgdConfig {
    double learning_rate = 0.01;
    double weight_decay = 1e-4;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

// w <- w - lr * (g + lambda * w); decay only where the parameter opts in.
template <typename T>
void sgd_step(const std::vector<Param<T>*>& params, const SgdConfig& cfg) {
    const T lr = static_cast<T>(cfg.learning_rate);
    const T lambda = static_cast<T>(cfg.weight_decay);
    for (Param<T>* p : params) {
        const T decay = p->decay ? lambda : T(0);
        for (std::size_t i = 0; i < p->value.data.size(); ++i)
            p->value.data[i] -= lr * (p->grad.data[i] + decay * p->value.data[i]);
    }
}

// He initialization: zero-mean Gaussian with variance 2 / fan_in.
template <typename T>
void he_init(Tensor<T>& t, int fan_in, Rng& rng) {
    if (fan_in < 1) throw NnError("he_init: fan_in must be >= 1");
    const double stddev = std::sqrt(2.0 / double(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.gaussian() * stddev);
}

}  // namespace timbre::nn
