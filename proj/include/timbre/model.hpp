#pragma once

#include <memory>

#include "timbre/arch.hpp"
#include "timbre/nn.hpp"

namespace timbre {

// Instantiates an ArchSpec: parallel first-layer branches on the input, a
// merge, then the sequential trunk. The trailing dense layer emits logits;
// the loss / output nonlinearity is applied by the caller.
template <typename T>
class Model {
public:
    // input_n_override shrinks the time axis (gradient checks); 0 keeps the
    // spec input. Dense in-features are derived from the actual input.
    Model(const arch::ArchSpec& spec, std::uint64_t seed, int input_n_override = 0)
        : spec_(spec),
          input_m_(spec.input_m),
          input_n_(input_n_override > 0 ? input_n_override : spec.input_n),
          dropout_rng_(seed, RngStream::dropout) {
        Rng init_rng(seed, RngStream::init);

        int merged_c = 0, merged_m = -1, merged_n = -1;
        long merged_d = 0;
        for (std::size_t i = 0; i < spec.branches.size(); ++i) {
            const auto& br = spec.branches[i];
            const std::string name = "branch" + std::to_string(i);
            Branch branch;
            auto conv = std::make_unique<nn::Conv2d<T>>(name + ".conv", 1, br.n_filters,
                                                        br.filter_m, br.filter_n, br.padding,
                                                        /*needs_input_grad=*/false);
            conv->init(init_rng);
            auto [cm, cn] = conv->out_dims(input_m_, input_n_);
            branch.layers.push_back(std::move(conv));
            if (br.batch_norm)
                branch.layers.push_back(std::make_unique<nn::BatchNorm<T>>(name + ".bn", br.n_filters));
            branch.layers.push_back(std::make_unique<nn::Elu<T>>());
            auto [pm, pn] = nn::MaxPool<T>::out_dims(cm, cn, br.pool_m, br.pool_n);
            branch.layers.push_back(std::make_unique<nn::MaxPool<T>>(br.pool_m, br.pool_n));
            branch.out_c = br.n_filters;
            branch.out_m = pm;
            branch.out_n = pn;
            branches_.push_back(std::move(branch));
            merged_c += br.n_filters;
            merged_d += long(br.n_filters) * pm * pn;
            if (merged_m < 0) {
                merged_m = pm;
                merged_n = pn;
            } else if (spec.merge == arch::MergeKind::channel_concat &&
                       (merged_m != pm || merged_n != pn)) {
                throw nn::NnError("branch outputs not merge-compatible");
            }
        }

        int C = 1, M = input_m_, N = input_n_;
        long D = 0;
        bool flat = false;
        if (!branches_.empty()) {
            if (spec.merge == arch::MergeKind::channel_concat) {
                C = merged_c;
                M = merged_m;
                N = merged_n;
            } else {
                D = merged_d;
                flat = true;
            }
        }

        for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
            const auto& l = spec.trunk[i];
            const std::string name = "trunk" + std::to_string(i);
            switch (l.kind) {
                case arch::TrunkLayer::Kind::conv: {
                    auto conv = std::make_unique<nn::Conv2d<T>>(name + ".conv", C, l.n_filters,
                                                                l.filter_m, l.filter_n, l.padding);
                    conv->init(init_rng);
                    auto [cm, cn] = conv->out_dims(M, N);
                    trunk_.push_back(std::move(conv));
                    if (l.batch_norm)
                        trunk_.push_back(std::make_unique<nn::BatchNorm<T>>(name + ".bn", l.n_filters));
                    trunk_.push_back(std::make_unique<nn::Elu<T>>());
                    C = l.n_filters;
                    M = cm;
                    N = cn;
                    break;
                }
                case arch::TrunkLayer::Kind::pool: {
                    auto [pm, pn] = nn::MaxPool<T>::out_dims(M, N, l.pool_m, l.pool_n);
                    trunk_.push_back(std::make_unique<nn::MaxPool<T>>(l.pool_m, l.pool_n));
                    M = pm;
                    N = pn;
                    break;
                }
                case arch::TrunkLayer::Kind::dense: {
                    if (!flat) {
                        trunk_.push_back(std::make_unique<nn::Flatten<T>>());
                        D = long(C) * M * N;
                        flat = true;
                    }
                    auto dense = std::make_unique<nn::Dense<T>>(name + ".dense", int(D), l.units);
                    dense->init(init_rng);
                    trunk_.push_back(std::move(dense));
                    if (l.elu) trunk_.push_back(std::make_unique<nn::Elu<T>>());
                    D = l.units;
                    break;
                }
                case arch::TrunkLayer::Kind::dropout:
                    trunk_.push_back(std::make_unique<nn::Dropout<T>>(l.p, &dropout_rng_));
                    break;
            }
        }
        if (!flat || D != spec.output_units)
            throw nn::NnError("model output does not match declared units");
    }

    // x: B x 1 x M x N. Returns logits B x K.
    Tensor<T> forward(const Tensor<T>& x, nn::Mode mode) {
        Tensor<T> merged;
        if (!branches_.empty()) {
            const int B = x.dim(0);
            std::vector<Tensor<T>> outs;
            outs.reserve(branches_.size());
            for (auto& br : branches_) {
                Tensor<T> y = x;
                for (auto& layer : br.layers) y = layer->forward(y, mode);
                outs.push_back(std::move(y));
            }
            if (spec_.merge == arch::MergeKind::channel_concat) {
                int C = 0;
                for (const auto& o : outs) C += o.dim(1);
                const int M = outs[0].dim(2), N = outs[0].dim(3);
                merged = Tensor<T>({B, C, M, N});
                for (int b = 0; b < B; ++b) {
                    std::size_t off = 0;
                    for (const auto& o : outs) {
                        const std::size_t chunk = std::size_t(o.dim(1)) * M * N;
                        std::copy_n(o.ptr() + std::size_t(b) * chunk, chunk,
                                    merged.ptr() + (std::size_t(b) * C) * M * N + off);
                        off += chunk;
                    }
                }
            } else {
                long D = 0;
                for (const auto& o : outs) D += long(o.numel()) / B;
                merged = Tensor<T>({B, int(D)});
                for (int b = 0; b < B; ++b) {
                    std::size_t off = 0;
                    for (const auto& o : outs) {
                        const std::size_t chunk = o.numel() / B;
                        std::copy_n(o.ptr() + std::size_t(b) * chunk, chunk,
                                    merged.ptr() + std::size_t(b) * std::size_t(D) + off);
                        off += chunk;
                    }
                }
            }
            branch_outs_ = std::move(outs);
        } else {
            merged = x;
        }
        for (auto& layer : trunk_) merged = layer->forward(merged, mode);
        return merged;
    }

    void backward(const Tensor<T>& grad_logits) {
        Tensor<T> g = grad_logits;
        for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = (*it)->backward(g);
        if (branches_.empty()) return;
        const int B = g.dim(0);
        for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
            auto& br = branches_[bi];
            const auto& out = branch_outs_[bi];
            Tensor<T> gb(out.shape);
            const std::size_t chunk = out.numel() / B;
            if (spec_.merge == arch::MergeKind::channel_concat) {
                const int C = g.dim(1), M = g.dim(2), N = g.dim(3);
                std::size_t off = 0;
                for (std::size_t k = 0; k < bi; ++k) off += branch_outs_[k].numel() / B;
                for (int b = 0; b < B; ++b)
                    std::copy_n(g.ptr() + (std::size_t(b) * C) * M * N + off, chunk,
                                gb.ptr() + std::size_t(b) * chunk);
            } else {
                const std::size_t D = std::size_t(g.dim(1));
                std::size_t off = 0;
                for (std::size_t k = 0; k < bi; ++k) off += branch_outs_[k].numel() / B;
                for (int b = 0; b < B; ++b)
                    std::copy_n(g.ptr() + std::size_t(b) * D + off, chunk,
                                gb.ptr() + std::size_t(b) * chunk);
            }
            for (auto it = br.layers.rbegin(); it != br.layers.rend(); ++it)
                gb = (*it)->backward(gb);
        }
    }

    std::vector<nn::Param<T>*> params() {
        std::vector<nn::Param<T>*> out;
        for (auto& br : branches_)
            for (auto& layer : br.layers) layer->collect_params(out);
        for (auto& layer : trunk_) layer->collect_params(out);
        return out;
    }

    std::vector<nn::StateRef<T>> state_tensors() {
        std::vector<nn::StateRef<T>> out;
        for (auto& br : branches_)
            for (auto& layer : br.layers) layer->collect_state(out);
        for (auto& layer : trunk_) layer->collect_state(out);
        return out;
    }

    void reset_grads() {
        for (auto* p : params()) p->reset_grad();
    }

    const arch::ArchSpec& spec() const { return spec_; }
    int input_m() const { return input_m_; }
    int input_n() const { return input_n_; }

private:
    struct Branch {
        std::vector<std::unique_ptr<nn::Layer<T>>> layers;
        int out_c = 0, out_m = 0, out_n = 0;
    };

    arch::ArchSpec spec_;
    int input_m_, input_n_;
    Rng dropout_rng_;
    std::vector<Branch> branches_;
    std::vector<std::unique_ptr<nn::Layer<T>>> trunk_;
    std::vector<Tensor<T>> branch_outs_;
};

}  // namespace timbre
