#include <algorithm>
#include <cmath>

#include "timbre/gradcheck.hpp"

namespace timbre::gradcheck {

namespace {

double loss_of(Model<double>& model, const Tensor<double>& x, const Tensor<double>& t,
               arch::OutputKind kind, Tensor<double>* grad_out = nullptr) {
    Tensor<double> logits = model.forward(x, nn::Mode::train);
    Tensor<double> grad;
    const double loss = kind == arch::OutputKind::softmax ? nn::softmax_xent(logits, t, grad)
                                                          : nn::sigmoid_bce(logits, t, grad);
    if (grad_out) *grad_out = std::move(grad);
    return loss;
}

}  // namespace

Report check_arch(const arch::ArchSpec& spec, const Options& opts) {
    // Dropout masks would differ between the perturbed forwards; disable it.
    arch::ArchSpec quiet = spec;
    for (auto& l : quiet.trunk)
        if (l.kind == arch::TrunkLayer::Kind::dropout) l.p = 0.0;

    Model<double> model(quiet, opts.seed, opts.input_n_override);

    Rng rng(opts.seed, RngStream::synth);
    Tensor<double> x({1, 1, model.input_m(), model.input_n()});
    for (auto& v : x.data) v = rng.gaussian();

    const int K = quiet.output_units;
    Tensor<double> target({1, K});
    if (quiet.output == arch::OutputKind::softmax) {
        target.data[rng.below(std::uint64_t(K))] = 1.0;
    } else {
        for (auto& v : target.data) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
        if (std::count(target.data.begin(), target.data.end(), 1.0) == 0) target.data[0] = 1.0;
    }

    model.reset_grads();
    Tensor<double> grad_logits;
    loss_of(model, x, target, quiet.output, &grad_logits);
    model.backward(grad_logits);

    Report report;
    for (nn::Param<double>* p : model.params()) {
        TensorReport row;
        row.tensor = p->name;
        const std::size_t n = p->value.numel();

        std::vector<std::size_t> indices;
        if (n <= std::size_t(opts.samples_per_tensor)) {
            indices.resize(n);
            for (std::size_t i = 0; i < n; ++i) indices[i] = i;
        } else {
            for (int i = 0; i < opts.samples_per_tensor; ++i)
                indices.push_back(rng.below(n));
        }

        for (std::size_t idx : indices) {
            double& w = p->value.data[idx];
            const double keep = w;
            const double h = opts.step * std::max(1.0, std::abs(keep));
            w = keep + h;
            const double lp = loss_of(model, x, target, quiet.output);
            w = keep - h;
            const double lm = loss_of(model, x, target, quiet.output);
            w = keep;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = p->grad.data[idx];
            // The 1e-3 floor keeps finite-difference roundoff (~1e-9 absolute)
            // from registering as error on parameters whose true gradient is
            // near zero, e.g. conv biases absorbed by a following batch norm.
            const double rel =
                std::abs(analytic - numeric) / std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            row.max_rel_err = std::max(row.max_rel_err, rel);
            ++row.checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, row.max_rel_err);
        report.rows.push_back(std::move(row));
    }
    return report;
}

int suggested_input_n(const arch::ArchSpec& spec) {
    if (spec.arch_id == "irmas_single") return 16;
    if (spec.arch_id == "irmas_multi") return 64;
    if (spec.arch_id == "mtt_proposed") return 48;
    if (spec.arch_id == "mtt_small_rect") return 64;
    return spec.input_n;  // phoneme_single, mlp_baseline: already small
}

}  // namespace timbre::gradcheck
