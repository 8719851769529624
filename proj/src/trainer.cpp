#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "timbre/trainer.hpp"

namespace timbre::train {

std::string metric_str(EvalMetric m) {
    switch (m) {
        case EvalMetric::accuracy: return "accuracy";
        case EvalMetric::f1_micro: return "f1_micro";
        default: return "auc";
    }
}

EvalMetric metric_from(const std::string& s) {
    if (s == "accuracy") return EvalMetric::accuracy;
    if (s == "f1_micro") return EvalMetric::f1_micro;
    if (s == "auc") return EvalMetric::auc;
    throw TrainError("unknown metric: " + s);
}

EvalMetric default_metric(const arch::ArchSpec& spec) {
    if (spec.arch_id == "irmas_single" || spec.arch_id == "irmas_multi")
        return EvalMetric::f1_micro;
    if (spec.arch_id == "mtt_proposed" || spec.arch_id == "mtt_small_rect")
        return EvalMetric::auc;
    return EvalMetric::accuracy;
}

namespace {

Tensor<float> stack_batch(const std::vector<Example>& examples,
                          const std::vector<std::size_t>& indices, std::size_t begin,
                          std::size_t end) {
    const auto& first = examples[indices[begin]].features;
    const int M = first.dim(1), N = first.dim(2);
    Tensor<float> batch({int(end - begin), 1, M, N});
    for (std::size_t i = begin; i < end; ++i) {
        const auto& f = examples[indices[i]].features;
        if (f.shape != first.shape) throw TrainError("excerpt shape mismatch in batch");
        std::copy(f.data.begin(), f.data.end(),
                  batch.data.begin() + (i - begin) * f.numel());
    }
    return batch;
}

Tensor<float> stack_targets(const std::vector<Example>& examples,
                            const std::vector<std::size_t>& indices, std::size_t begin,
                            std::size_t end, int K) {
    Tensor<float> t({int(end - begin), K});
    for (std::size_t i = begin; i < end; ++i) {
        const auto& tgt = examples[indices[i]].target;
        if (int(tgt.size()) != K) throw TrainError("target dimension mismatch");
        std::copy(tgt.begin(), tgt.end(), t.data.begin() + (i - begin) * K);
    }
    return t;
}

}  // namespace

std::vector<std::vector<float>> predict(Model<float>& model,
                                        const std::vector<Tensor<float>>& excerpts,
                                        int batch_size) {
    std::vector<std::vector<float>> out;
    const bool softmax = model.spec().output == arch::OutputKind::softmax;
    for (std::size_t begin = 0; begin < excerpts.size();
         begin += std::size_t(batch_size)) {
        const std::size_t end = std::min(excerpts.size(), begin + std::size_t(batch_size));
        const auto& first = excerpts[begin];
        Tensor<float> batch({int(end - begin), 1, first.dim(1), first.dim(2)});
        for (std::size_t i = begin; i < end; ++i) {
            if (excerpts[i].shape != first.shape) throw TrainError("excerpt shape mismatch");
            std::copy(excerpts[i].data.begin(), excerpts[i].data.end(),
                      batch.data.begin() + (i - begin) * first.numel());
        }
        Tensor<float> logits = model.forward(batch, nn::Mode::infer);
        if (softmax)
            nn::softmax_inplace(logits);
        else
            nn::sigmoid_inplace(logits);
        const int K = logits.dim(1);
        for (std::size_t i = begin; i < end; ++i)
            out.emplace_back(logits.data.begin() + (i - begin) * K,
                             logits.data.begin() + (i - begin + 1) * K);
    }
    return out;
}

double eval_examples(Model<float>& model, const std::vector<Example>& examples,
                     EvalMetric metric, int batch_size) {
    if (examples.empty()) throw TrainError("evaluation on empty example set");
    std::vector<Tensor<float>> excerpts;
    excerpts.reserve(examples.size());
    for (const auto& ex : examples) excerpts.push_back(ex.features);
    const auto probs = predict(model, excerpts, batch_size);

    if (metric == EvalMetric::accuracy) {
        std::vector<int> pred, truth;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            pred.push_back(int(std::max_element(probs[i].begin(), probs[i].end()) -
                               probs[i].begin()));
            const auto& t = examples[i].target;
            truth.push_back(int(std::max_element(t.begin(), t.end()) - t.begin()));
        }
        return metrics::accuracy(pred, truth);
    }

    // group excerpts by song, average, then score
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < examples.size(); ++i)
        groups[examples[i].song_id].push_back(i);
    std::vector<std::vector<float>> song_scores, song_truths;
    for (const auto& [song, idx] : groups) {
        std::vector<std::vector<float>> outs;
        for (std::size_t i : idx) outs.push_back(probs[i]);
        song_scores.push_back(metrics::aggregate_song(outs));
        song_truths.push_back(examples[idx[0]].target);
    }
    if (metric == EvalMetric::f1_micro)
        return metrics::prf_multilabel(song_scores, song_truths, 0.2).scalars.at("micro_f1");
    return metrics::auc_per_tag(song_scores, song_truths).scalars.at("auc");
}

Checkpoint train(const arch::ArchSpec& spec, const Dataset& data, const TrainConfig& cfg,
                 const frontend::NormStats& norm_stats) {
    if (cfg.epochs < 1) throw TrainError("epochs must be >= 1");
    if (data.train.empty() || data.val.empty())
        throw TrainError("train and validation sets must be non-empty");

    Model<float> model(spec, cfg.sgd.seed);
    const int K = spec.output_units;

    Rng shuffle_rng(cfg.sgd.seed, RngStream::shuffle);
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    Checkpoint best;
    best.arch = spec;
    best.norm_stats = norm_stats;
    best.seed = cfg.sgd.seed;
    best.metric = metric_str(cfg.eval_metric);
    double best_score = -1.0;
    int best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += std::size_t(cfg.sgd.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + std::size_t(cfg.sgd.batch_size));
            Tensor<float> x = stack_batch(data.train, order, begin, end);
            Tensor<float> t = stack_targets(data.train, order, begin, end, K);

            model.reset_grads();
            Tensor<float> logits = model.forward(x, nn::Mode::train);
            Tensor<float> grad;
            const float loss = spec.output == arch::OutputKind::softmax
                                   ? nn::softmax_xent(logits, t, grad)
                                   : nn::sigmoid_bce(logits, t, grad);
            if (!std::isfinite(loss))
                throw TrainError("training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
            model.backward(grad);
            nn::sgd_step(model.params(), cfg.sgd);
            epoch_loss += double(loss);
            ++n_batches;
        }
        epoch_loss /= double(n_batches);

        const double score = eval_examples(model, data.val, cfg.eval_metric, cfg.sgd.batch_size);
        if (cfg.log)
            (*cfg.log) << "{\"epoch\":" << epoch << ",\"train_loss\":" << epoch_loss
                       << ",\"val_" << metric_str(cfg.eval_metric) << "\":" << score << "}\n";

        if (score > best_score) {
            best_score = score;
            best_epoch = epoch;
            best.epoch = epoch;
            best.val_score = score;
            best.tensors.clear();
            for (const auto& ref : model.state_tensors())
                best.tensors.emplace_back(ref.name, *ref.tensor);
        }
        if (epoch - best_epoch >= cfg.early_stop_patience) break;
    }
    return best;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'T', 'C', 'K', 'P'};
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["arch"] = arch::to_json(ckpt.arch);
    header["meta"] = {{"seed", ckpt.seed},
                      {"epoch", ckpt.epoch},
                      {"val_score", ckpt.val_score},
                      {"metric", ckpt.metric}};
    header["norm_stats"] = {{"mean", ckpt.norm_stats.mean}, {"std", ckpt.norm_stats.std}};
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : ckpt.tensors) {
        header["tensors"].push_back({{"name", name},
                                     {"shape", tensor.shape},
                                     {"offset", offset},
                                     {"n", tensor.numel()}});
        offset += tensor.numel() * 4;
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw TrainError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
    unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
    out.write(reinterpret_cast<char*>(lb), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [name, tensor] : ckpt.tensors)
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.numel() * 4));
    if (!out) throw TrainError("short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TrainError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw TrainError("bad checkpoint magic (expected TCKP): " + path);
    unsigned char lb[4];
    in.read(reinterpret_cast<char*>(lb), 4);
    if (!in) throw TrainError("truncated checkpoint header: " + path);
    const std::uint32_t len = std::uint32_t(lb[0]) | std::uint32_t(lb[1]) << 8 |
                              std::uint32_t(lb[2]) << 16 | std::uint32_t(lb[3]) << 24;
    std::string header_str(len, '\0');
    in.read(header_str.data(), len);
    if (!in) throw TrainError("truncated checkpoint header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw TrainError(std::string("corrupt checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    ckpt.arch = arch::from_json(header.at("arch"));
    ckpt.seed = header.at("meta").at("seed").get<std::uint64_t>();
    ckpt.epoch = header.at("meta").at("epoch").get<int>();
    ckpt.val_score = header.at("meta").at("val_score").get<double>();
    ckpt.metric = header.at("meta").at("metric").get<std::string>();
    ckpt.norm_stats.mean = header.at("norm_stats").at("mean").get<std::vector<float>>();
    ckpt.norm_stats.std = header.at("norm_stats").at("std").get<std::vector<float>>();

    long total = 0;
    for (const auto& tj : header.at("tensors")) {
        const std::string name = tj.at("name").get<std::string>();
        Tensor<float> tensor(tj.at("shape").get<std::vector<int>>());
        const std::size_t n = tj.at("n").get<std::size_t>();
        if (n != tensor.numel())
            throw TrainError("checkpoint tensor " + name + ": shape/count mismatch");
        in.read(reinterpret_cast<char*>(tensor.data.data()),
                static_cast<std::streamsize>(n * 4));
        if (static_cast<std::size_t>(in.gcount()) != n * 4)
            throw TrainError("checkpoint tensor " + name + ": truncated payload");
        total += long(n);
        ckpt.tensors.emplace_back(name, std::move(tensor));
    }
    const long expected = arch::param_count(ckpt.arch);
    if (total != expected)
        throw TrainError("checkpoint scalar count " + std::to_string(total) +
                         " does not match architecture (" + std::to_string(expected) + ")");
    return ckpt;
}

std::unique_ptr<Model<float>> instantiate(const Checkpoint& ckpt) {
    auto model = std::make_unique<Model<float>>(ckpt.arch, ckpt.seed);
    auto refs = model->state_tensors();
    for (const auto& [name, tensor] : ckpt.tensors) {
        auto it = std::find_if(refs.begin(), refs.end(),
                               [&](const nn::StateRef<float>& r) { return r.name == name; });
        if (it == refs.end()) throw TrainError("checkpoint tensor not in model: " + name);
        if (it->tensor->shape != tensor.shape)
            throw TrainError("checkpoint tensor " + name + ": shape mismatch");
        *it->tensor = tensor;
    }
    return model;
}

}  // namespace timbre::train
