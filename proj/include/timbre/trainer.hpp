#pragma once

#include <memory>
#include <ostream>

#include "timbre/arch.hpp"
#include "timbre/dataio.hpp"
#include "timbre/metrics.hpp"
#include "timbre/model.hpp"

namespace timbre::train {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EvalMetric { accuracy, f1_micro, auc };

std::string metric_str(EvalMetric m);
EvalMetric metric_from(const std::string& s);

// Default validation metric per task family.
EvalMetric default_metric(const arch::ArchSpec& spec);

struct TrainConfig {
    int epochs = 100;
    nn::SgdConfig sgd;  // lr 0.01, batch 32, weight decay 1e-4
    int early_stop_patience = 10;
    EvalMetric eval_metric = EvalMetric::accuracy;
    std::ostream* log = nullptr;  // NDJSON epoch log when set
};

// One training or validation item: a fixed-size excerpt plus its target.
struct Example {
    Tensor<float> features;  // 1 x M x N
    std::vector<float> target;
    std::string song_id;
};

struct Dataset {
    std::vector<Example> train;
    std::vector<Example> val;
};

struct Checkpoint {
    arch::ArchSpec arch;
    frontend::NormStats norm_stats;
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
    std::uint64_t seed = 0;
    int epoch = 0;
    double val_score = 0.0;
    std::string metric;
};

// Mini-batch SGD with per-epoch validation; returns the parameters of the
// best validation epoch (ties keep the earlier one). Stops early after
// `early_stop_patience` epochs without improvement. Throws on non-finite loss.
Checkpoint train(const arch::ArchSpec& spec, const Dataset& data, const TrainConfig& cfg,
                 const frontend::NormStats& norm_stats = {});

// "TCKP" + u32 header length + JSON header (arch, meta, norm stats, tensor
// directory with byte offsets) + concatenated little-endian float32 payloads.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Model with parameters restored from the checkpoint tensors.
std::unique_ptr<Model<float>> instantiate(const Checkpoint& ckpt);

// Inference-mode outputs (softmax probabilities or sigmoid activations),
// one row per excerpt in input order.
std::vector<std::vector<float>> predict(Model<float>& model,
                                        const std::vector<Tensor<float>>& excerpts,
                                        int batch_size = 32);

// Validation-style metric over examples (used by the train loop and by the
// CLI evaluation path for its per-epoch semantics).
double eval_examples(Model<float>& model, const std::vector<Example>& examples,
                     EvalMetric metric, int batch_size = 32);

}  // namespace timbre::train
