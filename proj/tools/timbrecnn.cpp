// Command-line front end: featurize / describe / train / evaluate /
// gradcheck / export-filters. Exit codes: 0 success, 1 verification failure,
// 2 usage error, 3 I/O or data error.
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "timbre/dataio.hpp"
#include "timbre/gradcheck.hpp"
#include "timbre/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace timbre;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t env_seed(std::uint64_t fallback) {
    if (const char* s = std::getenv("TCNN_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw UsageError("TCNN_SEED is not a non-negative integer: " + std::string(s));
        }
    }
    return fallback;
}

std::string cache_path(const std::string& cache_dir, const std::string& id) {
    return (fs::path(cache_dir) / (id + ".melf")).string();
}

dataio::TaskKind task_of(const arch::ArchSpec& spec) {
    return spec.output == arch::OutputKind::softmax ? dataio::TaskKind::single_label
                                                    : dataio::TaskKind::multi_label;
}

// One label per line; fixes the label-index mapping independent of which
// labels the manifest happens to contain.
std::vector<std::string> read_label_file(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw dataio::DataError("cannot open label file: " + path);
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) labels.push_back(line);
    }
    return labels;
}

// ---------------------------------------------------------------------------

int cmd_featurize(const std::string& manifest_path, const std::string& profile_name,
                  const std::string& cache_dir, int jobs, bool strict) {
    const auto& prof = frontend::profile(profile_name);
    auto manifest = dataio::load_manifest(manifest_path, dataio::TaskKind::multi_label);
    fs::create_directories(cache_dir);

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::vector<std::pair<std::string, std::string>> failures;
    std::size_t ok = 0;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= manifest.examples.size()) return;
            const auto& ex = manifest.examples[i];
            try {
                auto spec = frontend::featurize(ex.audio_path, prof);
                dataio::cache_write(cache_path(cache_dir, ex.id), spec);
                std::lock_guard<std::mutex> lock(mu);
                ++ok;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failures.emplace_back(ex.id, e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::sort(failures.begin(), failures.end());
    json summary;
    summary["profile"] = profile_name;
    summary["n_examples"] = manifest.examples.size();
    summary["n_ok"] = ok;
    summary["failures"] = json::array();
    for (const auto& [id, err] : failures)
        summary["failures"].push_back({{"id", id}, {"error", err}});
    std::cout << summary.dump() << "\n";
    return (!failures.empty() && strict) ? kExitVerification : kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_describe(const std::string& arch_id, int widen) {
    auto spec = arch::build(arch_id, widen);
    auto rows = arch::propagate_shapes(spec);
    const long total = arch::param_count(spec);

    std::printf("%-26s %-16s %s\n", "layer", "output", "params");
    for (const auto& r : rows) {
        std::string shape;
        for (std::size_t i = 0; i < r.shape.size(); ++i)
            shape += (i ? "x" : "") + std::to_string(r.shape[i]);
        std::printf("%-26s %-16s %ld\n", r.name.c_str(), shape.c_str(), r.params);
    }
    std::printf("total parameters: %ld\n", total);

    json card;
    card["arch"] = arch_id;
    card["widen_factor"] = spec.widen_factor;
    card["param_count"] = total;
    if (spec.published_param_count > 0) {
        card["published_param_count"] = spec.published_param_count;
        card["deviation"] = std::abs(double(total) - double(spec.published_param_count)) /
                            double(spec.published_param_count);
    }
    card["layers"] = json::array();
    for (const auto& r : rows)
        card["layers"].push_back({{"name", r.name}, {"shape", r.shape}, {"params", r.params}});
    std::cout << card.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct LoadedSet {
    std::vector<train::Example> train, val, test;
    std::vector<frontend::Spectrogram> train_raw;  // pre-normalization
};

// Reads cached features for every manifest entry, grouped by split.
// Train/val examples are center-cropped to the architecture input width;
// test examples are tiled (each tile becomes one excerpt of its song).
void load_examples(const dataio::Manifest& manifest, const std::string& cache_dir,
                   const arch::ArchSpec& spec, const frontend::NormStats& stats,
                   LoadedSet& out, bool normalized) {
    for (const auto& ex : manifest.examples) {
        auto grid = dataio::cache_read(cache_path(cache_dir, ex.id));
        if (grid.n_mels != spec.input_m)
            throw UsageError("cached features have " + std::to_string(grid.n_mels) +
                             " mel bins but the architecture expects " +
                             std::to_string(spec.input_m) + " (wrong --profile?)");
        if (normalized) frontend::normalize(grid, stats);

        const auto target = dataio::encode_labels(ex.labels, manifest.vocab);
        const std::string song = ex.song_id.empty() ? ex.id : ex.song_id;
        const auto policy = ex.split == dataio::Split::test ? dataio::SlicePolicy::tile
                                                            : dataio::SlicePolicy::center;
        for (const auto& slice : dataio::slice_excerpt(grid, spec.input_n, policy)) {
            train::Example e;
            e.features = Tensor<float>({1, slice.n_mels, slice.n_frames});
            e.features.data.assign(slice.values.begin(), slice.values.end());
            e.target = target;
            e.song_id = song;
            switch (ex.split) {
                case dataio::Split::train: out.train.push_back(std::move(e)); break;
                case dataio::Split::val: out.val.push_back(std::move(e)); break;
                case dataio::Split::test: out.test.push_back(std::move(e)); break;
                case dataio::Split::unassigned:
                    throw UsageError("example " + ex.id + " has no split assignment");
            }
        }
        if (!normalized && ex.split == dataio::Split::train)
            out.train_raw.push_back(std::move(grid));
    }
}

int cmd_train(const std::string& manifest_path, const std::string& cache_dir,
              const std::string& arch_id, int widen, const std::string& config_path,
              const std::string& labels_path, const std::string& out_path,
              const CLI::App* cmd, std::uint64_t seed_flag,
              int epochs_flag, double lr_flag, int batch_flag, double decay_flag,
              int patience_flag, std::string metric_flag) {
    auto spec = arch::build(arch_id, widen);

    // precedence: flag > config file > environment seed > default
    json cfg_file = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw dataio::DataError("cannot open config: " + config_path);
        try {
            in >> cfg_file;
        } catch (const json::exception& e) {
            throw UsageError("config is not valid JSON: " + std::string(e.what()));
        }
    }
    auto pick_int = [&](const char* flag, const char* key, int flag_val, int def) {
        if (cmd->count(flag)) return flag_val;
        if (cfg_file.contains(key)) return cfg_file.at(key).get<int>();
        return def;
    };
    auto pick_double = [&](const char* flag, const char* key, double flag_val, double def) {
        if (cmd->count(flag)) return flag_val;
        if (cfg_file.contains(key)) return cfg_file.at(key).get<double>();
        return def;
    };

    train::TrainConfig cfg;
    cfg.epochs = pick_int("--epochs", "epochs", epochs_flag, 100);
    cfg.sgd.learning_rate = pick_double("--lr", "learning_rate", lr_flag, 0.01);
    cfg.sgd.batch_size = pick_int("--batch-size", "batch_size", batch_flag, 32);
    cfg.sgd.weight_decay = pick_double("--weight-decay", "weight_decay", decay_flag, 1e-4);
    cfg.early_stop_patience = pick_int("--patience", "patience", patience_flag, 10);
    if (cmd->count("--metric"))
        cfg.eval_metric = train::metric_from(metric_flag);
    else if (cfg_file.contains("metric"))
        cfg.eval_metric = train::metric_from(cfg_file.at("metric").get<std::string>());
    else
        cfg.eval_metric = train::default_metric(spec);
    if (cmd->count("--seed"))
        cfg.sgd.seed = seed_flag;
    else if (cfg_file.contains("seed"))
        cfg.sgd.seed = cfg_file.at("seed").get<std::uint64_t>();
    else
        cfg.sgd.seed = env_seed(1234);
    if (cfg.epochs < 1) throw UsageError("--epochs must be >= 1");
    if (cfg.sgd.batch_size < 1) throw UsageError("--batch-size must be >= 1");

    auto manifest =
        dataio::load_manifest(manifest_path, task_of(spec), read_label_file(labels_path));
    bool any_unassigned = false;
    for (const auto& ex : manifest.examples)
        any_unassigned |= ex.split == dataio::Split::unassigned;
    if (any_unassigned)
        dataio::random_split(manifest.examples, 0.6, 0.2, 0.2, cfg.sgd.seed);
    if (manifest.vocab.size() != spec.output_units)
        throw UsageError("manifest has " + std::to_string(manifest.vocab.size()) +
                         " labels but the architecture outputs " +
                         std::to_string(spec.output_units));

    LoadedSet sets;
    load_examples(manifest, cache_dir, spec, {}, sets, /*normalized=*/false);
    std::vector<const frontend::Spectrogram*> refs;
    for (const auto& g : sets.train_raw) refs.push_back(&g);
    if (refs.empty()) throw dataio::DataError("no training examples in manifest");
    const auto stats = frontend::fit_norm_stats(refs);

    LoadedSet norm;
    load_examples(manifest, cache_dir, spec, stats, norm, /*normalized=*/true);

    train::Dataset data;
    data.train = std::move(norm.train);
    data.val = std::move(norm.val);

    train::TrainConfig run = cfg;
    run.log = &std::cout;
    auto ckpt = train::train(spec, data, run, stats);
    train::save_checkpoint(out_path, ckpt);

    json done;
    done["checkpoint"] = out_path;
    done["best_epoch"] = ckpt.epoch;
    done["val_" + ckpt.metric] = ckpt.val_score;
    std::cout << done.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                 const std::string& cache_dir, const std::string& labels_path,
                 const std::string& split_name) {
    auto ckpt = train::load_checkpoint(checkpoint_path);
    auto model = train::instantiate(ckpt);
    const auto& spec = ckpt.arch;

    auto manifest =
        dataio::load_manifest(manifest_path, task_of(spec), read_label_file(labels_path));
    if (manifest.vocab.size() != spec.output_units)
        throw UsageError("manifest has " + std::to_string(manifest.vocab.size()) +
                         " labels but the checkpoint outputs " +
                         std::to_string(spec.output_units));
    const auto want = dataio::split_from(split_name);

    // tile every selected example regardless of its split label
    std::vector<train::Example> examples;
    for (const auto& ex : manifest.examples) {
        if (ex.split != want) continue;
        auto grid = dataio::cache_read(cache_path(cache_dir, ex.id));
        if (grid.n_mels != spec.input_m)
            throw UsageError("cached features do not match the checkpoint input height");
        frontend::normalize(grid, ckpt.norm_stats);
        const auto target = dataio::encode_labels(ex.labels, manifest.vocab);
        const std::string song = ex.song_id.empty() ? ex.id : ex.song_id;
        for (const auto& slice :
             dataio::slice_excerpt(grid, spec.input_n, dataio::SlicePolicy::tile)) {
            train::Example e;
            e.features = Tensor<float>({1, slice.n_mels, slice.n_frames});
            e.features.data.assign(slice.values.begin(), slice.values.end());
            e.target = target;
            e.song_id = song;
            examples.push_back(std::move(e));
        }
    }
    if (examples.empty())
        throw dataio::DataError("no examples with split '" + split_name + "' in manifest");

    std::vector<Tensor<float>> excerpts;
    for (const auto& e : examples) excerpts.push_back(e.features);
    const auto probs = train::predict(*model, excerpts);

    json result;
    result["split"] = split_name;
    result["n_excerpts"] = examples.size();
    if (spec.output == arch::OutputKind::softmax) {
        std::vector<int> pred, truth;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            pred.push_back(int(std::max_element(probs[i].begin(), probs[i].end()) -
                               probs[i].begin()));
            const auto& t = examples[i].target;
            truth.push_back(int(std::max_element(t.begin(), t.end()) - t.begin()));
        }
        result["task"] = "single_label";
        result["scalars"] = {{"accuracy", metrics::accuracy(pred, truth)}};
    } else {
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
        result["n_songs"] = groups.size();
        auto prf = metrics::prf_multilabel(song_scores, song_truths, 0.2);
        json merged = prf.to_json();
        try {
            auto auc = metrics::auc_per_tag(song_scores, song_truths);
            for (const auto& [k, v] : auc.scalars) merged["scalars"][k] = v;
            merged["auc_per_label"] = auc.to_json()["per_label"];
            merged["auc_excluded_labels"] = auc.excluded_labels;
        } catch (const metrics::MetricsError&) {
            // no scoreable tag: report P/R/F1 only
        }
        merged["labels"] = manifest.vocab.labels;
        for (auto& [k, v] : merged.items()) result[k] = v;
    }
    std::cout << result.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const std::string& arch_id, int widen, double tolerance, bool full,
                  std::uint64_t seed) {
    auto spec = arch::build(arch_id, widen);
    gradcheck::Options opts;
    opts.seed = seed;
    if (!full) opts.input_n_override = gradcheck::suggested_input_n(spec);

    auto report = gradcheck::check_arch(spec, opts);
    json out;
    out["arch"] = arch_id;
    out["tolerance"] = tolerance;
    out["max_rel_err"] = report.max_rel_err;
    out["rows"] = json::array();
    for (const auto& row : report.rows)
        out["rows"].push_back({{"tensor", row.tensor},
                               {"max_rel_err", row.max_rel_err},
                               {"checked", row.checked}});
    out["pass"] = report.max_rel_err < tolerance;
    std::cout << out.dump() << "\n";
    return report.max_rel_err < tolerance ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------

void write_pgm(const std::string& path, const std::vector<float>& cell, int rows, int cols) {
    float lo = cell[0], hi = cell[0];
    for (float v : cell) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dataio::DataError("cannot write " + path);
    out << "P5\n" << cols << " " << rows << "\n255\n";
    for (float v : cell) {
        const double scaled = hi > lo ? (v - lo) / double(hi - lo) * 255.0 : 128.0;
        out.put(char(static_cast<unsigned char>(std::lround(scaled))));
    }
}

int cmd_export_filters(const std::string& checkpoint_path, const std::string& layer,
                       const std::string& out_dir) {
    auto ckpt = train::load_checkpoint(checkpoint_path);
    const Tensor<float>* weights = nullptr;
    for (const auto& [name, tensor] : ckpt.tensors)
        if (name == layer) weights = &tensor;
    if (!weights) {
        std::vector<std::string> available;
        for (const auto& [name, tensor] : ckpt.tensors)
            if (tensor.shape.size() == 4) available.push_back(name);
        std::string msg = "no tensor named '" + layer + "' in checkpoint; filter tensors:";
        for (const auto& n : available) msg += " " + n;
        throw UsageError(msg);
    }
    if (weights->shape.size() != 4)
        throw UsageError("tensor '" + layer + "' is not a filter bank");

    fs::create_directories(out_dir);
    const int F = weights->shape[0], C = weights->shape[1];
    const int m = weights->shape[2], n = weights->shape[3];
    for (int f = 0; f < F; ++f) {
        // average across input channels to one m x n cell
        std::vector<float> cell(std::size_t(m) * n, 0.0f);
        for (int c = 0; c < C; ++c)
            for (std::size_t i = 0; i < cell.size(); ++i)
                cell[i] += weights->data[(std::size_t(f) * C + c) * cell.size() + i];
        for (auto& v : cell) v /= float(C);
        char name[64];
        std::snprintf(name, sizeof name, "filter_%03d.pgm", f);
        write_pgm((fs::path(out_dir) / name).string(), cell, m, n);
    }
    json summary;
    summary["layer"] = layer;
    summary["n_filters"] = F;
    summary["filter_shape"] = {m, n};
    summary["out_dir"] = out_dir;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"Timbre-CNN toolkit: log-mel features, architecture zoo, training"};
    app.require_subcommand(1);

    std::string manifest, cache_dir, profile_name = "mtt16k", arch_id, config_path;
    std::string out_path = "model.ckpt", checkpoint_path, split_name = "test";
    std::string layer_name, out_dir = "filters", metric_name, labels_path;
    int jobs = 1, widen = 1, epochs = 100, batch_size = 32, patience = 10;
    double lr = 0.01, weight_decay = 1e-4, tolerance = 1e-4;
    std::uint64_t seed = 1234;
    bool strict = false, full = false;

    auto* featurize = app.add_subcommand("featurize", "Extract log-mel features into a cache");
    featurize->add_option("--manifest", manifest, "NDJSON manifest")->required();
    featurize->add_option("--profile", profile_name, "phoneme44k | irmas12k | mtt16k");
    featurize->add_option("--cache-dir", cache_dir, "output directory")->required();
    featurize->add_option("--jobs", jobs, "worker threads");
    featurize->add_flag("--strict", strict, "exit nonzero on any per-file failure");

    auto* describe = app.add_subcommand("describe", "Print an architecture card");
    describe->add_option("--arch", arch_id, "architecture id")->required();
    describe->add_option("--widen", widen, "widen factor (mtt_proposed)");

    auto* train_cmd = app.add_subcommand("train", "Train a model from cached features");
    train_cmd->add_option("--manifest", manifest)->required();
    train_cmd->add_option("--cache-dir", cache_dir)->required();
    train_cmd->add_option("--arch", arch_id)->required();
    train_cmd->add_option("--widen", widen);
    train_cmd->add_option("--config", config_path, "JSON config (flags override)");
    train_cmd->add_option("--labels", labels_path, "label vocabulary file, one per line");
    train_cmd->add_option("--seed", seed);
    train_cmd->add_option("--out", out_path, "checkpoint path");
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--lr", lr);
    train_cmd->add_option("--batch-size", batch_size);
    train_cmd->add_option("--weight-decay", weight_decay);
    train_cmd->add_option("--patience", patience);
    train_cmd->add_option("--metric", metric_name, "accuracy | f1_micro | auc");

    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a manifest split");
    evaluate->add_option("--checkpoint", checkpoint_path)->required();
    evaluate->add_option("--manifest", manifest)->required();
    evaluate->add_option("--cache-dir", cache_dir)->required();
    evaluate->add_option("--labels", labels_path, "label vocabulary file, one per line");
    evaluate->add_option("--split", split_name, "train | val | test");

    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    gradcheck_cmd->add_option("--arch", arch_id)->required();
    gradcheck_cmd->add_option("--widen", widen);
    gradcheck_cmd->add_option("--tolerance", tolerance);
    gradcheck_cmd->add_option("--seed", seed);
    gradcheck_cmd->add_flag("--full", full, "check at the full spec input width");

    auto* export_cmd = app.add_subcommand("export-filters", "Write filters as PGM images");
    export_cmd->add_option("--checkpoint", checkpoint_path)->required();
    export_cmd->add_option("--layer", layer_name, "tensor name, e.g. branch0.conv.w")->required();
    export_cmd->add_option("--out-dir", out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (featurize->parsed())
            return cmd_featurize(manifest, profile_name, cache_dir, jobs, strict);
        if (describe->parsed()) return cmd_describe(arch_id, widen);
        if (train_cmd->parsed())
            return cmd_train(manifest, cache_dir, arch_id, widen, config_path, labels_path,
                             out_path, train_cmd, seed, epochs, lr, batch_size, weight_decay,
                             patience, metric_name);
        if (evaluate->parsed())
            return cmd_evaluate(checkpoint_path, manifest, cache_dir, labels_path, split_name);
        if (gradcheck_cmd->parsed()) {
            const std::uint64_t s = gradcheck_cmd->count("--seed") ? seed : env_seed(7);
            return cmd_gradcheck(arch_id, widen, tolerance, full, s);
        }
        if (export_cmd->parsed())
            return cmd_export_filters(checkpoint_path, layer_name, out_dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const arch::ArchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
