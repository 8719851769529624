#pragma once

#include <optional>
#include <string>
#include <vector>

#include "timbre/frontend.hpp"
#include "timbre/rng.hpp"

namespace timbre::dataio {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Split { train, val, test, unassigned };

std::string split_str(Split s);
Split split_from(const std::string& s);

struct ExampleRef {
    std::string id;
    std::string audio_path;
    std::vector<std::string> labels;
    std::string song_id;
    Split split = Split::unassigned;
    // Optional frame offset for per-frame tasks: when >= 0, excerpts are
    // centered on this frame instead of the spectrogram middle.
    long offset_frames = -1;
};

enum class TaskKind { single_label, multi_label };

struct LabelVocab {
    std::vector<std::string> labels;  // index mapping stable across runs
    TaskKind task = TaskKind::single_label;

    int index_of(const std::string& label) const;
    int size() const { return static_cast<int>(labels.size()); }
};

struct Manifest {
    std::vector<ExampleRef> examples;
    LabelVocab vocab;
};

// Newline-delimited JSON records: {"id", "path", "labels", "song_id",
// optional "split", optional "offset"}. Vocabulary is built in
// first-appearance order unless an explicit label list is supplied.
Manifest load_manifest(const std::string& path, TaskKind task,
                       const std::vector<std::string>& explicit_vocab = {});

// Deterministic song-grouped split: all examples sharing a song_id land in
// the same split.
void random_split(std::vector<ExampleRef>& examples, double train_frac, double val_frac,
                  double test_frac, std::uint64_t seed);

// One-hot (single_label) or multi-hot (multi_label) target vector.
std::vector<float> encode_labels(const std::vector<std::string>& labels, const LabelVocab& vocab);

enum class SlicePolicy { center, random, tile };

// Fixed-width excerpts from a spectrogram. center: middle crop; random:
// uniformly placed crop; tile: consecutive non-overlapping windows, last one
// zero-padded. Inputs shorter than the target are zero-padded symmetrically.
std::vector<frontend::Spectrogram> slice_excerpt(const frontend::Spectrogram& spec,
                                                 int target_frames, SlicePolicy policy,
                                                 Rng* rng = nullptr);

// Binary feature cache ("MELF"): magic, then version, n_mels, n_frames,
// sample_rate, hop as little-endian u32, then float32 payload.
void cache_write(const std::string& path, const frontend::Spectrogram& spec);
frontend::Spectrogram cache_read(const std::string& path);

}  // namespace timbre::dataio
