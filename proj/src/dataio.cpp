#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "timbre/dataio.hpp"

namespace timbre::dataio {

std::string split_str(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "unassigned";
    }
}

Split split_from(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val" || s == "validation") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned" || s.empty()) return Split::unassigned;
    throw DataError("bad split value: " + s);
}

int LabelVocab::index_of(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw DataError("unknown label: " + label);
    return static_cast<int>(it - labels.begin());
}

Manifest load_manifest(const std::string& path, TaskKind task,
                       const std::vector<std::string>& explicit_vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);

    Manifest m;
    m.vocab.task = task;
    m.vocab.labels = explicit_vocab;
    const bool fixed_vocab = !explicit_vocab.empty();

    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        ExampleRef ex;
        try {
            ex.id = j.at("id").get<std::string>();
            ex.audio_path = j.at("path").get<std::string>();
            for (const auto& l : j.at("labels")) ex.labels.push_back(l.get<std::string>());
            ex.song_id = j.at("song_id").get<std::string>();
            if (j.contains("split")) ex.split = split_from(j["split"].get<std::string>());
            if (j.contains("offset")) ex.offset_frames = j["offset"].get<long>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(ex.id).second)
            throw DataError("manifest line " + std::to_string(line_no) + ": duplicate id " + ex.id);
        if (ex.labels.empty() && ex.split == Split::train)
            throw DataError("manifest line " + std::to_string(line_no) +
                            ": train example with empty label list (id " + ex.id + ")");
        for (const auto& l : ex.labels) {
            if (std::find(m.vocab.labels.begin(), m.vocab.labels.end(), l) ==
                m.vocab.labels.end()) {
                if (fixed_vocab)
                    throw DataError("manifest line " + std::to_string(line_no) +
                                    ": label not in vocabulary: " + l);
                m.vocab.labels.push_back(l);
            }
        }
        m.examples.push_back(std::move(ex));
    }
    return m;
}

void random_split(std::vector<ExampleRef>& examples, double train_frac, double val_frac,
                  double test_frac, std::uint64_t seed) {
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw DataError("split fractions must sum to 1");

    std::vector<std::string> songs;  // first-appearance order
    std::set<std::string> seen;
    for (const auto& ex : examples)
        if (seen.insert(ex.song_id).second) songs.push_back(ex.song_id);
    if (songs.size() < 3) throw DataError("fewer songs than splits");

    Rng rng(seed, RngStream::shuffle);
    rng.shuffle(songs.begin(), songs.end());

    const std::size_t n = songs.size();
    const std::size_t c1 = static_cast<std::size_t>(std::llround(train_frac * double(n)));
    const std::size_t c2 = static_cast<std::size_t>(std::llround((train_frac + val_frac) * double(n)));

    std::map<std::string, Split> assign;
    for (std::size_t i = 0; i < n; ++i)
        assign[songs[i]] = i < c1 ? Split::train : i < c2 ? Split::val : Split::test;
    for (auto& ex : examples) ex.split = assign[ex.song_id];
}

std::vector<float> encode_labels(const std::vector<std::string>& labels, const LabelVocab& vocab) {
    if (vocab.task == TaskKind::single_label && labels.size() != 1 && !labels.empty())
        throw DataError("single-label task expects exactly one label, got " +
                        std::to_string(labels.size()));
    std::vector<float> target(vocab.size(), 0.0f);
    for (const auto& l : labels) target[static_cast<std::size_t>(vocab.index_of(l))] = 1.0f;
    return target;
}

namespace {

frontend::Spectrogram crop(const frontend::Spectrogram& spec, int start, int target) {
    frontend::Spectrogram out;
    out.n_mels = spec.n_mels;
    out.n_frames = target;
    out.sample_rate = spec.sample_rate;
    out.hop = spec.hop;
    out.values.assign(static_cast<std::size_t>(spec.n_mels) * target, 0.0f);
    for (int m = 0; m < spec.n_mels; ++m)
        for (int t = 0; t < target; ++t) {
            const int src = start + t;
            if (src >= 0 && src < spec.n_frames) out.at(m, t) = spec.at(m, src);
        }
    return out;
}

}  // namespace

std::vector<frontend::Spectrogram> slice_excerpt(const frontend::Spectrogram& spec,
                                                 int target_frames, SlicePolicy policy,
                                                 Rng* rng) {
    if (target_frames < 1) throw DataError("slice_excerpt: target_frames must be >= 1");
    if (spec.n_frames == target_frames) return {spec};
    if (spec.n_frames < target_frames) {
        // symmetric zero padding, extra frame trailing
        const int start = -(target_frames - spec.n_frames) / 2;
        return {crop(spec, start, target_frames)};
    }
    switch (policy) {
        case SlicePolicy::center:
            return {crop(spec, (spec.n_frames - target_frames) / 2, target_frames)};
        case SlicePolicy::random: {
            if (!rng) throw DataError("slice_excerpt: random policy needs an rng");
            const int span = spec.n_frames - target_frames + 1;
            return {crop(spec, static_cast<int>(rng->below(std::uint64_t(span))), target_frames)};
        }
        case SlicePolicy::tile: {
            std::vector<frontend::Spectrogram> out;
            const int n_windows = (spec.n_frames + target_frames - 1) / target_frames;
            for (int w = 0; w < n_windows; ++w) out.push_back(crop(spec, w * target_frames, target_frames));
            return out;
        }
    }
    throw DataError("slice_excerpt: bad policy");
}

namespace {

constexpr char kMagic[4] = {'M', 'E', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;

void wr_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t rd_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("truncated cache header: " + path);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

}  // namespace

void cache_write(const std::string& path, const frontend::Spectrogram& spec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cache file: " + path);
    out.write(kMagic, 4);
    wr_u32(out, kVersion);
    wr_u32(out, static_cast<std::uint32_t>(spec.n_mels));
    wr_u32(out, static_cast<std::uint32_t>(spec.n_frames));
    wr_u32(out, static_cast<std::uint32_t>(spec.sample_rate));
    wr_u32(out, static_cast<std::uint32_t>(spec.hop));
    static_assert(sizeof(float) == 4);
    // floats are written as little-endian IEEE-754
    out.write(reinterpret_cast<const char*>(spec.values.data()),
              static_cast<std::streamsize>(spec.values.size() * 4));
    if (!out) throw DataError("short write to cache file: " + path);
}

frontend::Spectrogram cache_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open cache file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad cache magic (expected MELF): " + path);
    const std::uint32_t version = rd_u32(in, path);
    if (version != kVersion)
        throw DataError("unsupported cache version " + std::to_string(version) + ": " + path);
    frontend::Spectrogram spec;
    spec.n_mels = static_cast<int>(rd_u32(in, path));
    spec.n_frames = static_cast<int>(rd_u32(in, path));
    spec.sample_rate = static_cast<int>(rd_u32(in, path));
    spec.hop = static_cast<int>(rd_u32(in, path));
    const std::size_t n = static_cast<std::size_t>(spec.n_mels) * spec.n_frames;
    spec.values.resize(n);
    in.read(reinterpret_cast<char*>(spec.values.data()), static_cast<std::streamsize>(n * 4));
    if (static_cast<std::size_t>(in.gcount()) != n * 4)
        throw DataError("cache payload length mismatch: " + path);
    return spec;
}

}  // namespace timbre::dataio
