#pragma once

#include <string>
#include <vector>

#include "timbre/audio.hpp"

namespace timbre::frontend {

struct FrontendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StftConfig {
    int window_length = 0;
    int fft_size = 0;  // power of two, >= window_length
    int hop = 0;
    // window kind: Hann (periodic), the only supported option
};

struct MelConfig {
    int n_mels = 0;
    double f_min = 0.0;
    double f_max = 0.0;  // <= sample_rate / 2
};

// M x N grid of log-mel magnitudes plus extraction metadata.
struct Spectrogram {
    std::vector<float> values;  // row-major, n_mels x n_frames
    int n_mels = 0;
    int n_frames = 0;
    int sample_rate = 0;
    int hop = 0;

    float& at(int m, int n) { return values[static_cast<std::size_t>(m) * n_frames + n]; }
    float at(int m, int n) const { return values[static_cast<std::size_t>(m) * n_frames + n]; }
};

// Per-mel-bin normalization statistics; std floored at 1e-8.
struct NormStats {
    std::vector<float> mean;
    std::vector<float> std;
};

// Hann-windowed magnitude STFT: (fft_size/2 + 1) x N grid, row-major,
// N = floor((len - window_length) / hop) + 1.
std::vector<float> stft_magnitude(const std::vector<float>& signal, const StftConfig& cfg,
                                  int& n_frames_out);

// HTK mel scale: 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filterbank, peak height 1; rows are n_mels x (fft_size/2 + 1).
std::vector<float> mel_filterbank(const MelConfig& cfg, int fft_size, int sample_rate);

// Elementwise ln(max(x, 1e-10)), in place.
void log_compress(std::vector<float>& grid);

struct FeatureProfile {
    std::string name;
    int sample_rate;
    StftConfig stft;
    int n_mels;
};

// phoneme44k, irmas12k, mtt16k
const FeatureProfile& profile(const std::string& name);
std::vector<std::string> profile_names();

// load -> downmix -> resample -> stft -> mel -> log
Spectrogram featurize(const std::string& path, const FeatureProfile& prof);
Spectrogram featurize_buffer(const audio::AudioBuffer& buf, const FeatureProfile& prof);

// Per-bin statistics pooled over all frames of all spectrograms.
NormStats fit_norm_stats(const std::vector<const Spectrogram*>& specs);
void normalize(Spectrogram& spec, const NormStats& stats);

}  // namespace timbre::frontend
