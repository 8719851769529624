#include <cmath>
#include <complex>
#include <cstring>

#include "timbre/frontend.hpp"

namespace timbre::frontend {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

// Iterative radix-2 complex FFT, in place.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

std::vector<float> stft_magnitude(const std::vector<float>& signal, const StftConfig& cfg,
                                  int& n_frames_out) {
    if (cfg.hop < 1 || cfg.window_length < 1)
        throw FrontendError("stft: window_length and hop must be positive");
    if (cfg.fft_size < cfg.window_length || !is_pow2(cfg.fft_size))
        throw FrontendError("stft: fft_size must be a power of two >= window_length");
    const int len = static_cast<int>(signal.size());
    if (len < cfg.window_length)
        throw FrontendError("stft: signal shorter than one window");

    const int n_frames = (len - cfg.window_length) / cfg.hop + 1;
    const int n_bins = cfg.fft_size / 2 + 1;
    n_frames_out = n_frames;

    // periodic Hann
    std::vector<double> window(cfg.window_length);
    for (int i = 0; i < cfg.window_length; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / cfg.window_length));

    std::vector<float> grid(static_cast<std::size_t>(n_bins) * n_frames, 0.0f);
    std::vector<std::complex<double>> frame(cfg.fft_size);
    for (int t = 0; t < n_frames; ++t) {
        const int off = t * cfg.hop;
        for (int i = 0; i < cfg.window_length; ++i)
            frame[i] = signal[off + i] * window[i];
        for (int i = cfg.window_length; i < cfg.fft_size; ++i) frame[i] = 0.0;
        fft_radix2(frame);
        for (int k = 0; k < n_bins; ++k)
            grid[static_cast<std::size_t>(k) * n_frames + t] =
                static_cast<float>(std::abs(frame[k]));
    }
    return grid;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<float> mel_filterbank(const MelConfig& cfg, int fft_size, int sample_rate) {
    if (cfg.n_mels < 1) throw FrontendError("mel: n_mels must be >= 1");
    if (cfg.f_min < 0.0 || cfg.f_min >= cfg.f_max || cfg.f_max > sample_rate / 2.0 + 1e-9)
        throw FrontendError("mel: need 0 <= f_min < f_max <= sample_rate/2");

    const int n_bins = fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(cfg.f_min);
    const double mel_hi = hz_to_mel(cfg.f_max);
    std::vector<double> centers_hz(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i)
        centers_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));

    std::vector<float> fb(static_cast<std::size_t>(cfg.n_mels) * n_bins, 0.0f);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double left = centers_hz[m], center = centers_hz[m + 1], right = centers_hz[m + 2];
        bool any = false;
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / fft_size;
            double v = 0.0;
            if (f > left && f < center)
                v = (f - left) / (center - left);
            else if (f >= center && f < right)
                v = (right - f) / (right - center);
            if (v > 0.0) {
                fb[static_cast<std::size_t>(m) * n_bins + k] = static_cast<float>(v);
                any = true;
            }
        }
        if (!any)
            throw FrontendError("mel: filter " + std::to_string(m) +
                                " has empty support (n_mels too large for FFT resolution)");
    }
    return fb;
}

void log_compress(std::vector<float>& grid) {
    for (auto& v : grid) v = std::log(std::max(v, 1e-10f));
}

namespace {
const FeatureProfile kProfiles[] = {
    // 25 ms window at 44.1 kHz (1102 samples) zero-padded to 2048, 10 ms hop
    {"phoneme44k", 44100, {1102, 2048, 441}, 80},
    {"irmas12k", 12000, {512, 512, 256}, 96},
    {"mtt16k", 16000, {512, 512, 256}, 128},
};
}

const FeatureProfile& profile(const std::string& name) {
    for (const auto& p : kProfiles)
        if (p.name == name) return p;
    throw FrontendError("unknown feature profile: " + name);
}

std::vector<std::string> profile_names() {
    std::vector<std::string> out;
    for (const auto& p : kProfiles) out.push_back(p.name);
    return out;
}

Spectrogram featurize_buffer(const audio::AudioBuffer& buf, const FeatureProfile& prof) {
    audio::AudioBuffer mono = audio::downmix(buf);
    mono = audio::resample(mono, prof.sample_rate);

    int n_frames = 0;
    std::vector<float> mag = stft_magnitude(mono.channels[0], prof.stft, n_frames);
    const int n_bins = prof.stft.fft_size / 2 + 1;

    MelConfig mel_cfg{prof.n_mels, 0.0, prof.sample_rate / 2.0};
    std::vector<float> fb = mel_filterbank(mel_cfg, prof.stft.fft_size, prof.sample_rate);

    Spectrogram spec;
    spec.n_mels = prof.n_mels;
    spec.n_frames = n_frames;
    spec.sample_rate = prof.sample_rate;
    spec.hop = prof.stft.hop;
    spec.values.assign(static_cast<std::size_t>(prof.n_mels) * n_frames, 0.0f);
    for (int m = 0; m < prof.n_mels; ++m) {
        const float* fb_row = fb.data() + static_cast<std::size_t>(m) * n_bins;
        for (int k = 0; k < n_bins; ++k) {
            const float w = fb_row[k];
            if (w == 0.0f) continue;
            const float* mag_row = mag.data() + static_cast<std::size_t>(k) * n_frames;
            float* out_row = spec.values.data() + static_cast<std::size_t>(m) * n_frames;
            for (int t = 0; t < n_frames; ++t) out_row[t] += w * mag_row[t];
        }
    }
    log_compress(spec.values);
    return spec;
}

Spectrogram featurize(const std::string& path, const FeatureProfile& prof) {
    return featurize_buffer(audio::load_wav(path), prof);
}

NormStats fit_norm_stats(const std::vector<const Spectrogram*>& specs) {
    if (specs.empty()) throw FrontendError("fit_norm_stats: empty collection");
    const int n_mels = specs[0]->n_mels;
    for (const auto* s : specs)
        if (s->n_mels != n_mels) throw FrontendError("fit_norm_stats: n_mels mismatch");

    NormStats stats;
    stats.mean.assign(n_mels, 0.0f);
    stats.std.assign(n_mels, 0.0f);
    std::vector<double> sum(n_mels, 0.0), sumsq(n_mels, 0.0);
    std::size_t count = 0;
    for (const auto* s : specs) {
        for (int m = 0; m < n_mels; ++m) {
            const float* row = s->values.data() + static_cast<std::size_t>(m) * s->n_frames;
            for (int t = 0; t < s->n_frames; ++t) {
                sum[m] += row[t];
                sumsq[m] += double(row[t]) * row[t];
            }
        }
        count += static_cast<std::size_t>(s->n_frames);
    }
    for (int m = 0; m < n_mels; ++m) {
        const double mean = sum[m] / double(count);
        const double var = std::max(0.0, sumsq[m] / double(count) - mean * mean);
        stats.mean[m] = static_cast<float>(mean);
        stats.std[m] = static_cast<float>(std::max(std::sqrt(var), 1e-8));
    }
    return stats;
}

void normalize(Spectrogram& spec, const NormStats& stats) {
    if (static_cast<int>(stats.mean.size()) != spec.n_mels)
        throw FrontendError("normalize: stats dimension mismatch");
    for (int m = 0; m < spec.n_mels; ++m) {
        const float mu = stats.mean[m];
        const float inv = 1.0f / stats.std[m];
        float* row = spec.values.data() + static_cast<std::size_t>(m) * spec.n_frames;
        for (int t = 0; t < spec.n_frames; ++t) row[t] = (row[t] - mu) * inv;
    }
}

}  // namespace timbre::frontend
