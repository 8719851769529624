#include <cmath>
#include <cstdint>
#include <numeric>

#include "timbre/audio.hpp"

namespace timbre::audio {

namespace {

constexpr int kTapsPerPhase = 32;
constexpr double kKaiserBeta = 8.6;

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = 3.14159265358979323846 * x;
    return std::sin(px) / px;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buf, int target_sr) {
    if (target_sr <= 0) throw AudioError("resample: target rate must be positive");
    if (buf.n_channels() != 1) throw AudioError("resample: mono input required");
    if (target_sr == buf.sample_rate) return buf;

    const int source_sr = buf.sample_rate;
    const int g = std::gcd(source_sr, target_sr);
    const int up = target_sr / g;    // L phases
    const int down = source_sr / g;  // M step in the upsampled grid

    // Prototype lowpass at min(source, target)/2, sampled on the x-rate-times-L
    // grid. Per-phase DC normalization makes constants pass at unity gain.
    const int n_taps = kTapsPerPhase * up;
    const double cutoff = 0.5 * std::min(1.0, double(target_sr) / source_sr) / up;
    const double center = (n_taps - 1) / 2.0;
    const double i0_beta = bessel_i0(kKaiserBeta);

    std::vector<double> proto(n_taps);
    for (int i = 0; i < n_taps; ++i) {
        const double t = i - center;
        const double w_arg = 2.0 * i / (n_taps - 1) - 1.0;
        const double window = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - w_arg * w_arg))) / i0_beta;
        proto[i] = 2.0 * cutoff * sinc(2.0 * cutoff * t) * window;
    }
    // phase p taps: proto[p], proto[p+L], ...
    std::vector<double> phase_sum(up, 0.0);
    for (int i = 0; i < n_taps; ++i) phase_sum[i % up] += proto[i];
    for (int i = 0; i < n_taps; ++i)
        if (std::abs(phase_sum[i % up]) > 1e-12) proto[i] /= phase_sum[i % up];

    const auto& x = buf.channels[0];
    const std::int64_t in_len = static_cast<std::int64_t>(x.size());
    const std::int64_t out_len =
        static_cast<std::int64_t>(std::llround(double(in_len) * target_sr / source_sr));

    AudioBuffer out;
    out.sample_rate = target_sr;
    out.channels.assign(1, std::vector<float>(static_cast<std::size_t>(out_len)));

    const std::int64_t delay = (n_taps - 1) / 2;  // center the filter
    for (std::int64_t n = 0; n < out_len; ++n) {
        const std::int64_t u = n * down + delay;
        const int p = static_cast<int>(u % up);
        const std::int64_t base = u / up;
        double acc = 0.0;
        for (int k = 0; k < kTapsPerPhase; ++k) {
            const std::int64_t j = p + std::int64_t(k) * up;
            const std::int64_t xi = base - k;
            if (xi >= 0 && xi < in_len) acc += proto[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(xi)];
        }
        out.channels[0][static_cast<std::size_t>(n)] = static_cast<float>(acc);
    }
    return out;
}

}  // namespace timbre::audio
