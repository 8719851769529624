#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace timbre::audio {

struct AudioBuffer {
    std::vector<std::vector<float>> channels;  // samples in [-1, 1]
    int sample_rate = 0;

    int n_channels() const { return static_cast<int>(channels.size()); }
    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
};

struct AudioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads a RIFF/WAVE file. PCM 16-bit and IEEE-float 32-bit are supported;
// 16-bit samples are scaled by 1/32768.
AudioBuffer load_wav(const std::string& path);

// Writes PCM16 or float32 WAV (test fixtures and conversion helpers).
void save_wav(const std::string& path, const AudioBuffer& buf, bool float32 = false);

// Averages all channels into one.
AudioBuffer downmix(const AudioBuffer& buf);

// Kaiser-windowed sinc polyphase resampling (beta 8.6, 32 taps per phase).
// Equal source/target rate is a bit-identical passthrough.
AudioBuffer resample(const AudioBuffer& buf, int target_sr);

}  // namespace timbre::audio
