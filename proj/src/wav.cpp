#include <cstdint>
#include <cstring>
#include <fstream>

#include "timbre/audio.hpp"

namespace timbre::audio {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}
std::uint16_t rd_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | p[1] << 8);
}

void wr_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

AudioBuffer load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AudioError("cannot open audio file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw AudioError("not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, n_channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::uint32_t data_len = 0;
    bool have_fmt = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        std::uint32_t chunk_len = rd_u32(hdr + 4);
        std::size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (body + 16 > bytes.size()) throw AudioError("truncated fmt chunk: " + path);
            format = rd_u16(bytes.data() + body);
            n_channels = rd_u16(bytes.data() + body + 2);
            sample_rate = rd_u32(bytes.data() + body + 4);
            bits = rd_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (body + chunk_len > bytes.size())
                throw AudioError("truncated data chunk: " + path);
            data_ptr = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);
    }

    if (!have_fmt || data_ptr == nullptr) throw AudioError("missing fmt/data chunk: " + path);
    if (n_channels == 0 || sample_rate == 0) throw AudioError("bad fmt chunk: " + path);

    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32)
        throw AudioError("unsupported WAV encoding (need PCM16 or float32): " + path);

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * n_channels;
    const std::size_t n_frames = data_len / frame_bytes;

    AudioBuffer buf;
    buf.sample_rate = static_cast<int>(sample_rate);
    buf.channels.assign(n_channels, std::vector<float>(n_frames));
    for (std::size_t i = 0; i < n_frames; ++i) {
        for (int c = 0; c < n_channels; ++c) {
            const unsigned char* p = data_ptr + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                std::int16_t v = static_cast<std::int16_t>(rd_u16(p));
                buf.channels[c][i] = static_cast<float>(v) / 32768.0f;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                buf.channels[c][i] = v;
            }
        }
    }
    return buf;
}

void save_wav(const std::string& path, const AudioBuffer& buf, bool float32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw AudioError("cannot write audio file: " + path);
    const int nc = buf.n_channels();
    const std::size_t n = buf.length();
    const std::uint16_t bits = float32 ? 32 : 16;
    const std::uint32_t byte_rate = buf.sample_rate * nc * bits / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(n * nc * bits / 8);

    out.write("RIFF", 4);
    wr_u32(out, 36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    wr_u32(out, 16);
    wr_u16(out, float32 ? 3 : 1);
    wr_u16(out, static_cast<std::uint16_t>(nc));
    wr_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
    wr_u32(out, byte_rate);
    wr_u16(out, static_cast<std::uint16_t>(nc * bits / 8));
    wr_u16(out, bits);
    out.write("data", 4);
    wr_u32(out, data_len);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < nc; ++c) {
            float v = buf.channels[c][i];
            if (float32) {
                out.write(reinterpret_cast<char*>(&v), 4);
            } else {
                float scaled = v * 32768.0f;
                if (scaled > 32767.0f) scaled = 32767.0f;
                if (scaled < -32768.0f) scaled = -32768.0f;
                wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
            }
        }
    }
}

AudioBuffer downmix(const AudioBuffer& buf) {
    if (buf.n_channels() == 0) throw AudioError("downmix: empty buffer");
    if (buf.n_channels() == 1) return buf;
    AudioBuffer out;
    out.sample_rate = buf.sample_rate;
    const std::size_t n = buf.length();
    out.channels.assign(1, std::vector<float>(n));
    const float inv = 1.0f / static_cast<float>(buf.n_channels());
    for (std::size_t i = 0; i < n; ++i) {
        float acc = 0.0f;
        for (const auto& ch : buf.channels) acc += ch[i];
        out.channels[0][i] = acc * inv;
    }
    return out;
}

}  // namespace timbre::audio
