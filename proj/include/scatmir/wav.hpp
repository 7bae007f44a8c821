#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/signal.hpp"

namespace scatmir {

namespace detail {

inline std::uint16_t rd_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t rd_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void wr_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void wr_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void wr_tag(std::vector<std::uint8_t>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace detail

inline constexpr std::uint16_t kWavFormatPcm = 0x0001;
inline constexpr std::uint16_t kWavFormatFloat = 0x0003;

/// RIFF/WAVE decoder for PCM-16 and float-32 payloads. Stereo (or higher
/// channel counts) are downmixed to mono by averaging; samples come back as
/// 64-bit floats in [-1, 1].
inline Signal load_wav(const std::vector<std::uint8_t>& bytes) {
    using namespace detail;
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw ParseError("wav: not a RIFF/WAVE stream");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = rd_u32(bytes.data() + pos + 4);
        const std::uint8_t* tag = bytes.data() + pos;
        const std::size_t body = pos + 8;
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_len < 16 || body + 16 > bytes.size())
                throw ParseError("wav: truncated fmt chunk");
            format = rd_u16(bytes.data() + body);
            channels = rd_u16(bytes.data() + body + 2);
            rate = rd_u32(bytes.data() + body + 4);
            bits = rd_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_off = body;
            data_len = std::min<std::size_t>(chunk_len, bytes.size() - body);
        }
        pos = body + chunk_len + (chunk_len & 1);
    }
    if (!have_fmt) throw ParseError("wav: missing fmt chunk");
    if (data_off == 0) throw ParseError("wav: missing data chunk");
    if (channels == 0 || rate == 0) throw ParseError("wav: bad fmt fields");

    const bool pcm16 = format == kWavFormatPcm && bits == 16;
    const bool f32 = format == kWavFormatFloat && bits == 32;
    if (!pcm16 && !f32)
        throw ParseError("wav: unsupported codec (format tag " + std::to_string(format) +
                         ", " + std::to_string(bits) + " bits)");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t n_frames = data_len / frame_bytes;

    Signal out;
    out.sample_rate = static_cast<double>(rate);
    out.samples.resize(n_frames);
    const std::uint8_t* p = bytes.data() + data_off;
    for (std::size_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* s = p + f * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                const auto v = static_cast<std::int16_t>(rd_u16(s));
                acc += static_cast<double>(v) / 32768.0;
            } else {
                float v;
                std::memcpy(&v, s, 4);
                acc += static_cast<double>(v);
            }
        }
        out.samples[f] = acc / static_cast<double>(channels);
    }
    return out;
}

inline Signal load_wav_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("wav: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return load_wav(bytes);
}

inline std::vector<std::uint8_t> save_wav(const Signal& signal, std::uint16_t format) {
    using namespace detail;
    signal.validate();
    if (format != kWavFormatPcm && format != kWavFormatFloat)
        throw InvalidInput("wav: unsupported output format");
    const std::uint16_t bits = format == kWavFormatPcm ? 16 : 32;
    const std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate);
    const std::uint32_t data_len =
        static_cast<std::uint32_t>(signal.size() * (bits / 8));

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    wr_tag(out, "RIFF");
    wr_u32(out, 36 + data_len);
    wr_tag(out, "WAVE");
    wr_tag(out, "fmt ");
    wr_u32(out, 16);
    wr_u16(out, format);
    wr_u16(out, 1);  // mono
    wr_u32(out, rate);
    wr_u32(out, rate * (bits / 8));
    wr_u16(out, bits / 8);
    wr_u16(out, bits);
    wr_tag(out, "data");
    wr_u32(out, data_len);
    for (double v : signal.samples) {
        if (format == kWavFormatPcm) {
            const long q = std::lround(std::max(-1.0, std::min(1.0, v)) * 32768.0);
            const auto s = static_cast<std::int16_t>(std::clamp(q, -32768l, 32767l));
            wr_u16(out, static_cast<std::uint16_t>(s));
        } else {
            const float f = static_cast<float>(v);
            std::uint32_t bitsrep;
            std::memcpy(&bitsrep, &f, 4);
            wr_u32(out, bitsrep);
        }
    }
    return out;
}

inline void save_wav_file(const Signal& signal, const std::string& path,
                          std::uint16_t format = kWavFormatFloat) {
    const auto bytes = save_wav(signal, format);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("wav: cannot write " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

}  // namespace scatmir
