#pragma once

// Minimal RIFF/WAVE reader and writer: PCM 16-bit and IEEE float32,
// mono or multichannel, little-endian. Unknown chunks are skipped on read.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hive/stft.hpp"

namespace hive {

enum class WavFormat { pcm16, float32 };

namespace detail {

inline void put_u32(std::ostream& o, std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    o.write(b, 4);
}
inline void put_u16(std::ostream& o, std::uint16_t v) {
    char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
    o.write(b, 2);
}
inline std::uint32_t get_u32(std::istream& i) {
    unsigned char b[4];
    i.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}
inline std::uint16_t get_u16(std::istream& i) {
    unsigned char b[2];
    i.read(reinterpret_cast<char*>(b), 2);
    return std::uint16_t(b[0] | (b[1] << 8));
}

} // namespace detail

inline void write_wav(const std::string& path, const TimeSignal& sig,
                      WavFormat fmt = WavFormat::float32) {
    const auto frames = sig.length();
    const auto ch = sig.channels();
    if (frames == 0 || ch == 0) throw std::invalid_argument("write_wav: empty signal");

    const int bytes_per = fmt == WavFormat::pcm16 ? 2 : 4;
    const std::uint32_t data_bytes = std::uint32_t(frames * ch * bytes_per);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_wav: cannot open " + path);

    out.write("RIFF", 4);
    detail::put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    detail::put_u32(out, 16);
    detail::put_u16(out, fmt == WavFormat::pcm16 ? 1 : 3);
    detail::put_u16(out, std::uint16_t(ch));
    detail::put_u32(out, std::uint32_t(sig.sample_rate));
    detail::put_u32(out, std::uint32_t(sig.sample_rate * ch * bytes_per));
    detail::put_u16(out, std::uint16_t(ch * bytes_per));
    detail::put_u16(out, std::uint16_t(8 * bytes_per));
    out.write("data", 4);
    detail::put_u32(out, data_bytes);

    for (Eigen::Index t = 0; t < frames; ++t) {
        for (Eigen::Index c = 0; c < ch; ++c) {
            const double v = sig.samples(t, c);
            if (fmt == WavFormat::pcm16) {
                double s = v * 32767.0;
                if (s > 32767.0) s = 32767.0;
                if (s < -32768.0) s = -32768.0;
                const auto iv = std::int16_t(std::lround(s));
                detail::put_u16(out, std::uint16_t(iv));
            } else {
                const float f = static_cast<float>(v);
                std::uint32_t u;
                std::memcpy(&u, &f, 4);
                detail::put_u32(out, u);
            }
        }
    }
}

inline TimeSignal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_wav: cannot open " + path);

    char tag[4];
    in.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) throw std::runtime_error("read_wav: not a RIFF file: " + path);
    detail::get_u32(in);
    in.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) throw std::runtime_error("read_wav: not a WAVE file: " + path);

    std::uint16_t fmt_code = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<char> data;
    while (in.read(tag, 4)) {
        const std::uint32_t sz = detail::get_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            fmt_code = detail::get_u16(in);
            channels = detail::get_u16(in);
            rate = detail::get_u32(in);
            detail::get_u32(in);
            detail::get_u16(in);
            bits = detail::get_u16(in);
            if (sz > 16) in.seekg(sz - 16, std::ios::cur);
        } else if (std::strncmp(tag, "data", 4) == 0) {
            data.resize(sz);
            in.read(data.data(), sz);
        } else {
            in.seekg(sz + (sz & 1), std::ios::cur);
        }
    }
    if (channels == 0 || data.empty()) throw std::runtime_error("read_wav: malformed file: " + path);

    const bool is_pcm16 = fmt_code == 1 && bits == 16;
    const bool is_f32 = fmt_code == 3 && bits == 32;
    if (!is_pcm16 && !is_f32)
        throw std::runtime_error("read_wav: unsupported sample format in " + path);

    const int bytes_per = is_pcm16 ? 2 : 4;
    const auto n = Eigen::Index(data.size() / (bytes_per * channels));

    TimeSignal sig;
    sig.sample_rate = static_cast<int>(rate);
    sig.samples.resize(n, channels);
    const char* p = data.data();
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int c = 0; c < channels; ++c) {
            if (is_pcm16) {
                std::int16_t v;
                std::memcpy(&v, p, 2);
                p += 2;
                sig.samples(t, c) = v / 32767.0;
            } else {
                float f;
                std::memcpy(&f, p, 4);
                p += 4;
                sig.samples(t, c) = f;
            }
        }
    }
    return sig;
}

} // namespace hive
