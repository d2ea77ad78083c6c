#include "amps/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "amps/common.hpp"

namespace amps::audio {

namespace {

uint32_t rd_u32(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const unsigned char* p) { return uint16_t(p[0] | p[1] << 8); }

void wr_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

} // namespace

Recording load_recording(const std::filesystem::path& path, double expected_rate) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCategory::io, "cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        fail(ErrorCategory::data, path.string() + ": not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const unsigned char* hdr = buf.data() + pos;
        const uint32_t chunk_len = rd_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > buf.size())
            fail(ErrorCategory::data, path.string() + ": truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) fail(ErrorCategory::data, path.string() + ": bad fmt chunk");
            format = rd_u16(buf.data() + body);
            channels = rd_u16(buf.data() + body + 2);
            rate = rd_u32(buf.data() + body + 4);
            bits = rd_u16(buf.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = buf.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr)
        fail(ErrorCategory::data, path.string() + ": missing fmt or data chunk");
    if (channels != 1)
        fail(ErrorCategory::data, path.string() + ": expected mono, got " +
                                      std::to_string(channels) + " channels");
    if (expected_rate > 0.0 && double(rate) != expected_rate)
        fail(ErrorCategory::data, path.string() + ": sample rate " + std::to_string(rate) +
                                      " != required " +
                                      std::to_string(std::llround(expected_rate)));

    Recording rec;
    rec.id = path.stem().string();
    rec.sample_rate = double(rate);

    if (format == 1 && bits == 16) {
        const std::size_t n = data_len / 2;
        rec.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<int16_t>(rd_u16(data + 2 * i));
            rec.samples[i] = double(v) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = data_len / 4;
        rec.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            uint32_t raw = rd_u32(data + 4 * i);
            float v;
            std::memcpy(&v, &raw, 4);
            rec.samples[i] = double(v);
        }
    } else {
        fail(ErrorCategory::data, path.string() + ": unsupported encoding (format " +
                                      std::to_string(format) + ", " + std::to_string(bits) +
                                      " bits)");
    }
    return rec;
}

void write_wav_pcm16(const std::filesystem::path& path, const std::vector<double>& samples,
                     double sample_rate) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCategory::io, "cannot write " + path.string());
    const auto rate = static_cast<uint32_t>(std::llround(sample_rate));
    const auto n = static_cast<uint32_t>(samples.size());
    const uint32_t data_len = n * 2;

    f.write("RIFF", 4);
    wr_u32(f, 36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    wr_u32(f, 16);
    wr_u16(f, 1);  // PCM
    wr_u16(f, 1);  // mono
    wr_u32(f, rate);
    wr_u32(f, rate * 2);
    wr_u16(f, 2);
    wr_u16(f, 16);
    f.write("data", 4);
    wr_u32(f, data_len);
    for (double s : samples) {
        const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
        const auto v = static_cast<int16_t>(std::lround(clamped * 32768.0));
        wr_u16(f, static_cast<uint16_t>(v));
    }
    if (!f) fail(ErrorCategory::io, "short write to " + path.string());
}

} // namespace amps::audio
