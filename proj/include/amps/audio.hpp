#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace amps::audio {

struct Recording {
    std::string id;               // filename stem
    std::vector<double> samples;  // mono, full scale in [-1, 1]
    double sample_rate = 0.0;

    double duration_s() const {
        return sample_rate > 0.0 ? double(samples.size()) / sample_rate : 0.0;
    }
};

// Reads a mono PCM WAV (16-bit integer or 32-bit float payload). Rejects
// multichannel files and any sample rate other than `expected_rate`;
// resampling is out of scope and the downstream analysis is rate-specific.
// Pass expected_rate = 0 to accept any rate.
Recording load_recording(const std::filesystem::path& path, double expected_rate = 44100.0);

// 16-bit PCM writer used by the test corpus generators and utilities.
void write_wav_pcm16(const std::filesystem::path& path, const std::vector<double>& samples,
                     double sample_rate);

} // namespace amps::audio
