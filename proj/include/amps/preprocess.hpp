#pragma once

#include <span>
#include <vector>

#include "amps/dsp.hpp"

namespace amps::preprocess {

using dsp::Signal;

struct PreprocessConfig {
    double sample_rate = 44100.0;

    // shared band-limiting front end
    double band_low_hz = 800.0;
    double band_high_hz = 16000.0;
    std::size_t bandpass_taps = 513;
    // Peak normalization runs only when the filtered RMS exceeds this
    // fraction of the input RMS; stopband residue (and the edge transients
    // of a truncated signal) are not re-amplified to full scale.
    double norm_guard = 0.01;

    // energy activity gate
    double gate_band_low_hz = 2000.0;
    double gate_band_high_hz = 8000.0;
    double gate_ratio_threshold = 1.0;
    dsp::FrameSpec gate_frame{0.02, 0.01};
    std::size_t gate_median_block = 5;

    // sixth-octave noise reduction
    dsp::FrameSpec nr_frame{0.02, 0.01};
    std::size_t nr_keep = 3;
    double bank_center_hz = 2000.0;
    std::size_t bank_count = 20;
    double bank_band_low_hz = 500.0;
    double bank_band_high_hz = 16000.0;
};

// Bandpass then scale the peak to 1. Output whose RMS falls at or below
// `guard` times the input RMS (stopband residue, silence) passes through
// unscaled.
Signal bandlimit_normalize(std::span<const double> x, const dsp::FirFilter& band,
                           double guard);

struct GateResult {
    Signal kept;                  // active frames, overlap-added (time-compressed)
    std::vector<bool> flags;      // post-median activity per frame
};

// Keeps frames whose gate-band energy exceeds the energy in the rest of the
// signal band. Flags are median-filtered before reconstruction.
GateResult energy_activity_gate(std::span<const double> x, const PreprocessConfig& cfg);

// Per frame, keeps the nr_keep bank bands with the highest normalized energy
// and rebuilds the signal from their sum via tapered overlap-add.
Signal noise_reduce(std::span<const double> x, const dsp::FilterBank& bank,
                    const PreprocessConfig& cfg);

// Owns the designed filters; preprocessing is pure per call and safe to run
// on many windows in parallel.
class Preprocessor {
public:
    explicit Preprocessor(PreprocessConfig cfg);

    const PreprocessConfig& config() const { return cfg_; }
    const dsp::FilterBank& bank() const { return bank_; }

    Signal bandlimit_normalize(std::span<const double> x) const;
    GateResult gate(std::span<const double> x) const;
    Signal noise_reduce(std::span<const double> x) const;

    // pitch/spectral route: bandlimit+normalize -> gate -> noise reduction
    Signal for_pitch_spectral(std::span<const double> x) const;
    // amplitude-modulation route: bandlimit+normalize only, length preserved
    Signal for_am(std::span<const double> x) const;

private:
    PreprocessConfig cfg_;
    dsp::FirFilter band_;
    dsp::FilterBank bank_;
};

} // namespace amps::preprocess
