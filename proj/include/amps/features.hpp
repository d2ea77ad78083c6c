#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amps/dsp.hpp"
#include "amps/preprocess.hpp"

namespace amps::features {

using dsp::Signal;

struct FeatureConfig {
    // analysis frames shared by the pitch, spectral, and cepstral extractors
    dsp::FrameSpec frame{0.02, 0.01};

    // pitch tracking
    double yin_threshold = 0.3;
    double pitch_min_hz = 200.0;
    double pitch_max_hz = 10000.0;
    std::size_t track_len = 50; // pitch samples kept per window

    // spectral statistics
    double rolloff_fraction = 0.85;

    // amplitude modulation, measured in four two-octave bands
    std::array<std::pair<double, double>, 4> am_bands{{{500.0, 2000.0},
                                                       {1000.0, 4000.0},
                                                       {2000.0, 8000.0},
                                                       {4000.0, 16000.0}}};
    std::size_t am_band_taps = 513;
    std::size_t am_blocks = 100;    // envelope samples per window
    std::size_t am_block_len = 441; // signal samples per envelope block (10 ms)
    double am_min_hz = 1.0;
    double am_max_hz = 10.0;
    double prominence_cutoff = 3.0;
    // harmonics are only examined when the fundamental's prominence reaches
    // strong_factor * prominence_cutoff
    double strong_factor = 2.0;
    double depth_threshold = 0.01;

    // cepstral baseline
    std::size_t mfcc_coeffs = 13;
    std::size_t mel_filters = 26;
    double mel_log_floor = 1e-10;
};

// ---------------------------------------------------------------------------
// Pitch
// ---------------------------------------------------------------------------

// Fixed-length fundamental-frequency track for one analysis window. Unvoiced
// slots hold quiet NaN; voiced values lie within [pitch_min_hz, pitch_max_hz].
struct PitchTrack {
    std::vector<double> values;

    std::size_t voiced_count() const;
};

// Per-frame fundamental-frequency estimation: cumulative-mean-normalized
// difference function, first dip under `yin_threshold` followed to its local
// minimum, then parabolic refinement. Frames with no qualifying dip are
// unvoiced. The track always has cfg.track_len entries: when the signal
// yields more frames than that, an evenly spaced subset is kept; when it
// yields fewer, the tail is padded unvoiced.
PitchTrack yin_pitch_track(std::span<const double> x, double sample_rate,
                           const FeatureConfig& cfg = {});

struct PitchMoments {
    double mean = 0.0;
    double variance = 0.0; // population second central moment
    double skew = 0.0;     // standardized third moment
    double kurtosis = 0.0; // standardized fourth moment (not excess)
};

// Moments over the voiced entries only. No voiced entries -> all zeros;
// variance under 1e-12 -> skew and kurtosis are forced to zero instead of
// dividing by a vanishing spread.
PitchMoments pitch_moments(const PitchTrack& track);

// ---------------------------------------------------------------------------
// Spectral statistics
// ---------------------------------------------------------------------------

struct SpectralStats {
    double centroid_mean = 0.0;
    double centroid_variance = 0.0;
    double rolloff_mean = 0.0;
    double rolloff_variance = 0.0;
};

// Per Hann-windowed frame: centroid = sum(f * P(f)) / sum(P(f)) and rolloff =
// the lowest bin frequency at or below which `rolloff_fraction` of the frame's
// spectral energy lies; then mean and population variance across frames.
// Empty or all-zero input gives all four values zero.
SpectralStats spectral_features(std::span<const double> x, double sample_rate,
                                const FeatureConfig& cfg = {});

// ---------------------------------------------------------------------------
// Amplitude modulation
// ---------------------------------------------------------------------------

// Band-filter the window and reduce each of `blocks` consecutive runs of
// `block_len` samples to its root-mean-square value. Input shorter than
// blocks * block_len is an error; extra samples beyond that span are ignored.
Signal am_envelope(std::span<const double> x, const dsp::FirFilter& band,
                   std::size_t blocks = 100, std::size_t block_len = 441);

struct AmBandResult {
    int band_index = 0;
    bool detected = false;
    double frequency = 0.0;  // Hz; 0 when not detected
    double prominence = 0.0; // ratio; 0 when not detected
    double depth = 0.0;      // envelope units; 0 when not detected
    std::vector<int> kept_harmonics; // subset of {1, 2, 3}
};

// Detect periodic amplitude modulation in one band's envelope. The envelope
// mean is removed, the power spectrum taken (bin width `bin_hz`), and the
// strongest bin within [am_min_hz, am_max_hz] becomes the candidate. Its
// prominence is its power over the mean power of the seven bins centered on
// it (clipped at the spectrum edges). Candidates under prominence_cutoff are
// rejected; candidates at or above strong_factor * prominence_cutoff also get
// their 2nd and 3rd harmonics tested (best bin within +-1, same prominence
// rule). The kept bins (plus conjugate mirrors) are transformed back to the
// time domain and the modulation depth is that reconstruction's 95th minus
// 5th percentile (linear interpolation); depths under depth_threshold are
// rejected. The envelope must have exactly cfg.am_blocks samples.
AmBandResult am_band_analysis(std::span<const double> envelope,
                              const FeatureConfig& cfg = {}, int band_index = 0,
                              double bin_hz = 1.0);

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

struct AmpsFeatureVector {
    double pitch_mean = 0.0;
    double pitch_variance = 0.0;
    double pitch_skew = 0.0;
    double pitch_kurtosis = 0.0;
    double centroid_mean = 0.0;
    double centroid_variance = 0.0;
    double rolloff_mean = 0.0;
    double rolloff_variance = 0.0;
    double am_frequency = 0.0;
    double am_prominence = 0.0;
    double am_depth = 0.0;

    std::array<double, 11> values() const;
};

// Combine per-window pitch moments, spectral statistics, and the four band
// results into the 11-value vector. The modulation triple comes from the
// detected band with the highest prominence (ties go to the lowest band
// index); when no band detected modulation the triple is zero.
AmpsFeatureVector assemble_amps(const PitchMoments& pitch, const SpectralStats& spectral,
                                std::span<const AmBandResult> bands);

struct MfccFeatureVector {
    std::vector<double> coeff_mean;     // one per kept cepstral coefficient
    std::vector<double> coeff_variance; // population variance across frames

    std::vector<double> values() const; // means then variances
};

// Mel-cepstral summary of a signal: per Hann-windowed frame the magnitude
// spectrum is pooled through `mel_filters` triangular filters spanning
// 0..sample_rate/2, log-compressed (floor mel_log_floor), and cosine
// transformed; coefficients 0..mfcc_coeffs-1 are kept and summarized by their
// mean and population variance across frames. No frames -> all zeros.
MfccFeatureVector mfcc_features(std::span<const double> x, double sample_rate,
                                const FeatureConfig& cfg = {});

// p-th percentile (0..100) with linear interpolation between order
// statistics; `values` need not be sorted. Empty input is an error.
double percentile_linear(std::span<const double> values, double p);

// ---------------------------------------------------------------------------
// Window-level extraction
// ---------------------------------------------------------------------------

// Owns the preprocessing filters and the four modulation band filters.
// Extraction is pure per call and safe to run on many windows concurrently.
class FeatureExtractor {
public:
    explicit FeatureExtractor(preprocess::PreprocessConfig pcfg = {},
                              FeatureConfig fcfg = {});

    const FeatureConfig& config() const { return fcfg_; }
    const preprocess::Preprocessor& preprocessor() const { return pre_; }
    const dsp::FirFilter& am_band_filter(std::size_t i) const { return am_bands_.at(i); }

    // Pitch/spectral path feeds the pitch moments and spectral statistics;
    // the modulation path feeds the four band analyses; the winning band's
    // triple completes the 11 values.
    AmpsFeatureVector extract_amps(std::span<const double> window_samples) const;

    // Cepstral baseline over the band-limited, normalized window.
    MfccFeatureVector extract_mfcc(std::span<const double> window_samples) const;

private:
    preprocess::PreprocessConfig pcfg_;
    FeatureConfig fcfg_;
    preprocess::Preprocessor pre_;
    std::vector<dsp::FirFilter> am_bands_;
};

// Column names matching AmpsFeatureVector::values() / MfccFeatureVector::values().
std::vector<std::string> amps_feature_names();
std::vector<std::string> mfcc_feature_names(std::size_t n_coeffs = 13);

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

struct FeatureRow {
    std::string recording_id;
    int window_index = 0;
    int label = 0;
    std::vector<double> values;
};

struct FeatureTable {
    std::vector<std::string> names; // feature column names
    std::vector<FeatureRow> rows;
};

// Header `recording_id,window_index,label,<names...>`, one row per window,
// values printed so they reparse to the same doubles.
std::string format_features_csv(const FeatureTable& table);
FeatureTable parse_features_csv(const std::string& text);
void save_features_csv(const std::string& path, const FeatureTable& table);
FeatureTable load_features_csv(const std::string& path);

} // namespace amps::features
