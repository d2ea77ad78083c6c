#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace amps::dsp {

using Signal = std::vector<double>;
using Cpx = std::complex<double>;

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

// DFT of arbitrary length. Power-of-two sizes run radix-2 in place; other
// sizes go through Bluestein's chirp-z reformulation, so every length gets
// exact DFT semantics (not a zero-padded approximation).
std::vector<Cpx> dft(std::span<const Cpx> x, bool inverse = false);
std::vector<Cpx> dft_real(std::span<const double> x);

// One-sided power spectrum: P[k] = |X[k]|^2 / N^2 for k = 0 .. floor(N/2).
// With this scaling a unit-amplitude on-bin cosine yields P[k0] = 0.25 and
// a constant signal c yields P[0] = c^2.
std::vector<double> power_spectrum(std::span<const double> x);

// ---------------------------------------------------------------------------
// Framing
// ---------------------------------------------------------------------------

struct FrameSpec {
    double length_s = 0.02;
    double hop_s = 0.01;
};

struct FrameLayout {
    std::size_t length = 0; // samples per frame
    std::size_t hop = 0;    // samples between frame starts
    std::size_t count = 0;  // full frames only; the partial tail is dropped
};

// Frame k covers samples [k*hop, k*hop + length).
FrameLayout frame_layout(std::size_t n, const FrameSpec& spec, double sample_rate);
std::vector<Signal> frame_signal(std::span<const double> x, const FrameSpec& spec,
                                 double sample_rate);

// ---------------------------------------------------------------------------
// FIR filtering
// ---------------------------------------------------------------------------

struct FirFilter {
    std::vector<double> taps; // odd length, symmetric (linear phase)
    double low_hz = 0.0;
    double high_hz = 0.0;
    double sample_rate = 0.0;

    std::size_t delay() const { return (taps.size() - 1) / 2; }
    // Amplitude response at one frequency, evaluated by direct summation.
    double response_at(double hz) const;
};

// Windowed-sinc (Hamming) bandpass, normalized to unit gain at the band's
// geometric center. num_taps must be odd.
FirFilter design_bandpass(double low_hz, double high_hz, double sample_rate,
                          std::size_t num_taps = 513);

// Zero-padded convolution with the group delay removed: output length equals
// input length and an impulse comes back as the taps centered on itself.
Signal apply_fir(const FirFilter& f, std::span<const double> x);

// ---------------------------------------------------------------------------
// Sixth-octave filter bank
// ---------------------------------------------------------------------------

class FilterBank {
public:
    FilterBank(std::vector<FirFilter> filters, std::vector<double> centers);

    const std::vector<FirFilter>& filters() const { return filters_; }
    const std::vector<double>& centers() const { return centers_; }
    std::size_t size() const { return filters_.size(); }

    // All band outputs at once, each the same length as the input. One
    // forward FFT of the input is shared across bands; per-band tap spectra
    // are cached per FFT size.
    std::vector<Signal> decompose(std::span<const double> x) const;

private:
    std::vector<FirFilter> filters_;
    std::vector<double> centers_;
    std::size_t max_taps_ = 0;

    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::size_t, std::vector<std::vector<Cpx>>> tap_fft_cache_;

    const std::vector<std::vector<Cpx>>& tap_ffts(std::size_t fft_len) const;
};

// Bank of `count` bandpass filters spaced a sixth of an octave apart and
// centered (geometrically) on `center_hz`. Centers are clamped into `band`;
// each filter spans a twelfth of an octave either side of its center. Tap
// counts scale with bandwidth so narrow low bands keep usable selectivity.
FilterBank sixth_octave_bank(double center_hz, std::size_t count,
                             std::pair<double, double> band, double sample_rate,
                             std::size_t max_taps = 4097);

// ---------------------------------------------------------------------------
// Boolean median filter
// ---------------------------------------------------------------------------

// Majority vote in a centered window of `block` flags. Near the edges the
// window shrinks symmetrically so it always holds an odd number of flags.
std::vector<bool> median_filter_bool(const std::vector<bool>& flags, std::size_t block);

} // namespace amps::dsp
