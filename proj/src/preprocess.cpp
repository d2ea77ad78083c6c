#include "amps/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "amps/common.hpp"

namespace amps::preprocess {

namespace {

constexpr double kPi = std::numbers::pi;

// Parseval-weighted energy of the one-sided power spectrum restricted to
// bins whose center frequency falls in [lo, hi].
double band_energy(const std::vector<double>& p, std::size_t n, double sample_rate,
                   double lo, double hi) {
    const double bin_hz = sample_rate / double(n);
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double f = double(k) * bin_hz;
        if (f < lo || f > hi) continue;
        const bool endpoint = (k == 0) || (n % 2 == 0 && k == n / 2);
        e += (endpoint ? 1.0 : 2.0) * p[k];
    }
    return e;
}

std::vector<double> hann_window(std::size_t len) {
    std::vector<double> w(len);
    for (std::size_t i = 0; i < len; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * double(i) / double(len)));
    return w;
}

// Tapered overlap-add with per-sample weight normalization: wherever frames
// agree the reconstruction is exact, junctions between non-adjacent frames
// crossfade.
Signal overlap_add(const std::vector<const double*>& frames, std::size_t len,
                   std::size_t hop) {
    if (frames.empty()) return {};
    const std::size_t out_len = (frames.size() - 1) * hop + len;
    Signal acc(out_len, 0.0), wsum(out_len, 0.0);
    const auto w = hann_window(len);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const std::size_t base = k * hop;
        for (std::size_t i = 0; i < len; ++i) {
            acc[base + i] += w[i] * frames[k][i];
            wsum[base + i] += w[i];
        }
    }
    for (std::size_t i = 0; i < out_len; ++i)
        acc[i] = wsum[i] > 1e-12 ? acc[i] / wsum[i] : 0.0;
    return acc;
}

} // namespace

Signal bandlimit_normalize(std::span<const double> x, const dsp::FirFilter& band,
                           double guard) {
    Signal y = dsp::apply_fir(band, x);
    double in_sq = 0.0;
    for (double v : x) in_sq += v * v;
    double peak = 0.0, out_sq = 0.0;
    for (double v : y) {
        peak = std::max(peak, std::abs(v));
        out_sq += v * v;
    }
    // Guard on the RMS ratio, not the output peak: the onset/offset
    // transients of a truncated signal can peak well above the steady-state
    // stopband residue, and the ratio is invariant under input scaling.
    if (peak > 0.0 && out_sq > guard * guard * in_sq) {
        const double inv = 1.0 / peak;
        for (auto& v : y) v *= inv;
    }
    return y;
}

GateResult energy_activity_gate(std::span<const double> x, const PreprocessConfig& cfg) {
    GateResult res;
    if (x.empty()) return res;
    const auto fl = dsp::frame_layout(x.size(), cfg.gate_frame, cfg.sample_rate);
    if (fl.count == 0) return res;
    if (fl.hop > fl.length)
        fail(ErrorCategory::config, "energy_activity_gate: hop must not exceed frame length");

    std::vector<bool> raw(fl.count);
    for (std::size_t k = 0; k < fl.count; ++k) {
        auto p = dsp::power_spectrum(x.subspan(k * fl.hop, fl.length));
        const double e_gate = band_energy(p, fl.length, cfg.sample_rate,
                                          cfg.gate_band_low_hz, cfg.gate_band_high_hz);
        const double e_band =
            band_energy(p, fl.length, cfg.sample_rate, cfg.band_low_hz, cfg.band_high_hz);
        const double e_rest = std::max(0.0, e_band - e_gate);
        raw[k] = e_gate > cfg.gate_ratio_threshold * e_rest && e_gate > 0.0;
    }
    res.flags = dsp::median_filter_bool(raw, cfg.gate_median_block);

    std::vector<const double*> kept;
    for (std::size_t k = 0; k < fl.count; ++k)
        if (res.flags[k]) kept.push_back(x.data() + k * fl.hop);
    res.kept = overlap_add(kept, fl.length, fl.hop);
    return res;
}

Signal noise_reduce(std::span<const double> x, const dsp::FilterBank& bank,
                    const PreprocessConfig& cfg) {
    if (x.empty()) return {};
    const auto fl = dsp::frame_layout(x.size(), cfg.nr_frame, cfg.sample_rate);
    if (fl.count == 0) return {};
    if (fl.hop > fl.length)
        fail(ErrorCategory::config, "noise_reduce: hop must not exceed frame length");
    if (cfg.nr_keep == 0 || cfg.nr_keep > bank.size())
        fail(ErrorCategory::config, "noise_reduce: nr_keep out of range");

    const auto bands = bank.decompose(x);
    const std::size_t nb = bands.size();

    Signal mixed((fl.count - 1) * fl.hop + fl.length, 0.0);
    std::vector<Signal> frame_store(fl.count, Signal(fl.length, 0.0));
    std::vector<const double*> frame_ptrs(fl.count);

    std::vector<double> e(nb);
    std::vector<std::size_t> order(nb);
    for (std::size_t k = 0; k < fl.count; ++k) {
        const std::size_t base = k * fl.hop;
        double e_total = 0.0;
        for (std::size_t i = 0; i < fl.length; ++i) e_total += x[base + i] * x[base + i];
        for (std::size_t b = 0; b < nb; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < fl.length; ++i)
                acc += bands[b][base + i] * bands[b][base + i];
            // normalized band energy; the shared denominator keeps ranking
            // scale-invariant
            e[b] = e_total > 0.0 ? acc / e_total : 0.0;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b2) { return e[a] > e[b2]; });

        Signal& fr = frame_store[k];
        for (std::size_t j = 0; j < cfg.nr_keep; ++j) {
            const auto& band_sig = bands[order[j]];
            for (std::size_t i = 0; i < fl.length; ++i) fr[i] += band_sig[base + i];
        }
        frame_ptrs[k] = fr.data();
    }
    return overlap_add(frame_ptrs, fl.length, fl.hop);
}

Preprocessor::Preprocessor(PreprocessConfig cfg)
    : cfg_(cfg),
      band_(dsp::design_bandpass(cfg.band_low_hz, cfg.band_high_hz, cfg.sample_rate,
                                 cfg.bandpass_taps)),
      bank_(dsp::sixth_octave_bank(cfg.bank_center_hz, cfg.bank_count,
                                   {cfg.bank_band_low_hz, cfg.bank_band_high_hz},
                                   cfg.sample_rate)) {}

Signal Preprocessor::bandlimit_normalize(std::span<const double> x) const {
    return preprocess::bandlimit_normalize(x, band_, cfg_.norm_guard);
}

GateResult Preprocessor::gate(std::span<const double> x) const {
    return energy_activity_gate(x, cfg_);
}

Signal Preprocessor::noise_reduce(std::span<const double> x) const {
    return preprocess::noise_reduce(x, bank_, cfg_);
}

Signal Preprocessor::for_pitch_spectral(std::span<const double> x) const {
    Signal limited = bandlimit_normalize(x);
    GateResult gated = gate(limited);
    if (gated.kept.empty()) return {};
    return noise_reduce(gated.kept);
}

Signal Preprocessor::for_am(std::span<const double> x) const {
    return bandlimit_normalize(x);
}

} // namespace amps::preprocess
