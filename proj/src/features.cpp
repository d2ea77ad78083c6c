#include "amps/features.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "amps/common.hpp"
#include "amps/io_util.hpp"

namespace amps::features {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kUnvoiced = std::numeric_limits<double>::quiet_NaN();

bool voiced(double v) { return !std::isnan(v); }

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                    static_cast<double>(n - 1));
    return w;
}

// mean and population variance of a sequence; empty -> (0, 0)
std::pair<double, double> mean_var(std::span<const double> v) {
    if (v.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(v.size());
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return {mean, acc / n};
}

// Estimate one frame's fundamental period via the cumulative-mean-normalized
// difference function. Returns 0 when the frame is unvoiced.
double yin_frame_hz(std::span<const double> frame, double sample_rate,
                    const FeatureConfig& cfg) {
    const std::size_t len = frame.size();
    const std::size_t w = len / 2; // integration window; lags reach the far half
    if (w < 2) return 0.0;

    const auto tau_lo = static_cast<std::size_t>(
        std::max(2.0, std::floor(sample_rate / cfg.pitch_max_hz)));
    const auto tau_search = static_cast<std::size_t>(
        std::ceil(sample_rate / cfg.pitch_min_hz));
    const std::size_t tau_hi = std::min(w - 1, tau_search);
    if (tau_lo >= tau_hi) return 0.0;
    const std::size_t tau_top = std::min(w, tau_hi + 1); // one extra for refinement

    std::vector<double> diff(tau_top + 1, 0.0);
    for (std::size_t tau = 1; tau <= tau_top; ++tau) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double d = frame[j] - frame[j + tau];
            acc += d * d;
        }
        diff[tau] = acc;
    }

    std::vector<double> cm(tau_top + 1, 1.0);
    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_top; ++tau) {
        running += diff[tau];
        cm[tau] = running > 0.0
                      ? diff[tau] * static_cast<double>(tau) / running
                      : 1.0;
    }

    // first dip under the threshold, followed downhill to its local minimum
    std::size_t pick = 0;
    for (std::size_t tau = tau_lo; tau <= tau_hi; ++tau) {
        if (cm[tau] < cfg.yin_threshold) {
            while (tau + 1 <= tau_hi && cm[tau + 1] < cm[tau]) ++tau;
            pick = tau;
            break;
        }
    }
    if (pick == 0) return 0.0;

    // Parabolic refinement on the raw difference function: its dip keeps the
    // sinusoidal shape that the cumulative normalization tilts.
    double tau_star = static_cast<double>(pick);
    if (pick >= 2 && pick + 1 <= tau_top) {
        const double a = diff[pick - 1], b = diff[pick], c = diff[pick + 1];
        const double denom = a - 2.0 * b + c;
        if (std::abs(denom) > 1e-30) {
            double delta = 0.5 * (a - c) / denom;
            delta = std::clamp(delta, -0.5, 0.5);
            tau_star += delta;
        }
    }

    const double hz = sample_rate / tau_star;
    return std::clamp(hz, cfg.pitch_min_hz, cfg.pitch_max_hz);
}

} // namespace

// ---------------------------------------------------------------------------
// Pitch
// ---------------------------------------------------------------------------

std::size_t PitchTrack::voiced_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), voiced));
}

PitchTrack yin_pitch_track(std::span<const double> x, double sample_rate,
                           const FeatureConfig& cfg) {
    PitchTrack track;
    track.values.assign(cfg.track_len, kUnvoiced);
    if (cfg.track_len == 0) return track;

    const auto frames = dsp::frame_signal(x, cfg.frame, sample_rate);
    const std::size_t f = frames.size();
    if (f == 0) return track;

    // Evenly spaced frame picks when the window yields more frames than track
    // slots; otherwise every frame, with the tail left unvoiced.
    std::vector<std::size_t> picks;
    if (f >= cfg.track_len && cfg.track_len > 1) {
        picks.resize(cfg.track_len);
        for (std::size_t i = 0; i < cfg.track_len; ++i)
            picks[i] = static_cast<std::size_t>(std::llround(
                static_cast<double>(i) * static_cast<double>(f - 1) /
                static_cast<double>(cfg.track_len - 1)));
    } else if (f >= cfg.track_len) { // track_len == 1
        picks.push_back(0);
    } else {
        picks.resize(f);
        std::iota(picks.begin(), picks.end(), std::size_t{0});
    }

    for (std::size_t slot = 0; slot < picks.size(); ++slot) {
        const double hz = yin_frame_hz(frames[picks[slot]], sample_rate, cfg);
        if (hz > 0.0) track.values[slot] = hz;
    }
    return track;
}

PitchMoments pitch_moments(const PitchTrack& track) {
    std::vector<double> v;
    v.reserve(track.values.size());
    for (double x : track.values)
        if (voiced(x)) v.push_back(x);

    PitchMoments m;
    if (v.empty()) return m;

    const double n = static_cast<double>(v.size());
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.variance = m2;
    if (m2 >= 1e-12) {
        m.skew = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Spectral statistics
// ---------------------------------------------------------------------------

SpectralStats spectral_features(std::span<const double> x, double sample_rate,
                                const FeatureConfig& cfg) {
    SpectralStats out;
    const auto frames = dsp::frame_signal(x, cfg.frame, sample_rate);
    if (frames.empty()) return out;

    const std::size_t len = frames.front().size();
    const auto win = hann_window(len);
    const double bin_hz = sample_rate / static_cast<double>(len);

    std::vector<double> centroids, rolloffs;
    centroids.reserve(frames.size());
    rolloffs.reserve(frames.size());
    std::vector<double> buf(len);
    for (const auto& frame : frames) {
        for (std::size_t i = 0; i < len; ++i) buf[i] = frame[i] * win[i];
        const auto p = dsp::power_spectrum(buf);

        double total = 0.0, weighted = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            total += p[k];
            weighted += static_cast<double>(k) * bin_hz * p[k];
        }
        if (total <= 0.0) {
            centroids.push_back(0.0);
            rolloffs.push_back(0.0);
            continue;
        }
        centroids.push_back(weighted / total);

        const double target = cfg.rolloff_fraction * total;
        double cum = 0.0;
        double roll = static_cast<double>(p.size() - 1) * bin_hz;
        for (std::size_t k = 0; k < p.size(); ++k) {
            cum += p[k];
            if (cum >= target) {
                roll = static_cast<double>(k) * bin_hz;
                break;
            }
        }
        rolloffs.push_back(roll);
    }

    std::tie(out.centroid_mean, out.centroid_variance) = mean_var(centroids);
    std::tie(out.rolloff_mean, out.rolloff_variance) = mean_var(rolloffs);
    return out;
}

// ---------------------------------------------------------------------------
// Amplitude modulation
// ---------------------------------------------------------------------------

Signal am_envelope(std::span<const double> x, const dsp::FirFilter& band,
                   std::size_t blocks, std::size_t block_len) {
    if (blocks == 0 || block_len == 0)
        fail(ErrorCategory::config, "am_envelope: blocks and block_len must be positive");
    if (x.size() < blocks * block_len)
        fail(ErrorCategory::data,
             "am_envelope: input has " + std::to_string(x.size()) +
                 " samples but " + std::to_string(blocks * block_len) +
                 " are required");

    const Signal y = dsp::apply_fir(band, x);
    Signal env(blocks, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        double acc = 0.0;
        const std::size_t base = b * block_len;
        for (std::size_t i = 0; i < block_len; ++i) acc += y[base + i] * y[base + i];
        env[b] = std::sqrt(acc / static_cast<double>(block_len));
    }
    return env;
}

double percentile_linear(std::span<const double> values, double p) {
    if (values.empty())
        fail(ErrorCategory::data, "percentile of an empty sequence");
    if (p < 0.0 || p > 100.0)
        fail(ErrorCategory::config, "percentile rank must lie in [0, 100]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

namespace {

double bin_prominence(std::span<const double> p, std::size_t half, std::size_t k) {
    const std::size_t lo = k >= 3 ? k - 3 : 0;
    const std::size_t hi = std::min(half, k + 3);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += p[j];
    const double denom = acc / static_cast<double>(hi - lo + 1);
    return denom > 0.0 ? p[k] / denom : 0.0;
}

} // namespace

AmBandResult am_band_analysis(std::span<const double> envelope,
                              const FeatureConfig& cfg, int band_index,
                              double bin_hz) {
    AmBandResult res;
    res.band_index = band_index;
    if (envelope.size() != cfg.am_blocks)
        fail(ErrorCategory::data,
             "am_band_analysis: envelope has " + std::to_string(envelope.size()) +
                 " samples, expected " + std::to_string(cfg.am_blocks));
    if (bin_hz <= 0.0)
        fail(ErrorCategory::config, "am_band_analysis: bin width must be positive");

    const std::size_t n = envelope.size();
    const std::size_t half = n / 2;

    double mean = std::accumulate(envelope.begin(), envelope.end(), 0.0) /
                  static_cast<double>(n);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = envelope[i] - mean;

    const auto spec = dsp::dft_real(e);
    std::vector<double> p(half + 1, 0.0);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    for (std::size_t k = 0; k <= half; ++k) p[k] = std::norm(spec[k]) * scale;

    const auto lo_bin = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.am_min_hz / bin_hz - 1e-9)));
    const auto hi_bin = std::min(
        half, static_cast<std::size_t>(std::floor(cfg.am_max_hz / bin_hz + 1e-9)));
    if (lo_bin > hi_bin) return res;

    std::size_t kp = lo_bin;
    for (std::size_t k = lo_bin + 1; k <= hi_bin; ++k)
        if (p[k] > p[kp]) kp = k;

    const double q = bin_prominence(p, half, kp);
    if (q < cfg.prominence_cutoff) return res;

    std::set<std::size_t> kept_bins{kp};
    std::vector<int> harmonics{1};
    if (q >= cfg.strong_factor * cfg.prominence_cutoff) {
        for (int h : {2, 3}) {
            const std::size_t base = static_cast<std::size_t>(h) * kp;
            if (base > half + 1) break;
            std::size_t best = 0;
            for (std::size_t j = base >= 1 ? base - 1 : 1; j <= base + 1 && j <= half; ++j)
                if (j >= 1 && (best == 0 || p[j] > p[best])) best = j;
            if (best == 0 || kept_bins.count(best)) continue;
            if (bin_prominence(p, half, best) >= cfg.prominence_cutoff) {
                kept_bins.insert(best);
                harmonics.push_back(h);
            }
        }
    }

    // back to the time domain with only the kept bins (and mirrors) populated
    std::vector<dsp::Cpx> z(n, dsp::Cpx{0.0, 0.0});
    for (std::size_t b : kept_bins) {
        z[b] = spec[b];
        z[(n - b) % n] = spec[(n - b) % n];
    }
    const auto recon = dsp::dft(z, true);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = recon[i].real();

    const double depth = percentile_linear(y, 95.0) - percentile_linear(y, 5.0);
    if (depth < cfg.depth_threshold) return res;

    res.detected = true;
    res.frequency = static_cast<double>(kp) * bin_hz;
    res.prominence = q;
    res.depth = depth;
    res.kept_harmonics = std::move(harmonics);
    return res;
}

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

std::array<double, 11> AmpsFeatureVector::values() const {
    return {pitch_mean,    pitch_variance,    pitch_skew,   pitch_kurtosis,
            centroid_mean, centroid_variance, rolloff_mean, rolloff_variance,
            am_frequency,  am_prominence,     am_depth};
}

AmpsFeatureVector assemble_amps(const PitchMoments& pitch, const SpectralStats& spectral,
                                std::span<const AmBandResult> bands) {
    AmpsFeatureVector v;
    v.pitch_mean = pitch.mean;
    v.pitch_variance = pitch.variance;
    v.pitch_skew = pitch.skew;
    v.pitch_kurtosis = pitch.kurtosis;
    v.centroid_mean = spectral.centroid_mean;
    v.centroid_variance = spectral.centroid_variance;
    v.rolloff_mean = spectral.rolloff_mean;
    v.rolloff_variance = spectral.rolloff_variance;

    const AmBandResult* best = nullptr;
    for (const auto& b : bands)
        if (b.detected && (!best || b.prominence > best->prominence)) best = &b;
    if (best) {
        v.am_frequency = best->frequency;
        v.am_prominence = best->prominence;
        v.am_depth = best->depth;
    }
    return v;
}

std::vector<double> MfccFeatureVector::values() const {
    std::vector<double> out;
    out.reserve(coeff_mean.size() + coeff_variance.size());
    out.insert(out.end(), coeff_mean.begin(), coeff_mean.end());
    out.insert(out.end(), coeff_variance.begin(), coeff_variance.end());
    return out;
}

MfccFeatureVector mfcc_features(std::span<const double> x, double sample_rate,
                                const FeatureConfig& cfg) {
    if (cfg.mfcc_coeffs == 0 || cfg.mel_filters == 0)
        fail(ErrorCategory::config, "mfcc: coefficient and filter counts must be positive");
    if (cfg.mfcc_coeffs > cfg.mel_filters)
        fail(ErrorCategory::config, "mfcc: cannot keep more coefficients than mel filters");

    MfccFeatureVector out;
    out.coeff_mean.assign(cfg.mfcc_coeffs, 0.0);
    out.coeff_variance.assign(cfg.mfcc_coeffs, 0.0);

    const auto frames = dsp::frame_signal(x, cfg.frame, sample_rate);
    if (frames.empty()) return out;

    const std::size_t len = frames.front().size();
    const auto win = hann_window(len);
    const double bin_hz = sample_rate / static_cast<double>(len);
    const std::size_t half = len / 2;

    // triangular mel filters: edge points equally spaced on the mel scale
    const std::size_t m = cfg.mel_filters;
    auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto mel_to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
    const double mel_top = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(m + 2);
    for (std::size_t i = 0; i < m + 2; ++i)
        edges[i] = mel_to_hz(mel_top * static_cast<double>(i) /
                             static_cast<double>(m + 1));

    std::vector<std::vector<double>> coeffs(frames.size());
    std::vector<double> buf(len), mag(half + 1), energy(m), logs(m);
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
        for (std::size_t i = 0; i < len; ++i) buf[i] = frames[fi][i] * win[i];
        const auto spec = dsp::dft_real(buf);
        for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);

        for (std::size_t b = 0; b < m; ++b) {
            const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
            double acc = 0.0;
            for (std::size_t k = 0; k <= half; ++k) {
                const double f = static_cast<double>(k) * bin_hz;
                if (f <= lo || f >= hi) continue;
                const double w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
                acc += w * mag[k];
            }
            energy[b] = acc;
            logs[b] = std::log(std::max(acc, cfg.mel_log_floor));
        }

        auto& c = coeffs[fi];
        c.assign(cfg.mfcc_coeffs, 0.0);
        for (std::size_t j = 0; j < cfg.mfcc_coeffs; ++j) {
            double acc = 0.0;
            for (std::size_t b = 0; b < m; ++b)
                acc += logs[b] * std::cos(kPi * static_cast<double>(j) *
                                          (2.0 * static_cast<double>(b) + 1.0) /
                                          (2.0 * static_cast<double>(m)));
            c[j] = acc;
        }
    }

    std::vector<double> column(frames.size());
    for (std::size_t j = 0; j < cfg.mfcc_coeffs; ++j) {
        for (std::size_t fi = 0; fi < frames.size(); ++fi) column[fi] = coeffs[fi][j];
        std::tie(out.coeff_mean[j], out.coeff_variance[j]) = mean_var(column);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Window-level extraction
// ---------------------------------------------------------------------------

FeatureExtractor::FeatureExtractor(preprocess::PreprocessConfig pcfg, FeatureConfig fcfg)
    : pcfg_(pcfg), fcfg_(std::move(fcfg)), pre_(pcfg) {
    am_bands_.reserve(fcfg_.am_bands.size());
    for (const auto& [lo, hi] : fcfg_.am_bands)
        am_bands_.push_back(dsp::design_bandpass(lo, hi, pcfg_.sample_rate,
                                                 fcfg_.am_band_taps));
}

AmpsFeatureVector FeatureExtractor::extract_amps(std::span<const double> window_samples) const {
    const Signal tonal = pre_.for_pitch_spectral(window_samples);
    const auto track = yin_pitch_track(tonal, pcfg_.sample_rate, fcfg_);
    const auto pitch = pitch_moments(track);
    const auto spectral = spectral_features(tonal, pcfg_.sample_rate, fcfg_);

    const Signal am = pre_.for_am(window_samples);
    const double bin_hz = pcfg_.sample_rate /
                          (static_cast<double>(fcfg_.am_blocks) *
                           static_cast<double>(fcfg_.am_block_len));
    std::vector<AmBandResult> bands;
    bands.reserve(am_bands_.size());
    for (std::size_t i = 0; i < am_bands_.size(); ++i) {
        const auto env = am_envelope(am, am_bands_[i], fcfg_.am_blocks, fcfg_.am_block_len);
        bands.push_back(am_band_analysis(env, fcfg_, static_cast<int>(i), bin_hz));
    }
    return assemble_amps(pitch, spectral, bands);
}

MfccFeatureVector FeatureExtractor::extract_mfcc(std::span<const double> window_samples) const {
    return mfcc_features(pre_.for_am(window_samples), pcfg_.sample_rate, fcfg_);
}

std::vector<std::string> amps_feature_names() {
    return {"pitch_mean",    "pitch_variance",    "pitch_skew",   "pitch_kurtosis",
            "centroid_mean", "centroid_variance", "rolloff_mean", "rolloff_variance",
            "am_frequency",  "am_prominence",     "am_depth"};
}

std::vector<std::string> mfcc_feature_names(std::size_t n_coeffs) {
    std::vector<std::string> names;
    names.reserve(2 * n_coeffs);
    for (std::size_t i = 0; i < n_coeffs; ++i)
        names.push_back("mfcc_mean_" + std::to_string(i));
    for (std::size_t i = 0; i < n_coeffs; ++i)
        names.push_back("mfcc_var_" + std::to_string(i));
    return names;
}

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

namespace {

void check_csv_field(const std::string& s, const char* what) {
    if (s.find_first_of(",\"\r\n") != std::string::npos)
        fail(ErrorCategory::data,
             std::string(what) + " may not contain commas, quotes, or newlines: " + s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

long parse_long_strict(const std::string& s, const char* what) {
    if (s.empty()) fail(ErrorCategory::data, std::string(what) + " is empty");
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size())
        fail(ErrorCategory::data, std::string("bad ") + what + ": " + s);
    return v;
}

double parse_double_strict(const std::string& s, const char* what) {
    if (s.empty()) fail(ErrorCategory::data, std::string(what) + " is empty");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        fail(ErrorCategory::data, std::string("bad ") + what + ": " + s);
    return v;
}

} // namespace

std::string format_features_csv(const FeatureTable& table) {
    if (table.names.empty())
        fail(ErrorCategory::data, "feature table has no feature columns");
    std::string out = "recording_id,window_index,label";
    for (const auto& name : table.names) {
        check_csv_field(name, "feature name");
        out += ',';
        out += name;
    }
    out += '\n';
    for (const auto& row : table.rows) {
        check_csv_field(row.recording_id, "recording id");
        if (row.values.size() != table.names.size())
            fail(ErrorCategory::data,
                 "row for " + row.recording_id + " has " +
                     std::to_string(row.values.size()) + " values, expected " +
                     std::to_string(table.names.size()));
        out += row.recording_id;
        out += ',';
        out += std::to_string(row.window_index);
        out += ',';
        out += std::to_string(row.label);
        for (double v : row.values) {
            if (!std::isfinite(v))
                fail(ErrorCategory::data,
                     "row for " + row.recording_id + " holds a non-finite feature value");
            out += ',';
            out += io::fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

FeatureTable parse_features_csv(const std::string& text) {
    FeatureTable table;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (!saw_header) {
            if (cells.size() < 4 || cells[0] != "recording_id" ||
                cells[1] != "window_index" || cells[2] != "label")
                fail(ErrorCategory::data,
                     "feature csv must start with a recording_id,window_index,label header");
            table.names.assign(cells.begin() + 3, cells.end());
            saw_header = true;
            continue;
        }
        if (cells.size() != table.names.size() + 3)
            fail(ErrorCategory::data,
                 "line " + std::to_string(line_no) + " has " +
                     std::to_string(cells.size()) + " columns, expected " +
                     std::to_string(table.names.size() + 3));
        FeatureRow row;
        row.recording_id = cells[0];
        if (row.recording_id.empty())
            fail(ErrorCategory::data, "line " + std::to_string(line_no) + ": empty recording id");
        row.window_index = static_cast<int>(parse_long_strict(cells[1], "window index"));
        if (row.window_index < 0)
            fail(ErrorCategory::data, "line " + std::to_string(line_no) + ": negative window index");
        row.label = static_cast<int>(parse_long_strict(cells[2], "label"));
        row.values.reserve(table.names.size());
        for (std::size_t i = 3; i < cells.size(); ++i)
            row.values.push_back(parse_double_strict(cells[i], "feature value"));
        table.rows.push_back(std::move(row));
    }
    if (!saw_header)
        fail(ErrorCategory::data, "feature csv is empty");
    return table;
}

void save_features_csv(const std::string& path, const FeatureTable& table) {
    io::atomic_write_text(path, format_features_csv(table));
}

FeatureTable load_features_csv(const std::string& path) {
    return parse_features_csv(io::read_text_file(path));
}

} // namespace amps::features
