#include "amps/dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "amps/common.hpp"

namespace amps::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle tables per FFT size, computed directly from sin/cos so rounding
// does not accumulate along the butterfly passes. Thread-local: no locking
// on the hot path.
const std::vector<Cpx>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<Cpx>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<Cpx> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
        w[j] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(w)).first->second;
}

void fft_radix2(std::vector<Cpx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const auto& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                Cpx tw = w[j * stride];
                if (inverse) tw = std::conj(tw);
                Cpx u = a[i + j];
                Cpx v = a[i + j + len / 2] * tw;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv;
    }
}

struct BluesteinPlan {
    std::size_t m = 0;          // padded power-of-two length
    std::vector<Cpx> chirp;     // exp(-i*pi*k^2/n)
    std::vector<Cpx> bfft;      // FFT of the conjugate-chirp kernel
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan p;
    p.m = std::bit_ceil(2 * n - 1);
    p.chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        std::size_t q = (k * k) % (2 * n);
        double ang = -kPi * static_cast<double>(q) / static_cast<double>(n);
        p.chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<Cpx> b(p.m, Cpx{0.0, 0.0});
    b[0] = std::conj(p.chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b[k] = std::conj(p.chirp[k]);
        b[p.m - k] = std::conj(p.chirp[k]);
    }
    fft_radix2(b, false);
    p.bfft = std::move(b);
    return cache.emplace(n, std::move(p)).first->second;
}

std::vector<Cpx> dft_bluestein(std::span<const Cpx> x) {
    const std::size_t n = x.size();
    const BluesteinPlan& p = bluestein_plan(n);

    std::vector<Cpx> a(p.m, Cpx{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * p.chirp[k];
    fft_radix2(a, false);
    for (std::size_t k = 0; k < p.m; ++k) a[k] *= p.bfft[k];
    fft_radix2(a, true);

    std::vector<Cpx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * p.chirp[k];
    return out;
}

} // namespace

std::vector<Cpx> dft(std::span<const Cpx> x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    if (!inverse) {
        if (is_pow2(n)) {
            std::vector<Cpx> a(x.begin(), x.end());
            fft_radix2(a, false);
            return a;
        }
        return dft_bluestein(x);
    }
    // IDFT(X) = conj(DFT(conj(X))) / N
    std::vector<Cpx> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = std::conj(x[k]);
    std::vector<Cpx> y = dft(c, false);
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : y) v = std::conj(v) * inv;
    return y;
}

std::vector<Cpx> dft_real(std::span<const double> x) {
    std::vector<Cpx> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = {x[i], 0.0};
    return dft(c, false);
}

std::vector<double> power_spectrum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) fail(ErrorCategory::data, "power_spectrum: need at least 2 samples");
    std::vector<Cpx> X = dft_real(x);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    std::vector<double> p(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) p[k] = std::norm(X[k]) * scale;
    return p;
}

FrameLayout frame_layout(std::size_t n, const FrameSpec& spec, double sample_rate) {
    if (!(spec.length_s > 0.0) || !(spec.hop_s > 0.0))
        fail(ErrorCategory::config, "frame spec: length and hop must be positive");
    if (!(sample_rate > 0.0))
        fail(ErrorCategory::config, "frame spec: sample rate must be positive");
    FrameLayout fl;
    fl.length = static_cast<std::size_t>(std::llround(spec.length_s * sample_rate));
    fl.hop = static_cast<std::size_t>(std::llround(spec.hop_s * sample_rate));
    if (fl.length == 0 || fl.hop == 0)
        fail(ErrorCategory::config, "frame spec: frame shorter than one sample");
    fl.count = (n >= fl.length) ? (n - fl.length) / fl.hop + 1 : 0;
    return fl;
}

std::vector<Signal> frame_signal(std::span<const double> x, const FrameSpec& spec,
                                 double sample_rate) {
    FrameLayout fl = frame_layout(x.size(), spec, sample_rate);
    std::vector<Signal> frames(fl.count);
    for (std::size_t k = 0; k < fl.count; ++k) {
        const double* s = x.data() + k * fl.hop;
        frames[k].assign(s, s + fl.length);
    }
    return frames;
}

double FirFilter::response_at(double hz) const {
    const double w = 2.0 * kPi * hz / sample_rate;
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < taps.size(); ++n) {
        re += taps[n] * std::cos(w * static_cast<double>(n));
        im -= taps[n] * std::sin(w * static_cast<double>(n));
    }
    return std::hypot(re, im);
}

FirFilter design_bandpass(double low_hz, double high_hz, double sample_rate,
                          std::size_t num_taps) {
    if (!(sample_rate > 0.0))
        fail(ErrorCategory::config, "design_bandpass: sample rate must be positive");
    if (!(0.0 < low_hz && low_hz < high_hz && high_hz < sample_rate / 2.0))
        fail(ErrorCategory::config, "design_bandpass: need 0 < low < high < Nyquist");
    if (num_taps < 3 || num_taps % 2 == 0)
        fail(ErrorCategory::config, "design_bandpass: tap count must be odd and >= 3");

    FirFilter f;
    f.low_hz = low_hz;
    f.high_hz = high_hz;
    f.sample_rate = sample_rate;
    f.taps.resize(num_taps);

    const double w1 = 2.0 * kPi * low_hz / sample_rate;
    const double w2 = 2.0 * kPi * high_hz / sample_rate;
    const auto mid = static_cast<std::ptrdiff_t>((num_taps - 1) / 2);
    for (std::size_t n = 0; n < num_taps; ++n) {
        const auto k = static_cast<std::ptrdiff_t>(n) - mid;
        double ideal;
        if (k == 0) {
            ideal = (w2 - w1) / kPi;
        } else {
            const double kd = static_cast<double>(k);
            ideal = (std::sin(w2 * kd) - std::sin(w1 * kd)) / (kPi * kd);
        }
        const double ham =
            0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                   static_cast<double>(num_taps - 1));
        f.taps[n] = ideal * ham;
    }

    // Pin unit gain at the geometric band center; narrow designs otherwise
    // sit below unity once the transition bands overlap the passband.
    const double center = std::sqrt(low_hz * high_hz);
    const double g = f.response_at(center);
    if (g <= 0.0) fail(ErrorCategory::internal, "design_bandpass: degenerate response");
    for (auto& t : f.taps) t /= g;
    return f;
}

namespace {

Signal convolve_direct_centered(const FirFilter& f, std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t t = f.taps.size();
    const std::size_t d = f.delay();
    Signal y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // y[i] = sum_k taps[k] * x[i + d - k], zero outside the input
        const std::size_t idx = i + d;
        const std::size_t kmin = (idx >= n) ? idx - n + 1 : 0;
        const std::size_t kmax = std::min(t - 1, idx);
        double acc = 0.0;
        for (std::size_t k = kmin; k <= kmax; ++k) acc += f.taps[k] * x[idx - k];
        y[i] = acc;
    }
    return y;
}

Signal convolve_fft_centered(const FirFilter& f, std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t t = f.taps.size();
    const std::size_t m = std::bit_ceil(n + t - 1);
    std::vector<Cpx> a(m, Cpx{0.0, 0.0});
    std::vector<Cpx> b(m, Cpx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) a[i] = {x[i], 0.0};
    for (std::size_t i = 0; i < t; ++i) b[i] = {f.taps[i], 0.0};
    fft_radix2(a, false);
    fft_radix2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_radix2(a, true);
    const std::size_t d = f.delay();
    Signal y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i + d].real();
    return y;
}

} // namespace

Signal apply_fir(const FirFilter& f, std::span<const double> x) {
    if (f.taps.empty()) fail(ErrorCategory::config, "apply_fir: empty filter");
    if (x.empty()) return {};
    // Direct form for small jobs, FFT convolution beyond; identical results
    // up to rounding.
    const std::size_t ops = x.size() * f.taps.size();
    if (ops <= (1u << 21)) return convolve_direct_centered(f, x);
    return convolve_fft_centered(f, x);
}

FilterBank::FilterBank(std::vector<FirFilter> filters, std::vector<double> centers)
    : filters_(std::move(filters)), centers_(std::move(centers)) {
    if (filters_.size() != centers_.size() || filters_.empty())
        fail(ErrorCategory::config, "FilterBank: filters/centers mismatch");
    for (const auto& f : filters_) max_taps_ = std::max(max_taps_, f.taps.size());
}

const std::vector<std::vector<Cpx>>& FilterBank::tap_ffts(std::size_t fft_len) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = tap_fft_cache_.find(fft_len);
    if (it != tap_fft_cache_.end()) return it->second;
    std::vector<std::vector<Cpx>> specs;
    specs.reserve(filters_.size());
    for (const auto& f : filters_) {
        std::vector<Cpx> b(fft_len, Cpx{0.0, 0.0});
        for (std::size_t i = 0; i < f.taps.size(); ++i) b[i] = {f.taps[i], 0.0};
        fft_radix2(b, false);
        specs.push_back(std::move(b));
    }
    return tap_fft_cache_.emplace(fft_len, std::move(specs)).first->second;
}

std::vector<Signal> FilterBank::decompose(std::span<const double> x) const {
    const std::size_t n = x.size();
    std::vector<Signal> out(filters_.size());
    if (n == 0) return out;

    const std::size_t m = std::bit_ceil(n + max_taps_ - 1);
    std::vector<Cpx> X(m, Cpx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) X[i] = {x[i], 0.0};
    fft_radix2(X, false);

    const auto& specs = tap_ffts(m);
    std::vector<Cpx> y(m);
    for (std::size_t b = 0; b < filters_.size(); ++b) {
        for (std::size_t i = 0; i < m; ++i) y[i] = X[i] * specs[b][i];
        fft_radix2(y, true);
        const std::size_t d = filters_[b].delay();
        out[b].resize(n);
        for (std::size_t i = 0; i < n; ++i) out[b][i] = y[i + d].real();
    }
    return out;
}

FilterBank sixth_octave_bank(double center_hz, std::size_t count,
                             std::pair<double, double> band, double sample_rate,
                             std::size_t max_taps) {
    if (count < 1) fail(ErrorCategory::config, "sixth_octave_bank: count must be >= 1");
    if (!(band.first > 0.0 && band.first < band.second && band.second <= sample_rate / 2.0))
        fail(ErrorCategory::config, "sixth_octave_bank: invalid band");
    if (!(center_hz >= band.first && center_hz <= band.second))
        fail(ErrorCategory::config, "sixth_octave_bank: center outside band");

    const double half_step = std::exp2(1.0 / 12.0);
    std::vector<double> centers(count);
    std::vector<FirFilter> filters;
    filters.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double expo =
            (static_cast<double>(k) - static_cast<double>(count - 1) / 2.0) / 6.0;
        double c = center_hz * std::exp2(expo);
        c = std::clamp(c, band.first, band.second);
        centers[k] = c;

        double lo = c / half_step;
        double hi = c * half_step;
        lo = std::max(lo, 1.0);
        hi = std::min(hi, sample_rate / 2.0 * 0.999);

        // Aim the transition width at roughly half the passband so adjacent
        // bands cross over near -6 dB instead of smearing into each other.
        const double bw = hi - lo;
        auto taps = static_cast<std::size_t>(std::ceil(6.6 * sample_rate / bw));
        taps = std::clamp<std::size_t>(taps | 1u, 513, max_taps | 1u);
        filters.push_back(design_bandpass(lo, hi, sample_rate, taps));
    }
    return FilterBank(std::move(filters), std::move(centers));
}

std::vector<bool> median_filter_bool(const std::vector<bool>& flags, std::size_t block) {
    if (block % 2 == 0 || block == 0)
        fail(ErrorCategory::config, "median_filter_bool: block must be odd");
    const std::size_t n = flags.size();
    std::vector<bool> out(n);
    const std::size_t half = block / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = std::min({half, i, n - 1 - i});
        std::size_t ones = 0;
        for (std::size_t j = i - r; j <= i + r; ++j) ones += flags[j] ? 1 : 0;
        out[i] = ones > r; // window holds 2r+1 flags
    }
    return out;
}

} // namespace amps::dsp
