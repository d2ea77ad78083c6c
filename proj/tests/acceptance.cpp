// Acceptance suite: one line per criterion, PASS/FAIL/SKIP, exit 0 only when
// nothing failed. Criteria 1-5 exercise a real recording corpus and run only
// when AMPS_DATASET_DIR points at one (layout: audio/*.wav, labels/*.csv,
// manifest.csv); everything else is self-contained and always runs.

#include "amps/audio.hpp"
#include "amps/classifiers.hpp"
#include "amps/common.hpp"
#include "amps/dataset.hpp"
#include "amps/eval.hpp"
#include "amps/features.hpp"
#include "amps/io_util.hpp"
#include "amps/model_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace amps;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void report(int n, const char* status, const std::string& text) {
    std::printf("%s criterion %2d: %s\n", status, n, text.c_str());
    std::fflush(stdout);
}

void check(int n, bool ok, const std::string& text) {
    if (!ok) ++g_failures;
    report(n, ok ? "PASS" : "FAIL", text);
}

void run_criterion(int n, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        check(n, false, std::string("unexpected error: ") + e.what());
    }
}

std::vector<double> tone(double hz, double amp = 0.6, std::size_t len = 44100,
                         double rate = 44100.0) {
    std::vector<double> x(len);
    for (std::size_t i = 0; i < len; ++i)
        x[i] = amp * std::sin(2.0 * M_PI * hz * double(i) / rate);
    return x;
}

// ---------------------------------------------------------------------------
// Synthetic classification data
// ---------------------------------------------------------------------------

struct Dataset2 {
    classifiers::Matrix x;
    classifiers::Labels y;
};

Dataset2 two_clusters(std::size_t n, std::size_t dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Dataset2 d;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        std::vector<double> row(dims);
        for (std::size_t j = 0; j < dims; ++j)
            row[j] = (label == 1 ? 1.5 : -1.5) + g(rng);
        d.x.push_back(std::move(row));
        d.y.push_back(label);
    }
    return d;
}

// 11 features; only the first is informative, the rest are noise.
Dataset2 separable11(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset2 d;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        std::vector<double> row(11);
        row[0] = (label == 1 ? 1.0 : -1.0) * (1.0 + u(rng));
        for (std::size_t j = 1; j < 11; ++j) row[j] = g(rng);
        d.x.push_back(std::move(row));
        d.y.push_back(label);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Corpus pipeline for the dataset-dependent criteria
// ---------------------------------------------------------------------------

struct CorpusArtifacts {
    bool ready = false;
    std::string error;
    std::size_t windows = 0;
    double positive_fraction = 0.0;
    eval::MetricsReport logistic, svm, forest, stacking, mfcc_forest;
};

features::FeatureTable
flatten(std::vector<std::vector<features::FeatureRow>>& parts,
        std::vector<std::string> names) {
    features::FeatureTable t;
    t.names = std::move(names);
    for (auto& part : parts)
        for (auto& row : part) t.rows.push_back(std::move(row));
    return t;
}

classifiers::Labels predict_all(const model_io::AnyModel& m,
                                const classifiers::Matrix& x) {
    classifiers::Labels out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = model_io::predict_any(m, x[i]).label;
    return out;
}

CorpusArtifacts run_corpus_pipeline(const fs::path& root) {
    CorpusArtifacts a;
    const fs::path audio_dir = root / "audio";
    const fs::path labels_dir = root / "labels";
    const fs::path manifest = root / "manifest.csv";

    const dataset::BuildOptions opts; // 1 s windows, 0.5 s hop, 9 per recording
    const dataset::LabeledDataset ds =
        dataset::build_dataset(audio_dir, labels_dir, manifest, opts);
    a.windows = ds.windows.size();
    a.positive_fraction = ds.positive_fraction;

    // Per-recording extraction of both feature sets, on a bounded pool.
    const std::vector<dataset::ManifestEntry> entries = dataset::parse_manifest(manifest);
    const features::FeatureExtractor extractor({}, {});
    std::vector<std::vector<features::FeatureRow>> amps_parts(entries.size());
    std::vector<std::vector<features::FeatureRow>> mfcc_parts(entries.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::exception_ptr err;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) break;
            try {
                const dataset::ManifestEntry& entry = entries[i];
                const audio::Recording rec = audio::load_recording(
                    audio_dir / (entry.id + ".wav"), opts.expected_rate);
                std::vector<dataset::AnalysisWindow> wins =
                    dataset::window_recording(rec, opts.window, true);
                std::vector<dataset::AnnotationEvent> events;
                const fs::path ann = labels_dir / (entry.id + ".csv");
                if (fs::exists(ann)) events = dataset::parse_annotations(ann);
                else if (!entry.no_bird)
                    fail(ErrorCategory::data, "no annotations for " + entry.id);
                dataset::label_windows(wins, events, opts.tags, opts.window.window_s,
                                       opts.min_overlap_s);
                for (const dataset::AnalysisWindow& w : wins) {
                    features::FeatureRow row;
                    row.recording_id = w.recording_id;
                    row.window_index = w.index;
                    row.label = int(w.label);
                    const auto v = extractor.extract_amps(w.samples).values();
                    row.values.assign(v.begin(), v.end());
                    amps_parts[i].push_back(row);
                    row.values = extractor.extract_mfcc(w.samples).values();
                    mfcc_parts[i].push_back(std::move(row));
                }
            } catch (...) {
                const std::scoped_lock lock(mu);
                if (!err) err = std::current_exception();
                stop.store(true);
            }
        }
    };
    std::size_t jobs = std::thread::hardware_concurrency();
    jobs = std::max<std::size_t>(1, std::min(jobs, entries.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);

    const features::FeatureTable amps_table =
        flatten(amps_parts, features::amps_feature_names());
    const features::FeatureTable mfcc_table =
        flatten(mfcc_parts, features::mfcc_feature_names());

    // One recording-grouped split shared by every comparison.
    const eval::SplitSpec spec;
    const auto [amps_train, amps_test] = eval::split_features(amps_table, spec);
    const auto [mfcc_train, mfcc_test] = eval::split_features(mfcc_table, spec);
    const classifiers::Matrix train_x = eval::feature_matrix(amps_train);
    const classifiers::Labels train_y = eval::feature_labels(amps_train);
    const classifiers::Matrix test_x = eval::feature_matrix(amps_test);
    const classifiers::Labels test_y = eval::feature_labels(amps_test);

    auto score = [&](const model_io::AnyModel& m) {
        return eval::compute_metrics(predict_all(m, test_x), test_y);
    };
    a.logistic = score(classifiers::train_logistic(train_x, train_y, {}));
    a.svm = score(classifiers::train_svm_rbf(train_x, train_y, {}));
    a.forest = score(classifiers::train_forest(train_x, train_y, {}));
    a.stacking = score(classifiers::train_stacking(train_x, train_y, {}));

    const classifiers::Matrix mtrain_x = eval::feature_matrix(mfcc_train);
    const classifiers::Labels mtrain_y = eval::feature_labels(mfcc_train);
    const classifiers::Matrix mtest_x = eval::feature_matrix(mfcc_test);
    const classifiers::Labels mtest_y = eval::feature_labels(mfcc_test);
    a.mfcc_forest = eval::compute_metrics(
        predict_all(classifiers::train_forest(mtrain_x, mtrain_y, {}), mtest_x),
        mtest_y);

    a.ready = true;
    return a;
}

const char* kCorpusHint =
    "set AMPS_DATASET_DIR to a corpus root holding audio/*.wav, labels/*.csv, "
    "and manifest.csv";

// ---------------------------------------------------------------------------
// Criteria 1-5 (corpus)
// ---------------------------------------------------------------------------

void corpus_criteria(const char* env) {
    CorpusArtifacts a;
    if (env) {
        try {
            a = run_corpus_pipeline(env);
        } catch (const std::exception& e) {
            a.error = e.what();
        }
    }
    auto gated = [&](int n, const std::string& what,
                     const std::function<std::pair<bool, std::string>()>& body) {
        if (!env) {
            report(n, "SKIP", what + " — " + kCorpusHint);
            return;
        }
        if (!a.ready) {
            check(n, false, what + " — pipeline failed: " + a.error);
            return;
        }
        const auto [ok, detail] = body();
        check(n, ok, what + " — " + detail);
    };

    gated(1, "corpus windows into 9 one-second windows per recording with a "
             "positive rate in [0.35, 0.45]",
          [&] {
              const bool ok = a.windows == 6183 && a.positive_fraction >= 0.35 &&
                              a.positive_fraction <= 0.45;
              return std::pair(ok, std::to_string(a.windows) +
                                       " windows, positive rate " +
                                       num(a.positive_fraction) +
                                       " (want 6183 windows)");
          });

    gated(2, "forest on the 11-value features lands within 0.05 of accuracy "
             "0.721, F1 0.604, precision 0.706, recall 0.527",
          [&] {
              const auto& m = a.forest;
              const bool ok = std::abs(m.accuracy - 0.721) <= 0.05 &&
                              std::abs(m.present.f1 - 0.604) <= 0.05 &&
                              std::abs(m.present.precision - 0.706) <= 0.05 &&
                              std::abs(m.present.recall - 0.527) <= 0.05;
              return std::pair(ok, "accuracy " + num(m.accuracy) + ", F1 " +
                                       num(m.present.f1) + ", precision " +
                                       num(m.present.precision) + ", recall " +
                                       num(m.present.recall));
          });

    gated(3, "logistic has the top recall and trails the forest's precision "
             "by at least 0.2; the forest has the top accuracy and precision",
          [&] {
              const auto rec = [](const eval::MetricsReport& m) { return m.present.recall; };
              const auto prec = [](const eval::MetricsReport& m) { return m.present.precision; };
              const bool top_recall = rec(a.logistic) >= rec(a.svm) &&
                                      rec(a.logistic) >= rec(a.forest) &&
                                      rec(a.logistic) >= rec(a.stacking);
              const bool gap = prec(a.logistic) <= prec(a.forest) - 0.2;
              const bool top_acc = a.forest.accuracy >= a.logistic.accuracy &&
                                   a.forest.accuracy >= a.svm.accuracy &&
                                   a.forest.accuracy >= a.stacking.accuracy;
              const bool top_prec = prec(a.forest) >= prec(a.logistic) &&
                                    prec(a.forest) >= prec(a.svm) &&
                                    prec(a.forest) >= prec(a.stacking);
              return std::pair(top_recall && gap && top_acc && top_prec,
                               "logistic recall " + num(rec(a.logistic)) +
                                   " precision " + num(prec(a.logistic)) +
                                   "; forest accuracy " + num(a.forest.accuracy) +
                                   " precision " + num(prec(a.forest)));
          });

    gated(4, "absent-class F1 exceeds present-class F1 by at least 0.10 and "
             "weighted F1 is within 0.05 of 0.712",
          [&] {
              const auto& m = a.forest;
              const bool ok = m.absent.f1 - m.present.f1 >= 0.10 &&
                              std::abs(m.weighted_f1 - 0.712) <= 0.05;
              return std::pair(ok, "absent F1 " + num(m.absent.f1) +
                                       ", present F1 " + num(m.present.f1) +
                                       ", weighted " + num(m.weighted_f1));
          });

    gated(5, "the 11-value feature set beats the cepstral baseline on forest "
             "accuracy over the same split",
          [&] {
              const bool ok = a.forest.accuracy > a.mfcc_forest.accuracy;
              return std::pair(ok, "11-value " + num(a.forest.accuracy) +
                                       " vs cepstral " +
                                       num(a.mfcc_forest.accuracy));
          });
}

// ---------------------------------------------------------------------------
// Criterion 7: pitch tracking
// ---------------------------------------------------------------------------

void criterion_pitch() {
    const features::FeatureConfig cfg;
    std::vector<double> pooled; // |error| of every voiced frame, all tones
    double worst_tone_median = 0.0;
    bool every_tone_voiced = true;
    for (int k = 0; k < 30; ++k) {
        const double f = 200.0 * std::pow(4000.0 / 200.0, double(k) / 29.0);
        const features::PitchTrack track = features::yin_pitch_track(tone(f), 44100.0, cfg);
        std::vector<double> errs;
        for (double v : track.values)
            if (std::isfinite(v)) errs.push_back(std::abs(v - f));
        if (errs.empty()) {
            every_tone_voiced = false;
            continue;
        }
        std::sort(errs.begin(), errs.end());
        worst_tone_median = std::max(worst_tone_median, errs[errs.size() / 2]);
        pooled.insert(pooled.end(), errs.begin(), errs.end());
    }
    std::sort(pooled.begin(), pooled.end());
    const double median =
        pooled.empty() ? 1e300 : pooled[pooled.size() / 2];

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> noise(44100);
    for (double& v : noise) v = u(rng);
    const features::PitchTrack nt = features::yin_pitch_track(noise, 44100.0, cfg);
    const std::size_t unvoiced = nt.values.size() - nt.voiced_count();
    const double unvoiced_rate = double(unvoiced) / double(nt.values.size());

    check(7, every_tone_voiced && median <= 1.0 && unvoiced_rate >= 0.9,
          "pitch tracking: median error " + num(median) +
              " Hz over 30 tones (limit 1; worst single-tone median " +
              num(worst_tone_median) + "); noise " + num(100.0 * unvoiced_rate) +
              "% unvoiced (floor 90%)");
}

// ---------------------------------------------------------------------------
// Criterion 8: modulation detection
// ---------------------------------------------------------------------------

void criterion_am() {
    const features::FeatureExtractor ex({}, {});
    const features::FeatureConfig& cfg = ex.config();
    std::size_t hits = 0, exact = 0, false_pos = 0;
    const std::size_t want = cfg.am_bands.size() * 10;
    for (std::size_t b = 0; b < cfg.am_bands.size(); ++b) {
        const double carrier =
            std::sqrt(cfg.am_bands[b].first * cfg.am_bands[b].second);
        for (int r = 1; r <= 10; ++r) {
            std::vector<double> x(44100);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double t = double(i) / 44100.0;
                x[i] = 0.8 * 0.5 * (1.0 + std::sin(2.0 * M_PI * r * t)) *
                       std::sin(2.0 * M_PI * carrier * t);
            }
            const dsp::Signal env =
                features::am_envelope(x, ex.am_band_filter(b), cfg.am_blocks,
                                      cfg.am_block_len);
            const features::AmBandResult res =
                features::am_band_analysis(env, cfg, int(b), 1.0);
            hits += std::size_t(res.detected);
            exact += std::size_t(res.detected && res.frequency == double(r));
        }
        const dsp::Signal flat_env =
            features::am_envelope(tone(carrier, 0.8), ex.am_band_filter(b),
                                  cfg.am_blocks, cfg.am_block_len);
        false_pos += std::size_t(
            features::am_band_analysis(flat_env, cfg, int(b), 1.0).detected);
    }
    check(8, hits == want && exact == want && false_pos == 0,
          "modulation detection: " + std::to_string(exact) + "/" +
              std::to_string(want) +
              " rates recovered exactly; false positives on steady carriers: " +
              std::to_string(false_pos));
}

// ---------------------------------------------------------------------------
// Criterion 9: modulation depth
// ---------------------------------------------------------------------------

void criterion_depth() {
    const features::FeatureConfig cfg;
    std::vector<double> env(cfg.am_blocks);
    for (std::size_t i = 0; i < env.size(); ++i)
        env[i] = 0.5 + 0.4 * std::sin(2.0 * M_PI * 4.0 * double(i) / double(env.size()));
    const features::AmBandResult res = features::am_band_analysis(env, cfg, 0, 1.0);

    // For a sinusoid sampled uniformly in phase, the p-quantile of sin is
    // sin(pi*(p - 1/2)), so P95 - P5 of 0.4*sin is 0.8*cos(pi/20).
    const double oracle = 0.8 * std::cos(M_PI / 20.0);
    const double rel = std::abs(res.depth - oracle) / oracle;
    check(9, res.detected && rel <= 0.02,
          "modulation depth " + num(res.depth) + " vs analytic span " + num(oracle) +
              " (relative error " + num(rel) + ", limit 0.02)");
}

// ---------------------------------------------------------------------------
// Criterion 10: pitch moments
// ---------------------------------------------------------------------------

void criterion_moments() {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(200.0, 10000.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        features::PitchTrack track;
        track.values.resize(50);
        std::vector<double> voiced;
        for (double& v : track.values) {
            if (u(rng) < 0.75) {
                v = val(rng);
                voiced.push_back(v);
            } else {
                v = std::numeric_limits<double>::quiet_NaN();
            }
        }
        const features::PitchMoments got = features::pitch_moments(track);

        double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0, skew = 0.0, kurt = 0.0;
        if (!voiced.empty()) {
            for (double v : voiced) mean += v;
            mean /= double(voiced.size());
            for (double v : voiced) {
                const double d = v - mean;
                m2 += d * d;
                m3 += d * d * d;
                m4 += d * d * d * d;
            }
            m2 /= double(voiced.size());
            m3 /= double(voiced.size());
            m4 /= double(voiced.size());
            if (m2 > 1e-12) {
                skew = m3 / std::pow(m2, 1.5);
                kurt = m4 / (m2 * m2);
            }
        }
        auto gap = [&](double a, double b) {
            return std::abs(a - b) / std::max(1.0, std::abs(b));
        };
        const double g = std::max({gap(got.mean, mean), gap(got.variance, m2),
                                   gap(got.skew, skew), gap(got.kurtosis, kurt)});
        worst = std::max(worst, g);
        ok = ok && g <= 1e-9;
    }
    check(10, ok, "pitch moments vs brute-force oracle over 1000 random tracks: "
                  "worst relative gap " + num(worst) + " (limit 1e-9)");
}

// ---------------------------------------------------------------------------
// Criterion 11: spectral statistics
// ---------------------------------------------------------------------------

void criterion_spectral() {
    const features::FeatureConfig cfg;
    const double bin_hz = 44100.0 / std::round(44100.0 * cfg.frame.length_s);
    double worst_centroid = 0.0, worst_rolloff = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double f = 500.0 + double(k) * (10000.0 - 500.0) / 19.0;
        const features::SpectralStats s = features::spectral_features(tone(f), 44100.0, cfg);
        worst_centroid = std::max(worst_centroid, std::abs(s.centroid_mean - f));
        worst_rolloff = std::max(worst_rolloff, std::abs(s.rolloff_mean - f));
    }
    check(11, worst_centroid <= bin_hz && worst_rolloff <= bin_hz,
          "tone centroid within " + num(worst_centroid) + " Hz and rolloff within " +
              num(worst_rolloff) + " Hz across 20 tones (one bin = " + num(bin_hz) +
              " Hz)");
}

// ---------------------------------------------------------------------------
// Criterion 12: classifier properties
// ---------------------------------------------------------------------------

std::string svm_kkt_gap(const Dataset2& d, const classifiers::SvmModel& m,
                        double* gap_out) {
    const std::size_t n = d.x.size();
    const classifiers::Matrix xs = m.scaler.apply_all(d.x);
    // Recover each training row's dual coefficient by matching it to the
    // stored support vectors (exact copies of scaled training rows).
    std::vector<double> alpha(n, 0.0);
    for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            if (xs[i] == m.support_vectors[s]) {
                alpha[i] = std::abs(m.coeffs[s]);
                break;
            }
        }
    }
    auto kernel = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double ss = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j)
            ss += (a[j] - b[j]) * (a[j] - b[j]);
        return std::exp(-m.cfg.gamma * ss);
    };
    const double C = m.cfg.c;
    double up = -1e300, low = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double u = 0.0;
        for (std::size_t s = 0; s < m.support_vectors.size(); ++s)
            u += m.coeffs[s] * kernel(xs[i], m.support_vectors[s]);
        const double yi = d.y[i] == 1 ? 1.0 : -1.0;
        const double v = yi - u;
        const bool at_c = alpha[i] >= C - 1e-12;
        const bool at_zero = alpha[i] <= 1e-12;
        if ((yi > 0 && !at_c) || (yi < 0 && !at_zero)) up = std::max(up, v);
        if ((yi < 0 && !at_c) || (yi > 0 && !at_zero)) low = std::min(low, v);
    }
    *gap_out = up - low;
    return "KKT gap " + num(*gap_out);
}

void criterion_classifiers() {
    // Held-out accuracy of the forest on separable 11-feature data.
    const Dataset2 train = separable11(300, 21);
    const Dataset2 test = separable11(100, 22);
    const classifiers::ForestModel forest =
        classifiers::train_forest(train.x, train.y, {});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.x.size(); ++i)
        correct += std::size_t(classifiers::predict_forest(forest, test.x[i]).label ==
                               test.y[i]);
    const double acc = double(correct) / double(test.x.size());
    const bool forest_ok = acc >= 0.95;

    // Stationarity of the kernel machine's dual solution.
    const Dataset2 d2 = two_clusters(160, 3, 31);
    const classifiers::SvmModel svm = classifiers::train_svm_rbf(d2.x, d2.y, {});
    double gap = 1e300;
    const std::string gap_text = svm_kkt_gap(d2, svm, &gap);
    const bool kkt_ok = svm.converged && gap <= 1e-3;

    // Analytic gradient of the regularized log-likelihood vs central
    // finite differences at a perturbed point.
    const classifiers::LogisticModel lg = classifiers::train_logistic(d2.x, d2.y, {});
    const classifiers::Matrix xs = lg.scaler.apply_all(d2.x);
    std::vector<double> wb = lg.weights;
    wb.push_back(lg.bias);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (double& v : wb) v += u(rng);
    const double lambda = lg.cfg.lambda;
    auto objective = [&](const std::vector<double>& p) {
        double fsum = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double z = p.back();
            for (std::size_t j = 0; j + 1 < p.size(); ++j) z += p[j] * xs[i][j];
            const double margin = d2.y[i] == 1 ? z : -z;
            fsum += margin >= 0.0 ? std::log1p(std::exp(-margin))
                                  : -margin + std::log1p(std::exp(margin));
        }
        double reg = 0.0;
        for (std::size_t j = 0; j + 1 < p.size(); ++j) reg += p[j] * p[j];
        return fsum + 0.5 * lambda * reg;
    };
    std::vector<double> analytic(wb.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = wb.back();
        for (std::size_t j = 0; j + 1 < wb.size(); ++j) z += wb[j] * xs[i][j];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double r = p - double(d2.y[i]);
        for (std::size_t j = 0; j + 1 < wb.size(); ++j) analytic[j] += r * xs[i][j];
        analytic.back() += r;
    }
    for (std::size_t j = 0; j + 1 < wb.size(); ++j) analytic[j] += lambda * wb[j];
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t j = 0; j < wb.size(); ++j) {
        std::vector<double> hi = wb, lo = wb;
        const double h = 1e-6 * std::max(1.0, std::abs(wb[j]));
        hi[j] += h;
        lo[j] -= h;
        const double fd = (objective(hi) - objective(lo)) / (2.0 * h);
        diff2 += (fd - analytic[j]) * (fd - analytic[j]);
        norm2 += analytic[j] * analytic[j];
    }
    const double rel = std::sqrt(diff2) / std::sqrt(norm2);
    const bool grad_ok = rel <= 1e-5;

    // Bit-identical retraining under a fixed seed.
    const classifiers::ForestModel forest2 =
        classifiers::train_forest(train.x, train.y, {});
    bool identical = forest.trees.size() == forest2.trees.size();
    for (std::size_t t = 0; identical && t < forest.trees.size(); ++t) {
        const auto& a = forest.trees[t].nodes;
        const auto& b = forest2.trees[t].nodes;
        identical = a.size() == b.size();
        for (std::size_t k = 0; identical && k < a.size(); ++k)
            identical = a[k].feature == b[k].feature &&
                        a[k].threshold == b[k].threshold && a[k].left == b[k].left &&
                        a[k].right == b[k].right && a[k].p1 == b[k].p1 &&
                        a[k].count == b[k].count;
    }

    // Serialization round trip: identical predictions on 100 random vectors.
    const fs::path tmp = fs::temp_directory_path() / "amps_acceptance";
    fs::create_directories(tmp);
    classifiers::StackingConfig scfg;
    scfg.forest.trees = 60; // keep the five-fold refits quick
    const classifiers::StackingModel stack =
        classifiers::train_stacking(d2.x, d2.y, scfg);
    const classifiers::LogisticModel lg2 = lg;

    std::mt19937_64 prng(77);
    std::normal_distribution<double> g(0.0, 2.0);
    bool roundtrip = true;
    auto probe_matches = [&](const auto& original, std::size_t dims,
                             const std::string& name) {
        const std::string path = (tmp / (name + ".json")).string();
        model_io::save_model(original, path);
        const model_io::AnyModel loaded = model_io::load_model(path);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> probe(dims);
            for (double& v : probe) v = g(prng);
            classifiers::Prediction want;
            using T = std::decay_t<decltype(original)>;
            if constexpr (std::is_same_v<T, classifiers::LogisticModel>)
                want = classifiers::predict_logistic(original, probe);
            else if constexpr (std::is_same_v<T, classifiers::SvmModel>)
                want = classifiers::predict_svm(original, probe);
            else
                want = classifiers::predict_stacking(original, probe);
            const classifiers::Prediction got = model_io::predict_any(loaded, probe);
            roundtrip = roundtrip && got.score == want.score && got.label == want.label;
        }
    };
    probe_matches(lg2, lg2.dim(), "logistic");
    probe_matches(svm, svm.dim(), "svm");
    probe_matches(stack, stack.logistic.dim(), "stacking");
    {
        const std::string path = (tmp / "forest.json").string();
        model_io::save_model(forest, path);
        const model_io::AnyModel loaded = model_io::load_model(path);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> probe(11);
            for (double& v : probe) v = g(prng);
            const auto want = classifiers::predict_forest(forest, probe);
            const auto got = model_io::predict_any(loaded, probe);
            roundtrip = roundtrip && got.score == want.score && got.label == want.label;
        }
    }

    check(12, forest_ok && kkt_ok && grad_ok && identical && roundtrip,
          "forest held-out accuracy " + num(acc) + "; " + gap_text +
              " (limit 1e-3); gradient relative error " + num(rel) +
              " (limit 1e-5); retrain bit-identical: " +
              (identical ? "yes" : "no") + "; round-trip predictions identical: " +
              (roundtrip ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// Criterion 13: metrics
// ---------------------------------------------------------------------------

void criterion_metrics() {
    std::mt19937_64 rng(13);
    bool counts_ok = true, weighted_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 300;
        std::vector<int> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = int(rng() % 2);
            truth[i] = int(rng() % 2);
        }
        const eval::MetricsReport m = eval::compute_metrics(pred, truth);
        std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += std::size_t(pred[i] == 1 && truth[i] == 1);
            fp += std::size_t(pred[i] == 1 && truth[i] == 0);
            tn += std::size_t(pred[i] == 0 && truth[i] == 0);
            fn += std::size_t(pred[i] == 0 && truth[i] == 1);
        }
        counts_ok = counts_ok && m.tp == tp && m.fp == fp && m.tn == tn && m.fn == fn &&
                    m.accuracy == double(tp + tn) / double(n);
        const double s1 = double(tp + fn), s0 = double(tn + fp);
        weighted_ok =
            weighted_ok &&
            std::abs(m.weighted_f1 - (s0 * m.absent.f1 + s1 * m.present.f1) / double(n)) <=
                1e-12 &&
            std::abs(m.weighted_precision -
                     (s0 * m.absent.precision + s1 * m.present.precision) / double(n)) <=
                1e-12 &&
            std::abs(m.weighted_recall -
                     (s0 * m.absent.recall + s1 * m.present.recall) / double(n)) <= 1e-12;
    }
    check(13, counts_ok && weighted_ok,
          std::string("metrics vs brute-force confusion oracle on 1000 random "
                      "pairs: counts ") +
              (counts_ok ? "exact" : "WRONG") + ", weighted averages " +
              (weighted_ok ? "exact to 1e-12" : "WRONG"));
}

// ---------------------------------------------------------------------------
// Criterion 14: leakage audit
// ---------------------------------------------------------------------------

void criterion_leakage() {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (int gidx = 0; gidx < 300; ++gidx)
        for (int w = 0; w < 4; ++w) {
            ids.push_back("rec" + std::to_string(gidx));
            labels.push_back(gidx % 2);
        }
    std::size_t leaks = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        eval::SplitSpec spec;
        spec.seed = seed;
        const eval::SplitIndices idx = eval::split_rows(ids, labels, spec);
        std::vector<bool> in_train(300, false), in_test(300, false);
        for (std::size_t i : idx.train) in_train[std::size_t(std::stoi(ids[i].substr(3)))] = true;
        for (std::size_t i : idx.test) in_test[std::size_t(std::stoi(ids[i].substr(3)))] = true;
        for (int gidx = 0; gidx < 300; ++gidx)
            leaks += std::size_t(in_train[gidx] && in_test[gidx]);
    }
    check(14, leaks == 0,
          "recording-grouped splits across 100 seeds: " + std::to_string(leaks) +
              " recordings seen in both partitions");
}

} // namespace

int main() {
    const char* env = std::getenv("AMPS_DATASET_DIR");
    run_criterion(1, [&] { corpus_criteria(env); }); // prints criteria 1-5

    run_criterion(6, [] {
        const std::uint64_t ops = eval::count_rf_ops(500, 8, 4);
        check(6, ops == 16000,
              "a 500-tree, depth-8, 4-feature forest costs exactly " +
                  std::to_string(ops) + " comparisons (want 16000)");
    });
    run_criterion(7, criterion_pitch);
    run_criterion(8, criterion_am);
    run_criterion(9, criterion_depth);
    run_criterion(10, criterion_moments);
    run_criterion(11, criterion_spectral);
    run_criterion(12, criterion_classifiers);
    run_criterion(13, criterion_metrics);
    run_criterion(14, criterion_leakage);

    if (g_failures == 0) {
        std::printf("acceptance: all checked criteria passed%s\n",
                    env ? "" : " (corpus criteria skipped)");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
