#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "amps/audio.hpp"
#include "amps/common.hpp"
#include "amps/dataset.hpp"
#include "amps/io_util.hpp"

using namespace amps;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<double> tone(double hz, double amp, double seconds, double fs_hz) {
    const auto n = std::size_t(std::llround(seconds * fs_hz));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * double(i) / fs_hz);
    return x;
}

void write_raw(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void push_u32(std::vector<unsigned char>& v, uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
}
void push_u16(std::vector<unsigned char>& v, uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}
void push_tag(std::vector<unsigned char>& v, const char* tag) {
    v.insert(v.end(), tag, tag + 4);
}

// Minimal WAV with arbitrary format/channels/rate for negative tests.
std::vector<unsigned char> raw_wav(uint16_t format, uint16_t channels, uint32_t rate,
                                   uint16_t bits, const std::vector<unsigned char>& payload) {
    std::vector<unsigned char> v;
    push_tag(v, "RIFF");
    push_u32(v, uint32_t(36 + payload.size()));
    push_tag(v, "WAVE");
    push_tag(v, "fmt ");
    push_u32(v, 16);
    push_u16(v, format);
    push_u16(v, channels);
    push_u32(v, rate);
    push_u32(v, rate * channels * bits / 8);
    push_u16(v, uint16_t(channels * bits / 8));
    push_u16(v, bits);
    push_tag(v, "data");
    push_u32(v, uint32_t(payload.size()));
    v.insert(v.end(), payload.begin(), payload.end());
    return v;
}

} // namespace

TEST_CASE("wav round-trip: five seconds at 44.1 kHz decodes to 220500 samples") {
    auto dir = fresh_dir("amps_test_wav");
    auto x = tone(1000.0, 0.5, 5.0, 44100.0);
    audio::write_wav_pcm16(dir / "t.wav", x, 44100.0);
    auto rec = audio::load_recording(dir / "t.wav");
    CHECK(rec.samples.size() == 220500);
    CHECK(rec.sample_rate == 44100.0);
    CHECK(rec.duration_s() == doctest::Approx(5.0));
    CHECK(rec.id == "t");
    for (std::size_t i = 0; i < 200; ++i)
        CHECK(rec.samples[i] == doctest::Approx(x[i]).epsilon(1e-3));
}

TEST_CASE("wav decode: full-scale square wave maps to +-(32767/32768)") {
    auto dir = fresh_dir("amps_test_wav_sq");
    std::vector<unsigned char> payload;
    for (int i = 0; i < 100; ++i) push_u16(payload, uint16_t(i % 2 == 0 ? 32767 : -32767));
    write_raw(dir / "sq.wav", raw_wav(1, 1, 44100, 16, payload));
    auto rec = audio::load_recording(dir / "sq.wav");
    REQUIRE(rec.samples.size() == 100);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const double expect = (i % 2 == 0 ? 1.0 : -1.0) * 32767.0 / 32768.0;
        CHECK(rec.samples[i] == expect);
    }
}

TEST_CASE("wav decode: 32-bit float payload is accepted") {
    auto dir = fresh_dir("amps_test_wav_f32");
    std::vector<unsigned char> payload;
    for (int i = 0; i < 8; ++i) {
        float v = 0.25f * float(i % 3);
        uint32_t raw;
        std::memcpy(&raw, &v, 4);
        push_u32(payload, raw);
    }
    write_raw(dir / "f.wav", raw_wav(3, 1, 44100, 32, payload));
    auto rec = audio::load_recording(dir / "f.wav");
    REQUIRE(rec.samples.size() == 8);
    CHECK(rec.samples[1] == doctest::Approx(0.25));
    CHECK(rec.samples[2] == doctest::Approx(0.5));
}

TEST_CASE("wav decode: rejects stereo, wrong rate, unknown codec, garbage") {
    auto dir = fresh_dir("amps_test_wav_bad");
    std::vector<unsigned char> p16;
    for (int i = 0; i < 50; ++i) push_u16(p16, 0);

    write_raw(dir / "stereo.wav", raw_wav(1, 2, 44100, 16, p16));
    CHECK_THROWS_AS((void)audio::load_recording(dir / "stereo.wav"), Error);

    write_raw(dir / "rate.wav", raw_wav(1, 1, 22050, 16, p16));
    CHECK_THROWS_AS((void)audio::load_recording(dir / "rate.wav"), Error);
    CHECK_NOTHROW((void)audio::load_recording(dir / "rate.wav", 0.0)); // rate check disabled

    write_raw(dir / "alaw.wav", raw_wav(6, 1, 44100, 8, p16));
    CHECK_THROWS_AS((void)audio::load_recording(dir / "alaw.wav"), Error);

    write_raw(dir / "noise.bin", {1, 2, 3, 4, 5});
    CHECK_THROWS_AS((void)audio::load_recording(dir / "noise.bin"), Error);

    CHECK_THROWS_AS((void)audio::load_recording(dir / "missing.wav"), Error);

    // data chunk runs past end of file
    auto truncated = raw_wav(1, 1, 44100, 16, p16);
    truncated.resize(truncated.size() - 20);
    write_raw(dir / "trunc.wav", truncated);
    CHECK_THROWS_AS((void)audio::load_recording(dir / "trunc.wav"), Error);
}

TEST_CASE("parse_annotations: rows sorted by start, tags kept verbatim") {
    auto events = dataset::parse_annotations_text(
        "2.5,0.4,Erirub_call\n0.15,2.7,Sylatr_song\n\n1.0,0.2,Human_voice\n", "inline");
    REQUIRE(events.size() == 3);
    CHECK(events[0].start_s == doctest::Approx(0.15));
    CHECK(events[0].duration_s == doctest::Approx(2.7));
    CHECK(events[0].tag == "Sylatr_song");
    CHECK(events[1].tag == "Human_voice");
    CHECK(events[2].tag == "Erirub_call");
}

TEST_CASE("parse_annotations: empty file means no events") {
    CHECK(dataset::parse_annotations_text("", "inline").empty());
    CHECK(dataset::parse_annotations_text("\n  \n", "inline").empty());
}

TEST_CASE("parse_annotations: malformed rows are rejected") {
    CHECK_THROWS_AS((void)dataset::parse_annotations_text("a,b,c\n", "x"), Error);
    CHECK_THROWS_AS((void)dataset::parse_annotations_text("0.1,0.2\n", "x"), Error);
    CHECK_THROWS_AS((void)dataset::parse_annotations_text("-1.0,0.2,T\n", "x"), Error);
    CHECK_THROWS_AS((void)dataset::parse_annotations_text("0.1,-0.2,T\n", "x"), Error);
    CHECK_THROWS_AS((void)dataset::parse_annotations_text("0.1,0.2,\n", "x"), Error);
}

TEST_CASE("TagPolicy: bird unless a non-bird prefix matches") {
    dataset::TagPolicy tags;
    CHECK(tags.is_bird("Sylatr_song"));
    CHECK(tags.is_bird("Erirub_call"));
    CHECK_FALSE(tags.is_bird("Human_voice"));
    CHECK_FALSE(tags.is_bird("Insect_stridulation"));
    tags.non_bird_prefixes.push_back("Rain");
    CHECK_FALSE(tags.is_bird("Rain_heavy"));
}

TEST_CASE("window_recording: a five-second recording yields nine half-second-hop windows") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(220500, 0.25);
    auto windows = dataset::window_recording(rec, {});
    REQUIRE(windows.size() == 9);
    for (int k = 0; k < 9; ++k) {
        CHECK(windows[std::size_t(k)].index == k);
        CHECK(windows[std::size_t(k)].start_s == doctest::Approx(0.5 * k));
        CHECK(windows[std::size_t(k)].samples.size() == 44100);
    }
}

TEST_CASE("window_recording: short input is zero-padded to the full span") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(141120, 0.5); // 3.2 s
    auto windows = dataset::window_recording(rec, {});
    REQUIRE(windows.size() == 9);
    // window 8 covers 4.0..5.0 s, fully inside the padding
    for (double v : windows[8].samples) CHECK(v == 0.0);
    // window 5 covers 2.5..3.5 s, straddling the boundary at 3.2 s
    CHECK(windows[5].samples.front() == 0.5);
    CHECK(windows[5].samples.back() == 0.0);
}

TEST_CASE("window_recording: over-length input errors unless truncation is requested") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(220502, 0.1); // two samples over
    CHECK_THROWS_AS((void)dataset::window_recording(rec, {}), Error);
    dataset::WindowSpec spec;
    spec.allow_truncate = true;
    auto windows = dataset::window_recording(rec, spec);
    CHECK(windows.size() == 9);

    rec.samples.assign(220501, 0.1); // one sample of slack is tolerated
    CHECK_NOTHROW((void)dataset::window_recording(rec, {}));
}

TEST_CASE("window_recording: hop must be shorter than the window") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(44100, 0.0);
    dataset::WindowSpec spec;
    spec.window_s = 1.0;
    spec.hop_s = 1.5;
    CHECK_THROWS_AS((void)dataset::window_recording(rec, spec), Error);
}

TEST_CASE("label_windows: strictly positive overlap with a bird event") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(220500, 0.0);
    auto windows = dataset::window_recording(rec, {}, false);
    dataset::TagPolicy tags;

    SUBCASE("event ending exactly at the window start does not count") {
        std::vector<dataset::AnnotationEvent> events{{0.0, 0.49, "Sylatr_song"}};
        dataset::label_windows(windows, events, tags);
        CHECK(windows[1].label == dataset::Label::bird_absent); // [0.5, 1.5)
        CHECK(windows[0].label == dataset::Label::bird_present);
    }
    SUBCASE("interior event marks every window it touches") {
        std::vector<dataset::AnnotationEvent> events{{0.6, 0.3, "Sylatr_song"}};
        dataset::label_windows(windows, events, tags);
        CHECK(windows[0].label == dataset::Label::bird_present); // [0, 1)
        CHECK(windows[1].label == dataset::Label::bird_present); // [0.5, 1.5)
        CHECK(windows[2].label == dataset::Label::bird_absent);  // [1.0, 2.0)
    }
    SUBCASE("non-bird events never mark a window") {
        std::vector<dataset::AnnotationEvent> events{{0.0, 5.0, "Human_voice"}};
        dataset::label_windows(windows, events, tags);
        for (const auto& w : windows) CHECK(w.label == dataset::Label::bird_absent);
    }
    SUBCASE("an overlap floor suppresses grazing events") {
        std::vector<dataset::AnnotationEvent> events{{0.45, 0.1, "Sylatr_song"}};
        dataset::label_windows(windows, events, tags, 1.0, 0.2);
        for (const auto& w : windows) CHECK(w.label == dataset::Label::bird_absent);
    }
}

TEST_CASE("label_windows: adding an event never clears a positive label") {
    audio::Recording rec;
    rec.id = "r";
    rec.sample_rate = 44100.0;
    rec.samples.assign(220500, 0.0);
    dataset::TagPolicy tags;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.5);
    std::vector<dataset::AnnotationEvent> events;
    std::vector<dataset::Label> prev(9, dataset::Label::bird_absent);
    for (int step = 0; step < 20; ++step) {
        events.push_back({u(rng), 0.3, "Sylatr_song"});
        auto windows = dataset::window_recording(rec, {}, false);
        dataset::label_windows(windows, events, tags);
        for (std::size_t k = 0; k < windows.size(); ++k) {
            if (prev[k] == dataset::Label::bird_present)
                CHECK(windows[k].label == dataset::Label::bird_present);
            prev[k] = windows[k].label;
        }
    }
}

TEST_CASE("parse_manifest: header allowed, duplicates and bad flags rejected") {
    auto dir = fresh_dir("amps_test_manifest");
    io::atomic_write_text(dir / "m.csv", "recording_id,no_bird\na,0\nb,1\n");
    auto m = dataset::parse_manifest(dir / "m.csv");
    REQUIRE(m.size() == 2);
    CHECK(m[0].id == "a");
    CHECK_FALSE(m[0].no_bird);
    CHECK(m[1].no_bird);

    io::atomic_write_text(dir / "dup.csv", "a,0\na,1\n");
    CHECK_THROWS_AS((void)dataset::parse_manifest(dir / "dup.csv"), Error);
    io::atomic_write_text(dir / "flag.csv", "a,maybe\n");
    CHECK_THROWS_AS((void)dataset::parse_manifest(dir / "flag.csv"), Error);
}

TEST_CASE("build_dataset: mini corpus end to end") {
    auto dir = fresh_dir("amps_test_build");
    fs::create_directories(dir / "audio");
    fs::create_directories(dir / "labels");

    // r1: bird early; r2: bird late; r3: marked no-bird, no annotation file;
    // r4: empty annotation file; r5: only a human voice.
    audio::write_wav_pcm16(dir / "audio/r1.wav", tone(2000, 0.5, 5.0, 44100), 44100);
    audio::write_wav_pcm16(dir / "audio/r2.wav", tone(3000, 0.5, 4.0, 44100), 44100);
    audio::write_wav_pcm16(dir / "audio/r3.wav", tone(500, 0.1, 5.0, 44100), 44100);
    audio::write_wav_pcm16(dir / "audio/r4.wav", tone(700, 0.1, 5.0, 44100), 44100);
    audio::write_wav_pcm16(dir / "audio/r5.wav", tone(900, 0.1, 5.0, 44100), 44100);
    io::atomic_write_text(dir / "labels/r1.csv", "0.1,0.8,Sylatr_song\n");
    io::atomic_write_text(dir / "labels/r2.csv", "4.2,0.5,Erirub_call\n");
    io::atomic_write_text(dir / "labels/r4.csv", "");
    io::atomic_write_text(dir / "labels/r5.csv", "1.0,3.0,Human_voice\n");
    io::atomic_write_text(dir / "manifest.csv", "r2,0\nr1,0\nr3,1\nr4,0\nr5,0\n");

    auto ds = dataset::build_dataset(dir / "audio", dir / "labels", dir / "manifest.csv");
    REQUIRE(ds.windows.size() == 45);

    // sorted by (recording id, index) regardless of manifest order
    CHECK(ds.windows.front().recording_id == "r1");
    CHECK(ds.windows.back().recording_id == "r5");
    for (std::size_t i = 1; i < ds.windows.size(); ++i) {
        const auto& a = ds.windows[i - 1];
        const auto& b = ds.windows[i];
        CHECK((a.recording_id < b.recording_id ||
               (a.recording_id == b.recording_id && a.index < b.index)));
    }

    // r1 event [0.1, 0.9) touches windows starting at 0.0 and 0.5 only
    int r1_pos = 0, r2_pos = 0, other_pos = 0;
    for (const auto& w : ds.windows) {
        if (w.label == dataset::Label::bird_present) {
            if (w.recording_id == "r1") ++r1_pos;
            else if (w.recording_id == "r2") ++r2_pos;
            else ++other_pos;
        }
    }
    CHECK(r1_pos == 2);
    CHECK(r2_pos == 2); // [4.2, 4.7) touches windows at 3.5 and 4.0
    CHECK(other_pos == 0);
    CHECK(ds.positive_fraction == doctest::Approx(4.0 / 45.0));

    // deterministic export: byte-identical across reruns
    dataset::export_windows_csv(ds, dir / "w1.csv");
    auto ds2 = dataset::build_dataset(dir / "audio", dir / "labels", dir / "manifest.csv");
    dataset::export_windows_csv(ds2, dir / "w2.csv");
    CHECK(io::read_text_file(dir / "w1.csv") == io::read_text_file(dir / "w2.csv"));

    auto head = io::read_text_file(dir / "w1.csv").substr(0, 60);
    CHECK(head.rfind("recording_id,window_index,start_sec,label\nr1,0,0,1\n", 0) == 0);
}

TEST_CASE("build_dataset: missing annotation without the no-bird mark is an error") {
    auto dir = fresh_dir("amps_test_build_bad");
    fs::create_directories(dir / "audio");
    fs::create_directories(dir / "labels");
    audio::write_wav_pcm16(dir / "audio/r1.wav", tone(2000, 0.5, 5.0, 44100), 44100);
    io::atomic_write_text(dir / "manifest.csv", "r1,0\n");
    CHECK_THROWS_AS(
        (void)dataset::build_dataset(dir / "audio", dir / "labels", dir / "manifest.csv"),
        Error);
}
