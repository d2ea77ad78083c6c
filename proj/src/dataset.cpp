#include "amps/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "amps/common.hpp"
#include "amps/io_util.hpp"

namespace amps::dataset {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double_field(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        fail(ErrorCategory::data, where + ": malformed numeric field '" + s + "'");
    return v;
}

} // namespace

std::vector<AnnotationEvent> parse_annotations_text(const std::string& text,
                                                    const std::string& origin) {
    std::vector<AnnotationEvent> events;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = split_csv_line(t);
        const std::string where = origin + ":" + std::to_string(lineno);
        if (fields.size() != 3)
            fail(ErrorCategory::data, where + ": expected start,duration,tag");
        AnnotationEvent ev;
        ev.start_s = parse_double_field(fields[0], where);
        ev.duration_s = parse_double_field(fields[1], where);
        ev.tag = fields[2];
        if (ev.start_s < 0.0) fail(ErrorCategory::data, where + ": negative start time");
        if (ev.duration_s < 0.0) fail(ErrorCategory::data, where + ": negative duration");
        if (ev.tag.empty()) fail(ErrorCategory::data, where + ": empty tag");
        events.push_back(std::move(ev));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const AnnotationEvent& a, const AnnotationEvent& b) {
                         return a.start_s < b.start_s;
                     });
    return events;
}

std::vector<AnnotationEvent> parse_annotations(const std::filesystem::path& path) {
    return parse_annotations_text(io::read_text_file(path), path.filename().string());
}

bool TagPolicy::is_bird(const std::string& tag) const {
    for (const auto& prefix : non_bird_prefixes) {
        if (tag.size() >= prefix.size() && tag.compare(0, prefix.size(), prefix) == 0)
            return false;
    }
    return true;
}

std::vector<AnalysisWindow> window_recording(const audio::Recording& rec,
                                             const WindowSpec& spec, bool keep_samples) {
    if (!(spec.window_s > spec.hop_s && spec.hop_s > 0.0))
        fail(ErrorCategory::config, "window spec: need window length > hop > 0");
    if (spec.target_windows < 1)
        fail(ErrorCategory::config, "window spec: need at least one window");
    if (!(rec.sample_rate > 0.0))
        fail(ErrorCategory::data, rec.id + ": recording has no sample rate");

    const auto win = static_cast<std::size_t>(std::llround(spec.window_s * rec.sample_rate));
    const auto hop = static_cast<std::size_t>(std::llround(spec.hop_s * rec.sample_rate));
    const std::size_t span = static_cast<std::size_t>(spec.target_windows - 1) * hop + win;

    std::vector<double> samples = rec.samples;
    if (samples.size() > span + 1 && !spec.allow_truncate)
        fail(ErrorCategory::data,
             rec.id + ": recording runs " + std::to_string(samples.size() - span) +
                 " samples past the analysis span; enable truncation to accept it");
    if (samples.size() > span) samples.resize(span);
    samples.resize(span, 0.0); // zero-pad the tail of short recordings

    std::vector<AnalysisWindow> windows(static_cast<std::size_t>(spec.target_windows));
    for (int k = 0; k < spec.target_windows; ++k) {
        AnalysisWindow& w = windows[static_cast<std::size_t>(k)];
        w.recording_id = rec.id;
        w.index = k;
        w.start_s = double(k) * spec.hop_s;
        if (keep_samples) {
            const std::size_t s = static_cast<std::size_t>(k) * hop;
            w.samples.assign(samples.begin() + std::ptrdiff_t(s),
                             samples.begin() + std::ptrdiff_t(s + win));
        }
    }
    return windows;
}

void label_windows(std::vector<AnalysisWindow>& windows,
                   const std::vector<AnnotationEvent>& events, const TagPolicy& tags,
                   double window_s, double min_overlap_s) {
    for (auto& w : windows) {
        w.label = Label::bird_absent;
        for (const auto& ev : events) {
            if (!tags.is_bird(ev.tag)) continue;
            const double overlap =
                std::min(w.start_s + window_s, ev.end_s()) - std::max(w.start_s, ev.start_s);
            if (overlap > min_overlap_s) {
                w.label = Label::bird_present;
                break;
            }
        }
    }
}

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path) {
    const std::string text = io::read_text_file(path);
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = split_csv_line(t);
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        if (lineno == 1 && !fields.empty() && fields[0] == "recording_id") continue;
        if (fields.size() != 2)
            fail(ErrorCategory::data, where + ": expected recording_id,no_bird");
        ManifestEntry e;
        e.id = fields[0];
        if (e.id.empty()) fail(ErrorCategory::data, where + ": empty recording id");
        if (fields[1] == "0")
            e.no_bird = false;
        else if (fields[1] == "1")
            e.no_bird = true;
        else
            fail(ErrorCategory::data, where + ": no_bird must be 0 or 1");
        if (!seen.insert(e.id).second)
            fail(ErrorCategory::data, where + ": duplicate recording id '" + e.id + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

LabeledDataset build_dataset(const std::filesystem::path& audio_dir,
                             const std::filesystem::path& labels_dir,
                             const std::filesystem::path& manifest_path,
                             const BuildOptions& opts) {
    const auto manifest = parse_manifest(manifest_path);
    LabeledDataset ds;
    std::size_t positives = 0;

    for (const auto& entry : manifest) {
        const auto wav = audio_dir / (entry.id + ".wav");
        audio::Recording rec = audio::load_recording(wav, opts.expected_rate);
        rec.id = entry.id;

        std::vector<AnnotationEvent> events;
        const auto ann = labels_dir / (entry.id + ".csv");
        if (std::filesystem::exists(ann)) {
            events = parse_annotations(ann);
        } else if (!entry.no_bird) {
            fail(ErrorCategory::data,
                 entry.id + ": annotation file missing and manifest does not mark it no-bird");
        }

        auto windows = window_recording(rec, opts.window, opts.keep_samples);
        label_windows(windows, events, opts.tags, opts.window.window_s, opts.min_overlap_s);
        for (auto& w : windows) {
            if (w.label == Label::bird_present) ++positives;
            ds.windows.push_back(std::move(w));
        }
    }

    std::sort(ds.windows.begin(), ds.windows.end(),
              [](const AnalysisWindow& a, const AnalysisWindow& b) {
                  if (a.recording_id != b.recording_id) return a.recording_id < b.recording_id;
                  return a.index < b.index;
              });
    ds.positive_fraction =
        ds.windows.empty() ? 0.0 : double(positives) / double(ds.windows.size());
    return ds;
}

void export_windows_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::string out = "recording_id,window_index,start_sec,label\n";
    for (const auto& w : ds.windows) {
        out += w.recording_id;
        out += ',';
        out += std::to_string(w.index);
        out += ',';
        out += io::fmt_double(w.start_s);
        out += ',';
        out += std::to_string(static_cast<int>(w.label));
        out += '\n';
    }
    io::atomic_write_text(path, out);
}

} // namespace amps::dataset
