#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "amps/audio.hpp"

namespace amps::dataset {

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

struct AnnotationEvent {
    double start_s = 0.0;
    double duration_s = 0.0;
    std::string tag;

    double end_s() const { return start_s + duration_s; }
};

// CSV rows of `start_sec,duration_sec,tag`, no header. An empty file is a
// valid empty event list. Result is sorted by start time.
std::vector<AnnotationEvent> parse_annotations(const std::filesystem::path& path);
std::vector<AnnotationEvent> parse_annotations_text(const std::string& text,
                                                    const std::string& origin);

// Decides which tags count as bird activity. Everything is a bird unless its
// tag starts with one of the listed prefixes (case-sensitive); corpora with
// other non-bird classes extend the list through config.
struct TagPolicy {
    std::vector<std::string> non_bird_prefixes{"Human", "Insect", "Amphibian"};

    bool is_bird(const std::string& tag) const;
};

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

enum class Label : int { bird_absent = 0, bird_present = 1 };

struct AnalysisWindow {
    std::string recording_id;
    int index = 0;
    double start_s = 0.0;
    Label label = Label::bird_absent;
    std::vector<double> samples; // populated only when samples are requested
};

struct WindowSpec {
    double window_s = 1.0;
    double hop_s = 0.5;
    int target_windows = 9;
    bool allow_truncate = false; // accept over-length input by truncating
};

// Cuts exactly target_windows windows starting at k*hop. Shorter recordings
// are zero-padded to the target span; recordings more than one sample over
// it are an error unless truncation was requested.
std::vector<AnalysisWindow> window_recording(const audio::Recording& rec,
                                             const WindowSpec& spec,
                                             bool keep_samples = true);

// A window is positive when any bird-tagged event overlaps it by more than
// min_overlap_s (zero means any positive overlap).
void label_windows(std::vector<AnalysisWindow>& windows,
                   const std::vector<AnnotationEvent>& events, const TagPolicy& tags,
                   double window_s = 1.0, double min_overlap_s = 0.0);

// ---------------------------------------------------------------------------
// Corpus assembly
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string id;
    bool no_bird = false;
};

// CSV of `recording_id,no_bird` rows; a `recording_id,...` header line is
// allowed and skipped. Duplicate ids are an error.
std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path);

struct LabeledDataset {
    std::vector<AnalysisWindow> windows; // sorted by (recording_id, index)
    double positive_fraction = 0.0;
};

struct BuildOptions {
    WindowSpec window;
    TagPolicy tags;
    double min_overlap_s = 0.0;
    double expected_rate = 44100.0;
    bool keep_samples = false;
};

// Audio lives at <audio_dir>/<id>.wav, annotations at <labels_dir>/<id>.csv.
// A missing annotation file is only legal for manifest rows marked no-bird.
LabeledDataset build_dataset(const std::filesystem::path& audio_dir,
                             const std::filesystem::path& labels_dir,
                             const std::filesystem::path& manifest_path,
                             const BuildOptions& opts = {});

// `recording_id,window_index,start_sec,label` with a header row.
void export_windows_csv(const LabeledDataset& ds, const std::filesystem::path& path);

} // namespace amps::dataset
