#pragma once

#include "eps/evaluator.hpp"
#include "eps/gaze_features.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eps {

struct SimSession;

struct SelectionEvent {
    double t_ms = 0.0;
    Method method = Method::DwellTime;
    int target_id = -1;
    std::optional<Label> label;

    bool operator==(const SelectionEvent&) const = default;
};

// Gaze stream plus selection events, kept in separate time-ordered lists.
struct Recording {
    std::vector<GazeSample> samples;
    std::vector<SelectionEvent> selections;
};

bool operator==(const GazeSample& a, const GazeSample& b);
bool operator==(const Recording& a, const Recording& b);

// JSON lines, merged in timestamp order; an event follows the samples sharing its timestamp.
std::string serialize_recording(const Recording& rec);
// Throws InvalidInput (with the line number) on malformed lines or decreasing timestamps.
Recording parse_recording(std::string_view text);

Recording load_recording(const std::filesystem::path& path);
void save_recording(const Recording& rec, const std::filesystem::path& path);

Recording recording_from_session(const SimSession& session);

// latency_us is left out when absent or when include_latency is false.
std::string serialize_decision(const DecisionRecord& d, bool include_latency = true);
std::string serialize_decision_log(std::span<const DecisionRecord> log, bool include_latency = true);
std::vector<DecisionRecord> parse_decision_log(std::string_view text, const std::string& session = {});

std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temp file then renames, so readers never see partial output.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace eps
