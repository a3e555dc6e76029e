#pragma once

#include "eps/detector.hpp"
#include "eps/gaze_features.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eps {

struct ConfusionCounts {
    std::size_t correct_total = 0;
    std::size_t correct_classified_correct = 0;
    std::size_t incorrect_total = 0;
    std::size_t incorrect_classified_incorrect = 0;

    void validate() const;
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    bool operator==(const ConfusionCounts&) const = default;
};

// A class accuracy is absent when that class has no selections; macro needs both.
struct AccuracyReport {
    std::optional<double> correct_accuracy;
    std::optional<double> incorrect_accuracy;
    std::optional<double> macro_accuracy;
    double micro_accuracy = 0.0;
};

// Throws InvalidInput when both classes are empty.
AccuracyReport accuracies(const ConfusionCounts& counts);

// One classified selection, as found in a decision log.
struct DecisionRecord {
    std::string session;
    Method method = Method::DwellTime;
    double t_ms = 0.0;
    std::optional<Label> label;  // absent for unlabelled live data
    Verdict verdict = Verdict::Unclassifiable;
    std::optional<double> err;
    double threshold = 0.0;
    std::optional<double> latency_us;
};

// Unclassifiable verdicts count as whatever the policy turns them into; unlabelled records are skipped.
ConfusionCounts count_decisions(std::span<const DecisionRecord> records,
                                UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen);

struct ReportRow {
    Method method = Method::DwellTime;
    std::string session;  // empty for the per-method aggregate
    ConfusionCounts counts;
    AccuracyReport report;
};

// One row per (method, session), sorted by method then session.
std::vector<ReportRow> per_session_report(std::span<const DecisionRecord> records,
                                          UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen);
// One row per method over all sessions.
std::vector<ReportRow> per_method_report(std::span<const DecisionRecord> records,
                                         UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen);

std::string report_csv(std::span<const ReportRow> rows);
// Fixed-width table with 3-decimal cells; absent values are left blank.
std::string report_table(std::span<const ReportRow> rows);

struct SessionOutcome {
    std::uint64_t seed = 0;
    Method method = Method::DwellTime;
    std::size_t executed_incorrect = 0;
    double points = 0.0;
};

struct MethodComparison {
    Method method = Method::DwellTime;
    std::vector<std::uint64_t> seeds;
    std::vector<double> incorrect_without, incorrect_with;
    std::vector<double> points_without, points_with;
    std::vector<double> incorrect_delta;  // with - without, per pair
    std::vector<double> points_delta;
    double median_incorrect_without = 0.0, median_incorrect_with = 0.0;
    double median_points_without = 0.0, median_points_with = 0.0;
    // 1 - sum(with) / sum(without); absent when the baseline made no incorrect selections.
    std::optional<double> incorrect_reduction;
};

// Pairs the arms by (method, seed). Throws InvalidInput when a session has no partner.
std::vector<MethodComparison> performance_comparison(std::span<const SessionOutcome> without_eps,
                                                     std::span<const SessionOutcome> with_eps);

struct ProfileRow {
    std::size_t index = 0;
    double p25 = 0.0, median = 0.0, p75 = 0.0;
};

// Per time index velocity quartiles over windows (all of one method). Throws InvalidInput when empty.
std::vector<ProfileRow> velocity_profile(std::span<const VelocityWindow> windows);

}  // namespace eps
