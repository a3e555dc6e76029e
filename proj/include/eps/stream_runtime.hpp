#pragma once

#include "eps/detector.hpp"
#include "eps/evaluator.hpp"
#include "eps/gaze_features.hpp"
#include "eps/recording_io.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

namespace eps {

// Fixed-capacity history of the most recent samples; overflow drops the oldest.
class SampleRing {
public:
    static constexpr std::size_t kMinCapacity = 64;

    explicit SampleRing(std::size_t capacity = 256);

    void push(const GazeSample& s);
    std::size_t size() const;
    std::size_t capacity() const { return buf_.size(); }
    std::uint64_t total_written() const;
    std::optional<GazeSample> latest() const;
    // Oldest to newest.
    std::vector<GazeSample> snapshot() const;

private:
    mutable std::mutex mu_;
    std::vector<GazeSample> buf_;
    std::uint64_t written_ = 0;
};

struct StreamConfig {
    std::size_t ring_capacity = 256;
    double frame_period_ms = 1000.0 / 90.0;
    // Silence after a deadline, in frame periods, before poll() falls back to the latest suffix.
    double late_frames = 3.0;
    UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen;
};

struct StreamDecision {
    std::uint64_t id = 0;
    SelectionEvent selection;
    Decision decision;
    double deadline_ms = 0.0;
    double latency_us = 0.0;
    bool late = false;  // resolved by the silence fallback
};

using DecisionSink = std::function<void(const StreamDecision&)>;

// Online EPS: samples in, one decision per submitted selection out, each as
// soon as a sample at or after selection + 200 ms arrives. A producer and a
// consumer thread may call in concurrently; decisions come out in deadline order.
class StreamRuntime {
public:
    explicit StreamRuntime(std::shared_ptr<const EpsModel> model, StreamConfig config = {});

    void set_sink(DecisionSink sink);

    // Throws Stream on a timestamp regression.
    std::vector<StreamDecision> push_sample(const GazeSample& s);

    // Returns the pending handle. Throws Stream without a model or on a duplicate id,
    // Usage when the method differs from the model's.
    std::uint64_t submit_selection(const SelectionEvent& e, std::optional<std::uint64_t> event_id = {});

    // Resolves pendings already covered by data, then applies the silence fallback against `now_ms`.
    std::vector<StreamDecision> poll(double now_ms);

    // End of stream: remaining pendings resolve as unclassifiable (no further sample will arrive).
    std::vector<StreamDecision> flush();

    std::size_t pending() const;
    const SampleRing& ring() const { return ring_; }

private:
    struct Pending {
        std::uint64_t id;
        SelectionEvent selection;
        double deadline_ms;
    };

    StreamDecision resolve(const Pending& p, const std::vector<GazeSample>& history, bool late) const;
    std::vector<StreamDecision> resolve_due_locked(double covered_until);
    void deliver(const std::vector<StreamDecision>& out);

    std::shared_ptr<const EpsModel> model_;
    StreamConfig config_;
    SampleRing ring_;
    mutable std::mutex mu_;
    DecisionSink sink_;
    std::optional<double> last_t_;
    // keyed by (deadline, submission order)
    std::map<std::pair<double, std::uint64_t>, Pending> pending_;
    std::set<std::uint64_t> seen_ids_;
    std::uint64_t next_id_ = 0;
    std::uint64_t order_ = 0;
};

struct ReplayResult {
    std::vector<DecisionRecord> log;
    std::vector<double> latencies_us;
    double p50_us = 0.0;
    double p99_us = 0.0;
};

// Feeds a recording through a StreamRuntime in file order and collects the decision log.
ReplayResult replay(const Recording& rec, std::shared_ptr<const EpsModel> model, StreamConfig config = {});

}  // namespace eps
