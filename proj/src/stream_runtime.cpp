#include "eps/stream_runtime.hpp"

#include "eps/error.hpp"
#include "eps/stats.hpp"

#include <algorithm>
#include <chrono>

namespace eps {

SampleRing::SampleRing(std::size_t capacity)
{
    if (capacity < kMinCapacity)
        throw Error(ErrorKind::InvalidInput, "ring capacity must be at least " + std::to_string(kMinCapacity));
    buf_.resize(capacity);
}

void SampleRing::push(const GazeSample& s)
{
    std::lock_guard lock(mu_);
    buf_[written_ % buf_.size()] = s;
    ++written_;
}

std::size_t SampleRing::size() const
{
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::min<std::uint64_t>(written_, buf_.size()));
}

std::uint64_t SampleRing::total_written() const
{
    std::lock_guard lock(mu_);
    return written_;
}

std::optional<GazeSample> SampleRing::latest() const
{
    std::lock_guard lock(mu_);
    if (written_ == 0)
        return std::nullopt;
    return buf_[(written_ - 1) % buf_.size()];
}

std::vector<GazeSample> SampleRing::snapshot() const
{
    std::lock_guard lock(mu_);
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(written_, buf_.size()));
    std::vector<GazeSample> out;
    out.reserve(n);
    for (std::uint64_t i = written_ - n; i < written_; ++i)
        out.push_back(buf_[i % buf_.size()]);
    return out;
}

StreamRuntime::StreamRuntime(std::shared_ptr<const EpsModel> model, StreamConfig config)
    : model_(std::move(model)), config_(config), ring_(config.ring_capacity)
{
    if (!(config_.frame_period_ms > 0.0) || config_.late_frames < 0.0)
        throw Error(ErrorKind::InvalidInput, "bad stream timing configuration");
}

void StreamRuntime::set_sink(DecisionSink sink)
{
    std::lock_guard lock(mu_);
    sink_ = std::move(sink);
}

std::size_t StreamRuntime::pending() const
{
    std::lock_guard lock(mu_);
    return pending_.size();
}

StreamDecision StreamRuntime::resolve(const Pending& p, const std::vector<GazeSample>& history, bool late) const
{
    StreamDecision out;
    out.id = p.id;
    out.selection = p.selection;
    out.deadline_ms = p.deadline_ms;
    out.late = late;
    const auto start = std::chrono::steady_clock::now();
    if (!late) {
        out.decision = detect(*model_, history, p.selection.t_ms, p.selection.method);
    } else if (history.size() >= kWindowSamples) {
        out.decision = decide(*model_, window_ending_at(history, history.size() - 1, p.selection.t_ms, p.selection.method));
    } else {
        out.decision.threshold_used = model_->threshold;
    }
    const auto stop = std::chrono::steady_clock::now();
    out.latency_us = std::chrono::duration<double, std::micro>(stop - start).count();
    return out;
}

std::vector<StreamDecision> StreamRuntime::resolve_due_locked(double covered_until)
{
    std::vector<StreamDecision> out;
    if (pending_.empty() || pending_.begin()->first.first > covered_until)
        return out;
    const auto history = ring_.snapshot();
    while (!pending_.empty() && pending_.begin()->first.first <= covered_until) {
        // Removed first so a throwing detect cannot wedge the queue.
        const Pending p = pending_.begin()->second;
        pending_.erase(pending_.begin());
        out.push_back(resolve(p, history, false));
    }
    return out;
}

void StreamRuntime::deliver(const std::vector<StreamDecision>& out)
{
    DecisionSink sink;
    {
        std::lock_guard lock(mu_);
        sink = sink_;
    }
    if (sink)
        for (const auto& d : out)
            sink(d);
}

std::vector<StreamDecision> StreamRuntime::push_sample(const GazeSample& s)
{
    std::vector<StreamDecision> out;
    {
        std::lock_guard lock(mu_);
        if (last_t_ && s.t_ms < *last_t_)
            throw Error(ErrorKind::Stream, "sample timestamp went backwards");
        last_t_ = s.t_ms;
        ring_.push(s);
        out = resolve_due_locked(s.t_ms);
    }
    deliver(out);
    return out;
}

std::uint64_t StreamRuntime::submit_selection(const SelectionEvent& e, std::optional<std::uint64_t> event_id)
{
    std::lock_guard lock(mu_);
    if (!model_)
        throw Error(ErrorKind::Stream, "no model loaded");
    if (e.method != model_->method)
        throw Error(ErrorKind::Usage, "selection method " + std::string(to_string(e.method)) +
                                          " does not match the model's " + std::string(to_string(model_->method)));
    const std::uint64_t id = event_id ? *event_id : next_id_;
    if (!seen_ids_.insert(id).second)
        throw Error(ErrorKind::Stream, "duplicate selection id " + std::to_string(id));
    next_id_ = std::max(next_id_, id + 1);
    const double deadline = e.t_ms + kPostSelectionMs;
    pending_.emplace(std::pair{deadline, order_++}, Pending{id, e, deadline});
    return id;
}

std::vector<StreamDecision> StreamRuntime::poll(double now_ms)
{
    std::vector<StreamDecision> out;
    {
        std::lock_guard lock(mu_);
        if (last_t_)
            out = resolve_due_locked(*last_t_);
        const double silence = config_.late_frames * config_.frame_period_ms;
        if (!pending_.empty() && pending_.begin()->first.first + silence <= now_ms) {
            const auto history = ring_.snapshot();
            while (!pending_.empty() && pending_.begin()->first.first + silence <= now_ms) {
                const Pending p = pending_.begin()->second;
                pending_.erase(pending_.begin());
                out.push_back(resolve(p, history, true));
            }
        }
    }
    deliver(out);
    return out;
}

std::vector<StreamDecision> StreamRuntime::flush()
{
    std::vector<StreamDecision> out;
    {
        std::lock_guard lock(mu_);
        if (last_t_)
            out = resolve_due_locked(*last_t_);
        for (const auto& [key, p] : pending_) {
            StreamDecision d;
            d.id = p.id;
            d.selection = p.selection;
            d.deadline_ms = p.deadline_ms;
            d.decision.threshold_used = model_->threshold;
            out.push_back(d);
        }
        pending_.clear();
    }
    deliver(out);
    return out;
}

ReplayResult replay(const Recording& rec, std::shared_ptr<const EpsModel> model, StreamConfig config)
{
    StreamRuntime rt(std::move(model), config);
    std::vector<StreamDecision> decisions;
    auto take = [&](std::vector<StreamDecision>&& ds) {
        for (auto& d : ds)
            decisions.push_back(std::move(d));
    };
    std::size_t e = 0;
    for (const auto& s : rec.samples) {
        while (e < rec.selections.size() && rec.selections[e].t_ms < s.t_ms)
            rt.submit_selection(rec.selections[e++]);
        take(rt.push_sample(s));
    }
    for (; e < rec.selections.size(); ++e)
        rt.submit_selection(rec.selections[e]);
    take(rt.flush());

    // Emission is in deadline order; the log follows the recording's selection order.
    std::sort(decisions.begin(), decisions.end(),
              [](const StreamDecision& a, const StreamDecision& b) { return a.id < b.id; });
    ReplayResult result;
    for (const auto& d : decisions) {
        DecisionRecord r;
        r.method = d.selection.method;
        r.t_ms = d.selection.t_ms;
        r.label = d.selection.label;
        r.verdict = d.decision.verdict;
        r.err = d.decision.reconstruction_error;
        r.threshold = d.decision.threshold_used;
        r.latency_us = d.latency_us;
        result.log.push_back(r);
        if (d.decision.reconstruction_error)
            result.latencies_us.push_back(d.latency_us);
    }
    if (!result.latencies_us.empty()) {
        result.p50_us = percentile(result.latencies_us, 50.0);
        result.p99_us = percentile(result.latencies_us, 99.0);
    }
    return result;
}

}  // namespace eps
