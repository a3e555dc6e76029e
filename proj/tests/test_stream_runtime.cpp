#include "support.hpp"

#include "eps/error.hpp"
#include "eps/recording_io.hpp"
#include "eps/stream_runtime.hpp"

#include <doctest.h>

#include <atomic>
#include <thread>

using namespace eps;

namespace {

std::shared_ptr<const EpsModel> shared_model()
{
    static const auto model = std::make_shared<const EpsModel>(testing::small_model());
    return model;
}

// Fixation stream at 90 Hz with a saccade-sized step every 700 ms.
std::vector<GazeSample> synthetic_stream(double until_ms)
{
    std::vector<GazeSample> out;
    for (int k = 0;; ++k) {
        const double t = k * 1000.0 / 90.0;
        if (t > until_ms)
            break;
        const double yaw = 10.0 * std::floor(t / 700.0);
        out.push_back({t, direction_from_angles(yaw, 0.0), direction_from_angles(yaw, 0.0)});
    }
    return out;
}

SelectionEvent selection_at(double t)
{
    SelectionEvent e;
    e.t_ms = t;
    e.method = Method::DwellTime;
    e.target_id = 0;
    return e;
}

}  // namespace

TEST_CASE("ring keeps the newest samples in order")
{
    CHECK_THROWS_AS(SampleRing(10), Error);
    SampleRing ring(64);
    CHECK(!ring.latest());
    for (int i = 0; i < 100; ++i)
        ring.push({static_cast<double>(i), {0, 0, 1}, std::nullopt});
    CHECK(ring.size() == 64);
    CHECK(ring.total_written() == 100);
    CHECK(ring.latest()->t_ms == 99.0);
    const auto snap = ring.snapshot();
    REQUIRE(snap.size() == 64);
    for (std::size_t i = 0; i < snap.size(); ++i)
        CHECK(snap[i].t_ms == static_cast<double>(36 + i));
}

TEST_CASE("a decision is emitted once the deadline is crossed")
{
    StreamRuntime rt(shared_model());
    for (const auto& s : synthetic_stream(990.0))
        CHECK(rt.push_sample(s).empty());
    rt.submit_selection(selection_at(1000.0));
    CHECK(rt.push_sample({1100.0, {0, 0, 1}, GazeSample{}.gaze}).empty());
    CHECK(rt.push_sample({1199.0, {0, 0, 1}, GazeSample{}.gaze}).empty());
    const auto out = rt.push_sample({1201.0, {0, 0, 1}, GazeSample{}.gaze});
    REQUIRE(out.size() == 1);
    CHECK(out[0].deadline_ms == 1200.0);
    CHECK(!out[0].late);
    CHECK(out[0].decision.verdict != Verdict::Unclassifiable);
    CHECK(rt.pending() == 0);
    CHECK(rt.push_sample({1300.0, {0, 0, 1}, GazeSample{}.gaze}).empty());
}

TEST_CASE("several pendings resolve in deadline order")
{
    StreamRuntime rt(shared_model());
    std::vector<std::uint64_t> delivered;
    rt.set_sink([&](const StreamDecision& d) { delivered.push_back(d.id); });
    const auto stream = synthetic_stream(3000.0);
    std::size_t i = 0;
    for (; stream[i].t_ms < 1000.0; ++i)
        rt.push_sample(stream[i]);
    // Submitted out of time order on purpose.
    const auto late_id = rt.submit_selection(selection_at(1050.0));
    const auto early_id = rt.submit_selection(selection_at(1000.0));
    for (; i < stream.size(); ++i)
        rt.push_sample(stream[i]);
    REQUIRE(delivered.size() == 2);
    CHECK(delivered[0] == early_id);
    CHECK(delivered[1] == late_id);
}

TEST_CASE("too little history resolves unclassifiable")
{
    StreamRuntime rt(shared_model());
    rt.submit_selection(selection_at(0.0));
    std::vector<StreamDecision> out;
    for (const auto& s : synthetic_stream(250.0))
        for (auto& d : rt.push_sample(s))
            out.push_back(d);
    REQUIRE(out.size() == 1);
    CHECK(out[0].decision.verdict == Verdict::Unclassifiable);
    CHECK(!out[0].decision.reconstruction_error);
    CHECK(selection_accepted(out[0].decision, UnclassifiablePolicy::FailOpen));
}

TEST_CASE("submission and ordering errors")
{
    StreamRuntime rt(shared_model());
    rt.submit_selection(selection_at(10.0), 7);
    try {
        rt.submit_selection(selection_at(20.0), 7);
        FAIL("duplicate accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Stream);
    }
    auto nod = selection_at(30.0);
    nod.method = Method::Nod;
    try {
        rt.submit_selection(nod);
        FAIL("method mismatch accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Usage);
    }

    rt.push_sample({100.0, {0, 0, 1}, std::nullopt});
    try {
        rt.push_sample({99.0, {0, 0, 1}, std::nullopt});
        FAIL("regression accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Stream);
    }
    CHECK_NOTHROW(rt.push_sample({100.0, {0, 0, 1}, std::nullopt}));

    StreamRuntime empty(nullptr);
    try {
        empty.submit_selection(selection_at(0.0));
        FAIL("submission without a model accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Stream);
    }
}

TEST_CASE("a silent stream falls back to the latest suffix after three frames")
{
    StreamConfig cfg;
    StreamRuntime rt(shared_model(), cfg);
    for (const auto& s : synthetic_stream(1100.0))
        rt.push_sample(s);
    rt.submit_selection(selection_at(1000.0));
    CHECK(rt.poll(1200.0).empty());
    CHECK(rt.poll(1200.0 + 2.0 * cfg.frame_period_ms).empty());
    const auto out = rt.poll(1200.0 + 3.0 * cfg.frame_period_ms);
    REQUIRE(out.size() == 1);
    CHECK(out[0].late);
    CHECK(out[0].decision.reconstruction_error);
    CHECK(rt.pending() == 0);

    SUBCASE("with fewer than 37 samples it is unclassifiable")
    {
        StreamRuntime sparse(shared_model(), cfg);
        for (const auto& s : synthetic_stream(200.0))
            sparse.push_sample(s);
        sparse.submit_selection(selection_at(150.0));
        const auto d = sparse.poll(1000.0);
        REQUIRE(d.size() == 1);
        CHECK(d[0].decision.verdict == Verdict::Unclassifiable);
    }
}

TEST_CASE("streaming equals offline detection and replays are reproducible")
{
    const auto layout = SceneLayout::standard();
    const auto model = shared_model();
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto cfg = testing::short_session(Method::DwellTime, 900 + seed, 2);
        cfg.midas_rate = 0.3;
        const auto rec = recording_from_session(simulate_session(cfg, layout));
        const auto result = replay(rec, model);
        REQUIRE(result.log.size() == rec.selections.size());
        for (std::size_t i = 0; i < rec.selections.size(); ++i) {
            const auto offline = detect(*model, rec.samples, rec.selections[i].t_ms, rec.selections[i].method);
            CHECK(result.log[i].t_ms == rec.selections[i].t_ms);
            CHECK(result.log[i].verdict == offline.verdict);
            CHECK(result.log[i].err == offline.reconstruction_error);
            CHECK(result.log[i].threshold == offline.threshold_used);
        }
        const auto again = replay(rec, model);
        CHECK(serialize_decision_log(again.log, false) == serialize_decision_log(result.log, false));
        CHECK(result.p99_us >= result.p50_us);
    }
}

TEST_CASE("a small ring still resolves every window")
{
    const auto layout = SceneLayout::standard();
    const auto model = shared_model();
    const auto rec = recording_from_session(simulate_session(testing::short_session(Method::DwellTime, 77, 2), layout));
    StreamConfig small;
    small.ring_capacity = 64;
    const auto a = replay(rec, model, small);
    const auto b = replay(rec, model);
    CHECK(serialize_decision_log(a.log, false) == serialize_decision_log(b.log, false));
}

TEST_CASE("producer and consumer on separate threads")
{
    const auto layout = SceneLayout::standard();
    const auto model = shared_model();
    const auto rec = recording_from_session(simulate_session(testing::short_session(Method::DwellTime, 31, 2), layout));
    StreamRuntime rt(model);
    std::atomic<std::size_t> delivered{0};
    rt.set_sink([&](const StreamDecision&) { ++delivered; });
    std::thread producer([&] {
        for (const auto& s : rec.samples)
            rt.push_sample(s);
    });
    for (const auto& sel : rec.selections)
        rt.submit_selection(sel);
    producer.join();
    rt.flush();
    // Each selection is resolved exactly once whichever thread got there first.
    CHECK(delivered.load() == rec.selections.size());
    CHECK(rt.pending() == 0);
}
