#include "support.hpp"

#include "eps/error.hpp"
#include "eps/recording_io.hpp"

#include <doctest.h>

using namespace eps;

namespace {

ErrorKind parse_error(const std::string& text, std::string* message = nullptr)
{
    try {
        parse_recording(text);
    } catch (const Error& e) {
        if (message)
            *message = e.what();
        return e.kind();
    }
    FAIL("recording parsed");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("simulated recordings round trip exactly")
{
    const auto layout = SceneLayout::standard();
    for (Method m : {Method::DwellTime, Method::Nod}) {
        auto cfg = testing::short_session(m, 4, 2);
        cfg.midas_rate = 0.3;
        const auto rec = recording_from_session(simulate_session(cfg, layout));
        const auto text = serialize_recording(rec);
        const auto back = parse_recording(text);
        CHECK(back == rec);
        CHECK(serialize_recording(back) == text);

        testing::TempDir dir;
        save_recording(rec, dir / "r.jsonl");
        CHECK(load_recording(dir / "r.jsonl") == rec);
    }
}

TEST_CASE("events follow samples with the same timestamp")
{
    Recording rec;
    rec.samples = {{0.0, {0, 0, 1}, std::nullopt}, {10.0, {0, 0, 1}, Vec3{0, 0, 1}}, {20.0, {0, 0, 1}, std::nullopt}};
    rec.selections = {{10.0, Method::DwellTime, 3, Label::Incorrect}, {25.0, Method::DwellTime, 1, std::nullopt}};
    const auto text = serialize_recording(rec);
    const auto first_event = text.find("\"event\"");
    const auto sample10 = text.find("\"t_ms\":10.0");
    REQUIRE(first_event != std::string::npos);
    REQUIRE(sample10 != std::string::npos);
    CHECK(sample10 < first_event);
    CHECK(parse_recording(text) == rec);
}

TEST_CASE("malformed recordings are rejected with line numbers")
{
    std::string msg;
    CHECK(parse_error("{\"t_ms\":0,\"gaze\":[0,0,1]}\nnot json\n", &msg) == ErrorKind::InvalidInput);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(parse_error("{\"gaze\":[0,0,1]}\n") == ErrorKind::InvalidInput);
    CHECK(parse_error("{\"t_ms\":0,\"gaze\":[0,1]}\n") == ErrorKind::InvalidInput);
    CHECK(parse_error("{\"t_ms\":0,\"event\":\"blink\"}\n") == ErrorKind::InvalidInput);
    CHECK(parse_error("{\"t_ms\":0,\"event\":\"selection\",\"method\":\"wink\",\"target_id\":1}\n") ==
          ErrorKind::InvalidInput);
    CHECK(parse_error("[1,2,3]\n") == ErrorKind::InvalidInput);
}

TEST_CASE("decreasing timestamps are rejected")
{
    std::string msg;
    CHECK(parse_error("{\"t_ms\":10,\"gaze\":[0,0,1]}\n{\"t_ms\":5,\"gaze\":[0,0,1]}\n", &msg) ==
          ErrorKind::InvalidInput);
    CHECK(msg.find("line 2") != std::string::npos);
    // Equal timestamps are fine.
    CHECK_NOTHROW(parse_recording("{\"t_ms\":10,\"gaze\":[0,0,1]}\n{\"t_ms\":10,\"gaze\":[0,0,1]}\n"));
}

TEST_CASE("blank lines and CRLF are tolerated")
{
    const auto rec = parse_recording("{\"t_ms\":1,\"gaze\":[0,0,1]}\r\n\n  \n{\"t_ms\":2,\"gaze\":[0,0,1],\"head\":null}\n");
    CHECK(rec.samples.size() == 2);
    CHECK(!rec.samples[1].head);
}

TEST_CASE("decision logs round trip")
{
    DecisionRecord a;
    a.method = Method::GazeAndHead;
    a.t_ms = 1234.5;
    a.label = Label::Incorrect;
    a.verdict = Verdict::Incorrect;
    a.err = 0.1 + 0.2;
    a.threshold = 1.0 / 3.0;
    a.latency_us = 42.0;
    DecisionRecord b;
    b.t_ms = 2000.0;
    b.verdict = Verdict::Unclassifiable;
    b.threshold = 0.25;

    const std::vector<DecisionRecord> log{a, b};
    const auto text = serialize_decision_log(log);
    const auto back = parse_decision_log(text, "s1");
    REQUIRE(back.size() == 2);
    CHECK(back[0].session == "s1");
    CHECK(back[0].method == a.method);
    CHECK(back[0].t_ms == a.t_ms);
    CHECK(back[0].label == a.label);
    CHECK(back[0].verdict == a.verdict);
    CHECK(back[0].err == a.err);
    CHECK(back[0].threshold == a.threshold);
    CHECK(back[0].latency_us == a.latency_us);
    CHECK(!back[1].label);
    CHECK(!back[1].err);
    CHECK(!back[1].latency_us);
    CHECK(serialize_decision_log(back) == text);

    const auto quiet = serialize_decision_log(log, false);
    CHECK(quiet.find("latency_us") == std::string::npos);
    CHECK(text.find("\"err\":null") != std::string::npos);
}

TEST_CASE("atomic writes and missing files")
{
    testing::TempDir dir;
    write_text_atomic(dir / "x.txt", "hello\n");
    CHECK(read_text(dir / "x.txt") == "hello\n");
    write_text_atomic(dir / "x.txt", "again\n");
    CHECK(read_text(dir / "x.txt") == "again\n");
    CHECK(!std::filesystem::exists(dir / "x.txt.tmp"));
    try {
        read_text(dir / "nope");
        FAIL("read a missing file");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}
