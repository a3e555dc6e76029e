#include "eps/recording_io.hpp"

#include "eps/error.hpp"
#include "eps/simulator.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace eps {

using Json = nlohmann::ordered_json;

namespace {

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const Json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorKind::InvalidInput, "expected a 3-element array");
    Vec3 v{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number())
            throw Error(ErrorKind::InvalidInput, "vector component is not a number");
        v[i] = j[i].get<double>();
    }
    return v;
}

Json sample_json(const GazeSample& s)
{
    Json j;
    j["t_ms"] = s.t_ms;
    j["gaze"] = vec_json(s.gaze);
    if (s.head)
        j["head"] = vec_json(*s.head);
    return j;
}

Json event_json(const SelectionEvent& e)
{
    Json j;
    j["t_ms"] = e.t_ms;
    j["event"] = "selection";
    j["method"] = std::string(to_string(e.method));
    j["target_id"] = e.target_id;
    if (e.label)
        j["label"] = std::string(to_string(*e.label));
    return j;
}

double number_field(const Json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_number())
        throw Error(ErrorKind::InvalidInput, std::string("missing numeric field '") + key + "'");
    return it->get<double>();
}

std::string string_field(const Json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw Error(ErrorKind::InvalidInput, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

// parse_method reports a usage error; inside a file it is bad input.
Method method_field(const Json& j)
{
    try {
        return parse_method(string_field(j, "method"));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Usage)
            throw;
        throw Error(ErrorKind::InvalidInput, e.what());
    }
}

template <class F>
void for_each_line(std::string_view text, F&& f)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos)
            continue;
        try {
            f(Json::parse(line));
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

bool operator==(const GazeSample& a, const GazeSample& b)
{
    return a.t_ms == b.t_ms && a.gaze == b.gaze && a.head == b.head;
}

bool operator==(const Recording& a, const Recording& b)
{
    return a.samples == b.samples && a.selections == b.selections;
}

std::string serialize_recording(const Recording& rec)
{
    std::string out;
    std::size_t e = 0;
    for (const auto& s : rec.samples) {
        while (e < rec.selections.size() && rec.selections[e].t_ms < s.t_ms)
            out += event_json(rec.selections[e++]).dump() + '\n';
        out += sample_json(s).dump() + '\n';
    }
    for (; e < rec.selections.size(); ++e)
        out += event_json(rec.selections[e]).dump() + '\n';
    return out;
}

Recording parse_recording(std::string_view text)
{
    Recording rec;
    double last_t = -INFINITY;
    for_each_line(text, [&](const Json& j) {
        if (!j.is_object())
            throw Error(ErrorKind::InvalidInput, "line is not a JSON object");
        const double t = number_field(j, "t_ms");
        if (!std::isfinite(t))
            throw Error(ErrorKind::InvalidInput, "non-finite timestamp");
        if (t < last_t)
            throw Error(ErrorKind::InvalidInput, "timestamps decrease");
        last_t = t;
        if (j.contains("event")) {
            if (string_field(j, "event") != "selection")
                throw Error(ErrorKind::InvalidInput, "unknown event type");
            SelectionEvent e;
            e.t_ms = t;
            e.method = method_field(j);
            e.target_id = static_cast<int>(number_field(j, "target_id"));
            if (j.contains("label"))
                e.label = parse_label(string_field(j, "label"));
            rec.selections.push_back(e);
            return;
        }
        GazeSample s;
        s.t_ms = t;
        if (!j.contains("gaze"))
            throw Error(ErrorKind::InvalidInput, "sample without gaze");
        s.gaze = vec_from(j["gaze"]);
        if (j.contains("head") && !j["head"].is_null())
            s.head = vec_from(j["head"]);
        rec.samples.push_back(s);
    });
    return rec;
}

Recording load_recording(const std::filesystem::path& path)
{
    try {
        return parse_recording(read_text(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io)
            throw;
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void save_recording(const Recording& rec, const std::filesystem::path& path)
{
    write_text_atomic(path, serialize_recording(rec));
}

Recording recording_from_session(const SimSession& session)
{
    Recording rec;
    rec.samples = session.recording;
    for (const auto& s : session.selections)
        rec.selections.push_back({s.t_ms, s.method, s.target_id, s.label});
    return rec;
}

std::string serialize_decision(const DecisionRecord& d, bool include_latency)
{
    Json j;
    j["t_ms"] = d.t_ms;
    j["method"] = std::string(to_string(d.method));
    j["label"] = d.label ? Json(std::string(to_string(*d.label))) : Json(nullptr);
    j["verdict"] = std::string(to_string(d.verdict));
    j["err"] = d.err ? Json(*d.err) : Json(nullptr);
    j["threshold"] = d.threshold;
    if (include_latency && d.latency_us)
        j["latency_us"] = *d.latency_us;
    return j.dump();
}

std::string serialize_decision_log(std::span<const DecisionRecord> log, bool include_latency)
{
    std::string out;
    for (const auto& d : log)
        out += serialize_decision(d, include_latency) + '\n';
    return out;
}

std::vector<DecisionRecord> parse_decision_log(std::string_view text, const std::string& session)
{
    std::vector<DecisionRecord> out;
    for_each_line(text, [&](const Json& j) {
        DecisionRecord d;
        d.session = session;
        d.t_ms = number_field(j, "t_ms");
        d.method = method_field(j);
        if (j.contains("label") && !j["label"].is_null())
            d.label = parse_label(string_field(j, "label"));
        d.verdict = parse_verdict(string_field(j, "verdict"));
        if (j.contains("err") && !j["err"].is_null())
            d.err = number_field(j, "err");
        d.threshold = number_field(j, "threshold");
        if (j.contains("latency_us"))
            d.latency_us = number_field(j, "latency_us");
        out.push_back(d);
    });
    return out;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorKind::Io, "write failed for " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

}  // namespace eps
