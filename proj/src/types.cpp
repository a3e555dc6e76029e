#include "eps/types.hpp"

#include "eps/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eps {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::DwellTime: return "dwell_time";
    case Method::GazeAndHead: return "gaze_and_head";
    case Method::Nod: return "nod";
    }
    return "?";
}

std::string_view to_string(Label l)
{
    return l == Label::Correct ? "correct" : "incorrect";
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::Incorrect: return "incorrect";
    case Verdict::Unclassifiable: return "unclassifiable";
    }
    return "?";
}

Method parse_method(std::string_view s)
{
    if (s == "dwell_time" || s == "dwell" || s == "dwelltime")
        return Method::DwellTime;
    if (s == "gaze_and_head" || s == "gaze_head" || s == "gazehead" || s == "gaze+head")
        return Method::GazeAndHead;
    if (s == "nod")
        return Method::Nod;
    throw Error(ErrorKind::Usage, "unknown method '" + std::string(s) + "'");
}

Label parse_label(std::string_view s)
{
    if (s == "correct")
        return Label::Correct;
    if (s == "incorrect")
        return Label::Incorrect;
    throw Error(ErrorKind::InvalidInput, "unknown label '" + std::string(s) + "'");
}

Verdict parse_verdict(std::string_view s)
{
    if (s == "correct")
        return Verdict::Correct;
    if (s == "incorrect")
        return Verdict::Incorrect;
    if (s == "unclassifiable")
        return Verdict::Unclassifiable;
    throw Error(ErrorKind::InvalidInput, "unknown verdict '" + std::string(s) + "'");
}

double dot(const Vec3& a, const Vec3& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm(const Vec3& a)
{
    return std::sqrt(dot(a, a));
}

Vec3 normalized(const Vec3& a)
{
    const double n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 operator+(const Vec3& a, const Vec3& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

Vec3 operator-(const Vec3& a, const Vec3& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Vec3 operator*(double s, const Vec3& a)
{
    return {s * a[0], s * a[1], s * a[2]};
}

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

Vec3 direction_from_angles(double yaw_deg, double pitch_deg)
{
    const double y = yaw_deg * kDeg;
    const double p = pitch_deg * kDeg;
    return {std::cos(p) * std::sin(y), std::sin(p), std::cos(p) * std::cos(y)};
}

double yaw_of(const Vec3& dir)
{
    return std::atan2(dir[0], dir[2]) / kDeg;
}

double pitch_of(const Vec3& dir)
{
    return std::asin(std::clamp(dir[1], -1.0, 1.0)) / kDeg;
}

Vec3 rotate(const Vec3& v, const Vec3& axis, double angle_deg)
{
    const double a = angle_deg * kDeg;
    const double c = std::cos(a);
    const double s = std::sin(a);
    const Vec3 kxv = cross(axis, v);
    const double kv = dot(axis, v);
    return {v[0] * c + kxv[0] * s + axis[0] * kv * (1 - c),
            v[1] * c + kxv[1] * s + axis[1] * kv * (1 - c),
            v[2] * c + kxv[2] * s + axis[2] * kv * (1 - c)};
}

Vec3 slerp(const Vec3& a, const Vec3& b, double fraction)
{
    const double c = std::clamp(dot(a, b), -1.0, 1.0);
    const double omega = std::acos(c);
    if (omega < 1e-12)
        return a;
    const double s = std::sin(omega);
    const double wa = std::sin((1 - fraction) * omega) / s;
    const double wb = std::sin(fraction * omega) / s;
    return normalized(wa * a + wb * b);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace eps
