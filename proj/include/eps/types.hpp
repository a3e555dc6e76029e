#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace eps {

using Vec3 = std::array<double, 3>;

inline constexpr std::size_t kWindowSamples = 37;
inline constexpr std::size_t kWindowLength = kWindowSamples - 1;
inline constexpr double kPostSelectionMs = 200.0;

enum class Method { DwellTime, GazeAndHead, Nod };
enum class Label { Correct, Incorrect };
enum class Verdict { Correct, Incorrect, Unclassifiable };

std::string_view to_string(Method m);
std::string_view to_string(Label l);
std::string_view to_string(Verdict v);

// Accepts canonical names plus the short CLI aliases ("dwell", "gaze_head", "gazehead").
Method parse_method(std::string_view s);
Label parse_label(std::string_view s);
Verdict parse_verdict(std::string_view s);

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);
Vec3 cross(const Vec3& a, const Vec3& b);
Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);

// Unit direction for yaw (positive to the right) and pitch (positive up), in degrees.
// x right, y up, z forward.
Vec3 direction_from_angles(double yaw_deg, double pitch_deg);
double yaw_of(const Vec3& dir);
double pitch_of(const Vec3& dir);

// Rotate `v` about unit `axis` by `angle_deg` (Rodrigues).
Vec3 rotate(const Vec3& v, const Vec3& axis, double angle_deg);

// Spherical interpolation between unit vectors, fraction in [0,1].
Vec3 slerp(const Vec3& a, const Vec3& b, double fraction);

// splitmix64 mixing step; used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace eps
