#pragma once

#include "eps/types.hpp"

#include <array>
#include <optional>
#include <span>

namespace eps {

struct GazeSample {
    double t_ms = 0.0;
    Vec3 gaze{0.0, 0.0, 1.0};
    std::optional<Vec3> head;
};

// Angular velocities (deg/s) of the 37 samples ending at the post-selection cut.
struct VelocityWindow {
    std::array<double, kWindowLength> values{};
    Method method = Method::DwellTime;
    std::optional<Label> label;
    double selection_t_ms = 0.0;
};

// Angle in degrees between two unit vectors. Throws InvalidInput on non-finite
// components or non-unit inputs.
double angular_distance(const Vec3& u, const Vec3& v);

// v_j = a_j / ((t_{j+1} - t_j) * 1e-3) over exactly 37 samples.
std::array<double, kWindowLength> angular_velocity_series(std::span<const GazeSample> samples);

// Index of the last sample of the window for `selection_t_ms`: the first sample at
// or after selection + 200 ms. Empty when the recording does not reach that far
// or when fewer than 36 samples precede it.
std::optional<std::size_t> window_end_index(std::span<const GazeSample> recording, double selection_t_ms);

// Throws WindowUnavailable when the window cannot be formed.
VelocityWindow extract_window(std::span<const GazeSample> recording, double selection_t_ms,
                              Method method = Method::DwellTime);

// Same window, without the cut search: the 37 samples ending at `end_index`.
VelocityWindow window_ending_at(std::span<const GazeSample> recording, std::size_t end_index,
                                double selection_t_ms, Method method);

bool is_unit(const Vec3& v, double tol = 1e-6);

}  // namespace eps
