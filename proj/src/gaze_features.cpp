#include "eps/gaze_features.hpp"

#include "eps/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eps {

bool is_unit(const Vec3& v, double tol)
{
    return std::abs(norm(v) - 1.0) <= tol;
}

double angular_distance(const Vec3& u, const Vec3& v)
{
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
            throw Error(ErrorKind::InvalidInput, "non-finite gaze vector component");
    }
    if (!is_unit(u) || !is_unit(v))
        throw Error(ErrorKind::InvalidInput, "gaze vectors must be unit length");
    // Rounding can push the dot product of near-parallel unit vectors past 1.
    const double c = std::clamp(dot(u, v), -1.0, 1.0);
    return std::acos(c) * (180.0 / std::numbers::pi);
}

std::array<double, kWindowLength> angular_velocity_series(std::span<const GazeSample> samples)
{
    if (samples.size() != kWindowSamples)
        throw Error(ErrorKind::InvalidInput,
                    "expected " + std::to_string(kWindowSamples) + " samples, got " + std::to_string(samples.size()));
    std::array<double, kWindowLength> out{};
    for (std::size_t j = 0; j < kWindowLength; ++j) {
        const double gap_ms = samples[j + 1].t_ms - samples[j].t_ms;
        if (!(gap_ms > 0.0))
            throw Error(ErrorKind::DegenerateTiming, "non-increasing timestamps at index " + std::to_string(j));
        out[j] = angular_distance(samples[j].gaze, samples[j + 1].gaze) / (gap_ms * 1e-3);
    }
    return out;
}

std::optional<std::size_t> window_end_index(std::span<const GazeSample> recording, double selection_t_ms)
{
    const double cut = selection_t_ms + kPostSelectionMs;
    const auto it = std::lower_bound(recording.begin(), recording.end(), cut,
                                     [](const GazeSample& s, double t) { return s.t_ms < t; });
    if (it == recording.end())
        return std::nullopt;
    const auto end = static_cast<std::size_t>(it - recording.begin());
    if (end + 1 < kWindowSamples)
        return std::nullopt;
    return end;
}

VelocityWindow window_ending_at(std::span<const GazeSample> recording, std::size_t end_index,
                                double selection_t_ms, Method method)
{
    if (end_index >= recording.size() || end_index + 1 < kWindowSamples)
        throw Error(ErrorKind::WindowUnavailable, "not enough samples before the window end");
    VelocityWindow w;
    w.values = angular_velocity_series(recording.subspan(end_index + 1 - kWindowSamples, kWindowSamples));
    w.method = method;
    w.selection_t_ms = selection_t_ms;
    return w;
}

VelocityWindow extract_window(std::span<const GazeSample> recording, double selection_t_ms, Method method)
{
    const auto end = window_end_index(recording, selection_t_ms);
    if (!end)
        throw Error(ErrorKind::WindowUnavailable,
                    "no 37-sample window ending 200 ms after selection at t=" + std::to_string(selection_t_ms));
    return window_ending_at(recording, *end, selection_t_ms, method);
}

}  // namespace eps
