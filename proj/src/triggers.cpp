#include "eps/triggers.hpp"

#include "eps/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace eps {

namespace {

constexpr double kTimeTol = 1e-6;

double angle_deg(const Vec3& a, const Vec3& b)
{
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0)) * (180.0 / std::numbers::pi);
}

const Vec3& require_head(const GazeSample& s)
{
    if (!s.head)
        throw Error(ErrorKind::MethodUnavailable, "sample at t=" + std::to_string(s.t_ms) + " has no head direction");
    return *s.head;
}

}  // namespace

SceneLayout SceneLayout::standard(std::size_t count, double field_deg, std::size_t rows)
{
    if (count == 0 || rows == 0)
        throw Error(ErrorKind::InvalidInput, "layout needs at least one position and row");
    SceneLayout layout;
    const std::size_t per_row = (count + rows - 1) / rows;
    // Keep positions off the edge of the field so a target cone never crosses 90 degrees.
    const double span = field_deg - 20.0;
    const double step = per_row > 1 ? span / static_cast<double>(per_row - 1) : 0.0;
    const double row_gap = 16.0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t row = i / per_row;
        const std::size_t col = i % per_row;
        const double yaw = -span / 2.0 + step * static_cast<double>(col);
        const double pitch = (static_cast<double>(row) - static_cast<double>(rows - 1) / 2.0) * -row_gap;
        layout.positions.push_back(direction_from_angles(yaw, pitch));
    }
    return layout;
}

double SceneLayout::min_separation_deg() const
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j)
            best = std::min(best, angle_deg(positions[i], positions[j]));
    return best;
}

int SceneLayout::hit(const Vec3& dir, double radius_deg) const
{
    int best = -1;
    double best_angle = radius_deg;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double a = angle_deg(dir, positions[i]);
        if (a <= best_angle) {
            best_angle = a;
            best = static_cast<int>(i);
        }
    }
    return best;
}

void SceneLayout::validate(double min_separation) const
{
    if (positions.empty())
        throw Error(ErrorKind::InvalidInput, "layout has no positions");
    for (const auto& p : positions) {
        if (!is_unit(p))
            throw Error(ErrorKind::InvalidInput, "layout positions must be unit vectors");
        if (!(p[2] > 0.0))
            throw Error(ErrorKind::InvalidInput, "layout position outside the frontal hemisphere");
    }
    if (positions.size() > 1 && min_separation_deg() < min_separation)
        throw Error(ErrorKind::InvalidInput, "layout positions closer than " + std::to_string(min_separation) + " deg");
}

std::optional<TriggerEvent> DwellTimer::step(double t_ms, int position)
{
    if (position >= 0 && position == current_) {
        last_inside_ms_ = t_ms;
        if (t_ms - entered_ms_ >= dwell_ms_ - kTimeTol) {
            entered_ms_ = t_ms;
            return TriggerEvent{t_ms, position};
        }
        return std::nullopt;
    }
    if (position < 0 && current_ >= 0 && t_ms - last_inside_ms_ <= grace_ms_ + kTimeTol && grace_ms_ > 0.0)
        return std::nullopt;
    current_ = position;
    entered_ms_ = t_ms;
    last_inside_ms_ = t_ms;
    return std::nullopt;
}

DwellTrigger::DwellTrigger(SceneLayout layout, double dwell_ms, double radius_deg, double grace_ms)
    : layout_(std::move(layout)), radius_deg_(radius_deg), timer_(dwell_ms, grace_ms)
{
}

std::optional<TriggerEvent> DwellTrigger::update(const GazeSample& s)
{
    return timer_.step(s.t_ms, layout_.hit(s.gaze, radius_deg_));
}

GazeHeadTrigger::GazeHeadTrigger(SceneLayout layout, double dwell_ms, double radius_deg, double alignment_deg,
                                 double grace_ms)
    : layout_(std::move(layout)), radius_deg_(radius_deg), alignment_deg_(alignment_deg), timer_(dwell_ms, grace_ms)
{
}

std::optional<TriggerEvent> GazeHeadTrigger::update(const GazeSample& s)
{
    const Vec3& head = require_head(s);
    int pos = layout_.hit(s.gaze, radius_deg_);
    if (pos >= 0 && angle_deg(head, layout_.positions[static_cast<std::size_t>(pos)]) > alignment_deg_)
        pos = -1;
    return timer_.step(s.t_ms, pos);
}

NodTrigger::NodTrigger(SceneLayout layout, double radius_deg, NodParams params)
    : layout_(std::move(layout)), radius_deg_(radius_deg), params_(params)
{
}

void NodTrigger::reset()
{
    current_ = -1;
    armed_ = false;
    dipped_ = false;
}

void NodTrigger::rebase(double t_ms, double pitch)
{
    peak_pitch_ = pitch;
    peak_ms_ = t_ms;
    trough_pitch_ = pitch;
    dipped_ = false;
}

std::optional<TriggerEvent> NodTrigger::update(const GazeSample& s)
{
    const double pitch = pitch_of(require_head(s));
    const int pos = layout_.hit(s.gaze, radius_deg_);
    if (pos != current_) {
        current_ = pos;
        entered_ms_ = s.t_ms;
        armed_ = false;
        dipped_ = false;
    }
    if (current_ < 0)
        return std::nullopt;
    if (!armed_) {
        if (s.t_ms - entered_ms_ >= params_.hold_ms - kTimeTol) {
            armed_ = true;
            rebase(s.t_ms, pitch);
        }
        return std::nullopt;
    }
    if (dipped_ && pitch >= peak_pitch_ - params_.return_tolerance_deg) {
        if (s.t_ms - peak_ms_ <= params_.max_duration_ms + kTimeTol) {
            // A further selection needs a fresh hold.
            entered_ms_ = s.t_ms;
            armed_ = false;
            dipped_ = false;
            return TriggerEvent{s.t_ms, current_};
        }
        rebase(s.t_ms, pitch);
        return std::nullopt;
    }
    if (!dipped_ && pitch > peak_pitch_) {
        rebase(s.t_ms, pitch);
        return std::nullopt;
    }
    trough_pitch_ = std::min(trough_pitch_, pitch);
    if (peak_pitch_ - trough_pitch_ >= params_.amplitude_threshold_deg)
        dipped_ = true;
    if (s.t_ms - peak_ms_ > params_.max_duration_ms + kTimeTol)
        rebase(s.t_ms, pitch);
    return std::nullopt;
}

std::vector<TriggerEvent> run_trigger(SelectionTrigger& trigger, std::span<const GazeSample> stream)
{
    std::vector<TriggerEvent> out;
    for (const auto& s : stream)
        if (auto e = trigger.update(s))
            out.push_back(*e);
    return out;
}

std::vector<TriggerEvent> dwell_select(std::span<const GazeSample> stream, const SceneLayout& layout, double dwell_s,
                                       double radius_deg, double grace_ms)
{
    DwellTrigger trig(layout, dwell_s * 1000.0, radius_deg, grace_ms);
    return run_trigger(trig, stream);
}

std::vector<TriggerEvent> gaze_head_select(std::span<const GazeSample> stream, const SceneLayout& layout, double dwell_s,
                                           double radius_deg, double alignment_deg)
{
    GazeHeadTrigger trig(layout, dwell_s * 1000.0, radius_deg, alignment_deg);
    return run_trigger(trig, stream);
}

std::vector<TriggerEvent> nod_select(std::span<const GazeSample> stream, const SceneLayout& layout, double radius_deg,
                                     const NodParams& params)
{
    NodTrigger trig(layout, radius_deg, params);
    return run_trigger(trig, stream);
}

}  // namespace eps
