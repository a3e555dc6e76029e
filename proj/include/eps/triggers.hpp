#pragma once

#include "eps/gaze_features.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace eps {

// Candidate robot positions in front of the user.
struct SceneLayout {
    std::vector<Vec3> positions;

    // `count` positions in `rows` rows spread over `field_deg` of yaw, rows stacked
    // 16 degrees apart around the horizon.
    static SceneLayout standard(std::size_t count = 18, double field_deg = 180.0, std::size_t rows = 2);

    double min_separation_deg() const;
    // Nearest position within radius_deg of `dir`, or -1.
    int hit(const Vec3& dir, double radius_deg) const;
    // Frontal hemisphere and separation check; throws InvalidInput.
    void validate(double min_separation_deg) const;
};

struct TriggerEvent {
    double t_ms = 0.0;
    int position = -1;
};

struct NodParams {
    double amplitude_threshold_deg = 10.0;
    double max_duration_ms = 800.0;
    double hold_ms = 300.0;
    // The up-stroke completes once pitch is back within this of the pre-nod level.
    double return_tolerance_deg = 1.0;
};

// Online selection detector fed one sample at a time.
class SelectionTrigger {
public:
    virtual ~SelectionTrigger() = default;
    virtual std::optional<TriggerEvent> update(const GazeSample& s) = 0;
    virtual void reset() = 0;
};

// Continuous-presence timer shared by the dwell-style triggers.
class DwellTimer {
public:
    DwellTimer(double dwell_ms, double grace_ms) : dwell_ms_(dwell_ms), grace_ms_(grace_ms) {}
    // `position` is the position satisfying the trigger condition at t_ms, or -1.
    std::optional<TriggerEvent> step(double t_ms, int position);
    void reset() { current_ = -1; }

private:
    double dwell_ms_;
    double grace_ms_;
    int current_ = -1;
    double entered_ms_ = 0.0;
    double last_inside_ms_ = 0.0;
};

// Fires once gaze has stayed in one position's cone for dwell_ms. Leaving the cone
// resets the timer unless the gap is at most grace_ms. After firing, the timer restarts.
class DwellTrigger final : public SelectionTrigger {
public:
    DwellTrigger(SceneLayout layout, double dwell_ms, double radius_deg, double grace_ms = 0.0);
    std::optional<TriggerEvent> update(const GazeSample& s) override;
    void reset() override { timer_.reset(); }

private:
    SceneLayout layout_;
    double radius_deg_;
    DwellTimer timer_;
};

// Dwell on the conjunction: gaze in the position's cone and head within the
// alignment cone of the same position.
class GazeHeadTrigger final : public SelectionTrigger {
public:
    GazeHeadTrigger(SceneLayout layout, double dwell_ms, double radius_deg, double alignment_deg, double grace_ms = 0.0);
    std::optional<TriggerEvent> update(const GazeSample& s) override;
    void reset() override { timer_.reset(); }

private:
    SceneLayout layout_;
    double radius_deg_;
    double alignment_deg_;
    DwellTimer timer_;
};

// Fixation hold on a position followed by a head-pitch dip of at least the
// amplitude threshold that returns within max_duration_ms, gaze staying on the position.
class NodTrigger final : public SelectionTrigger {
public:
    NodTrigger(SceneLayout layout, double radius_deg, NodParams params);
    std::optional<TriggerEvent> update(const GazeSample& s) override;
    void reset() override;

private:
    void rebase(double t_ms, double pitch);

    SceneLayout layout_;
    double radius_deg_;
    NodParams params_;
    int current_ = -1;
    double entered_ms_ = 0.0;
    bool armed_ = false;
    bool dipped_ = false;
    double peak_pitch_ = 0.0;
    double peak_ms_ = 0.0;
    double trough_pitch_ = 0.0;
};

std::vector<TriggerEvent> run_trigger(SelectionTrigger& trigger, std::span<const GazeSample> stream);

std::vector<TriggerEvent> dwell_select(std::span<const GazeSample> stream, const SceneLayout& layout, double dwell_s = 0.4,
                                       double radius_deg = 6.0, double grace_ms = 0.0);
// Throws MethodUnavailable when a sample has no head direction.
std::vector<TriggerEvent> gaze_head_select(std::span<const GazeSample> stream, const SceneLayout& layout,
                                           double dwell_s = 0.3, double radius_deg = 6.0, double alignment_deg = 12.0);
std::vector<TriggerEvent> nod_select(std::span<const GazeSample> stream, const SceneLayout& layout, double radius_deg = 6.0,
                                     const NodParams& params = {});

}  // namespace eps
