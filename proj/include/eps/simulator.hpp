#pragma once

#include "eps/detector.hpp"
#include "eps/gaze_features.hpp"
#include "eps/saccade.hpp"
#include "eps/triggers.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace eps {

// Invented oculomotor and behavioural constants of the synthetic participant.
struct BehaviourParams {
    double head_time_constant_ms = 120.0;
    double landing_error_deg = 0.8;
    // Distractor inspections last this fraction of the method's nominal trigger time.
    double inspect_fraction_min = 0.30;
    double inspect_fraction_max = 0.55;
    std::size_t max_distractor_visits = 4;
    // Gaze leaves a correctly selected target after this delay (normal, clamped).
    double release_correct_mean_ms = 150.0;
    double release_correct_sd_ms = 20.0;
    double release_correct_min_ms = 120.0;
    double release_correct_max_ms = 190.0;
    // Inspections and post-selection holds end this long before the trigger could
    // complete; covers the slow start of the saccade leaving the position.
    double trigger_margin_ms = 160.0;
    // Gaze leaves a mistakenly selected distractor after this delay (uniform).
    double release_error_min_ms = 0.0;
    double release_error_max_ms = 40.0;
    // Time to notice a cancelled selection.
    double cancel_reaction_ms = 150.0;
    // Scripted nods.
    double nod_delay_min_ms = 60.0;
    double nod_delay_max_ms = 250.0;
    double nod_amplitude_min_deg = 12.0;
    double nod_amplitude_max_deg = 18.0;
    double nod_duration_min_ms = 450.0;
    double nod_duration_max_ms = 700.0;
    // An open fixation that has not triggered by then is abandoned.
    double give_up_ms = 3000.0;
    // Each round opens with the gaze returning straight ahead and resting there this long.
    double round_lead_in_ms = 1000.0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    Method method = Method::DwellTime;
    double sample_rate_hz = 90.0;
    double frame_drop_probability = 0.01;
    double fixation_noise_deg = 0.5;
    // Correlation time of the tracker offset; 0 gives independent jitter per sample.
    double fixation_noise_correlation_ms = 150.0;
    double dwell_s = 0.4;
    double gaze_head_dwell_s = 0.3;
    double gaze_head_alignment_deg = 12.0;
    NodParams nod;
    double target_radius_deg = 6.0;
    double dwell_grace_ms = 0.0;
    double round_duration_s = 30.0;
    int rounds = 10;
    // Probability per distractor visit that gaze lingers long enough to select it.
    double midas_rate = 0.1;
    std::size_t layout_positions = 18;
    double min_separation_deg = 12.0;
    BehaviourParams behaviour;

    void validate() const;
    double sample_period_ms() const { return 1000.0 / sample_rate_hz; }
};

std::unique_ptr<SelectionTrigger> make_trigger(const SimConfig& config, const SceneLayout& layout);

struct NodScript {
    double start_ms = 0.0;
    double duration_ms = 600.0;
    double amplitude_deg = 15.0;
};

// Head pitch offset (deg) of a down-up nod: -A sin(pi (t - start) / duration) inside the script.
double nod_pitch_offset(const NodScript& nod, double t_ms);

struct ScanStep {
    Vec3 direction{0.0, 0.0, 1.0};
    double fixation_ms = 300.0;
    // Nod start is relative to the start of this step's fixation.
    std::optional<NodScript> nod;
};

// Fixation/saccade scanpath sampled at the configured rate. The stream starts
// fixating the first step; later steps are reached with main-sequence saccades.
// Head follows gaze through a first-order lag plus any scripted nods.
std::vector<GazeSample> synth_scanpath(std::span<const ScanStep> plan, const SimConfig& config);

struct SelectionRecord {
    std::size_t id = 0;
    double t_ms = 0.0;
    Method method = Method::DwellTime;
    int target_id = -1;
    Label label = Label::Correct;
    int round = 0;
    double response_time_s = 0.0;
    // Whether the selection took effect (always true without an EPS).
    bool executed = true;
    std::optional<Verdict> verdict;
    std::optional<double> err;
    std::optional<double> threshold;
    double points = 0.0;
};

struct RoundInfo {
    int index = 0;
    double start_ms = 0.0;
    double end_ms = 0.0;
    double points = 0.0;
};

struct ScoreEvent {
    double t_ms = 0.0;
    double delta = 0.0;
    double total = 0.0;
};

struct SimSession {
    SimConfig config;
    SceneLayout layout;
    bool eps_attached = false;
    std::vector<GazeSample> recording;
    std::vector<SelectionRecord> selections;
    std::vector<RoundInfo> rounds;
    std::vector<ScoreEvent> score_trace;

    double total_points() const;
    std::size_t executed_incorrect() const;
    std::size_t labelled(Label label) const;
};

// Decides a selection from the recording so far; must only read samples up to
// the first one at or after selection + 200 ms.
using SelectionJudge = std::function<Decision(std::span<const GazeSample> recording, const SelectionRecord& selection)>;

SelectionJudge model_judge(std::shared_ptr<const EpsModel> model);
// Returns the ground-truth label as verdict; an upper bound for any detector.
SelectionJudge oracle_judge();

struct EpsHook {
    SelectionJudge judge;
    UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen;
};

// Plays `config.rounds` rounds of the search game. With a hook attached, each
// selection is judged once its post-selection window is complete and rejected
// selections are cancelled. Labels never depend on the hook.
SimSession simulate_session(const SimConfig& config, const SceneLayout& layout, const std::optional<EpsHook>& eps = {});

// +20 at t = 0 falling linearly to +5 at t = 10 s and staying there; -21 when incorrect.
double score_selection(double response_time_s, bool is_correct);

// Velocity windows around every selection whose window can be formed.
std::vector<VelocityWindow> session_windows(const SimSession& session);

}  // namespace eps
