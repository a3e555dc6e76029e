#include "eps/simulator.hpp"

#include "eps/error.hpp"
#include "eps/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

namespace eps {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kOpen = std::numeric_limits<double>::infinity();
constexpr double kTailMs = 250.0;
const Vec3 kHome{0.0, 0.0, 1.0};

double angle_between(const Vec3& a, const Vec3& b)
{
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0)) / kDegToRad;
}

// Rotate `dir` by small angles (deg) along two tangent axes.
Vec3 offset(const Vec3& dir, double a_deg, double b_deg)
{
    const Vec3 ref = std::abs(dir[1]) < 0.9 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
    const Vec3 e1 = normalized(cross(ref, dir));
    const Vec3 e2 = cross(dir, e1);
    return normalized(dir + std::tan(a_deg * kDegToRad) * e1 + std::tan(b_deg * kDegToRad) * e2);
}

// Offset `dir` by independent Gaussian angles (sd = rms / sqrt 2 per axis) in its tangent plane.
Vec3 perturb(const Vec3& dir, double rms_deg, Rng& rng)
{
    if (rms_deg <= 0.0)
        return dir;
    const double sd = rms_deg / std::numbers::sqrt2;
    const double a = rng.normal(0.0, sd);
    const double b = rng.normal(0.0, sd);
    return offset(dir, a, b);
}

// Tracker error: per-axis AR(1) offsets with the configured stationary RMS, plus frame drops.
class TrackerNoise {
public:
    TrackerNoise(const SimConfig& c, std::uint64_t seed)
        : rms_(c.fixation_noise_deg),
          rho_(c.fixation_noise_correlation_ms > 0.0 ? std::exp(-c.sample_period_ms() / c.fixation_noise_correlation_ms)
                                                     : 0.0),
          drop_(c.frame_drop_probability),
          rng_(seed)
    {
        restart(seed);
    }

    // Fresh stream with the offsets drawn from the stationary distribution.
    void restart(std::uint64_t seed)
    {
        rng_ = Rng(seed);
        const double sd = rms_ / std::numbers::sqrt2;
        a_ = rng_.normal(0.0, sd);
        b_ = rng_.normal(0.0, sd);
    }

    Vec3 observe(const Vec3& dir)
    {
        if (rms_ <= 0.0)
            return dir;
        const double innovation = rms_ / std::numbers::sqrt2 * std::sqrt(1.0 - rho_ * rho_);
        a_ = rho_ * a_ + rng_.normal(0.0, innovation);
        b_ = rho_ * b_ + rng_.normal(0.0, innovation);
        return offset(dir, a_, b_);
    }

    bool dropped() { return rng_.bernoulli(drop_); }

private:
    double rms_;
    double rho_;
    double drop_;
    Rng rng_;
    double a_ = 0.0;
    double b_ = 0.0;
};

Vec3 with_pitch_offset(const Vec3& dir, double offset_deg)
{
    if (offset_deg == 0.0)
        return dir;
    return direction_from_angles(yaw_of(dir), pitch_of(dir) + offset_deg);
}

// First-order lag of the head towards the gaze direction.
class HeadModel {
public:
    explicit HeadModel(double time_constant_ms) : tau_ms_(time_constant_ms) {}

    Vec3 update(const Vec3& gaze, double dt_ms)
    {
        if (!initialised_) {
            base_ = gaze;
            initialised_ = true;
            return base_;
        }
        const double alpha = tau_ms_ > 0.0 ? 1.0 - std::exp(-dt_ms / tau_ms_) : 1.0;
        base_ = slerp(base_, gaze, alpha);
        return base_;
    }

    void reset(const Vec3& dir)
    {
        base_ = dir;
        initialised_ = true;
    }

private:
    double tau_ms_;
    bool initialised_ = false;
    Vec3 base_{0.0, 0.0, 1.0};
};

double nominal_trigger_ms(const SimConfig& c)
{
    switch (c.method) {
    case Method::DwellTime: return c.dwell_s * 1000.0;
    case Method::GazeAndHead: return c.gaze_head_dwell_s * 1000.0;
    case Method::Nod: return c.nod.hold_ms + 300.0;
    }
    return c.dwell_s * 1000.0;
}

enum class VisitKind { Home, Inspect, Linger, Target };

struct Visit {
    int position = -1;
    VisitKind kind = VisitKind::Inspect;
};

struct PendingJudgement {
    std::size_t selection = 0;
    double deadline_ms = 0.0;
};

class SessionRunner {
public:
    SessionRunner(const SimConfig& config, const SceneLayout& layout, const std::optional<EpsHook>& eps)
        : config_(config),
          layout_(layout),
          eps_(eps),
          noise_(config, mix_seed(config.seed, 10)),
          rng_(mix_seed(config.seed, 11)),
          trigger_(make_trigger(config, layout)),
          head_(config.behaviour.head_time_constant_ms)
    {
    }

    SimSession run()
    {
        SimSession session;
        session.config = config_;
        session.layout = layout_;
        session.eps_attached = eps_.has_value();

        const double round_ms = config_.round_duration_s * 1000.0;
        const double total_ms = round_ms * config_.rounds;
        const double period = config_.sample_period_ms();

        session.rounds.push_back({0, 0.0, std::min(round_ms, total_ms), 0.0});
        new_target(0.0);
        fix_dir_ = kHome;
        go_home(0.0);

        for (std::uint64_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * 1000.0 / config_.sample_rate_hz;
            const bool in_game = t < total_ms;
            if (!in_game && pending_.empty() && t >= total_ms + kTailMs)
                break;
            if (in_game && t >= round_ms * (round_ + 1))
                start_round(session, t, round_ms);

            advance_agent(t);
            const Vec3 gaze = clean_gaze(t);
            const Vec3 head = with_pitch_offset(head_.update(gaze, period), nod_offset(t));
            const Vec3 observed = noise_.observe(gaze);
            if (noise_.dropped())
                continue;

            session.recording.push_back(GazeSample{t, observed, head});
            if (auto ev = trigger_->update(session.recording.back()); ev && in_game)
                on_trigger(session, *ev);
            resolve_pending(session, t);
        }
        return session;
    }

private:
    // -- agent ----------------------------------------------------------

    Vec3 clean_gaze(double t) const
    {
        if (!saccading_)
            return fix_dir_;
        const double covered = profile_.progress_at(t - saccade_start_ms_);
        return slerp(saccade_from_, fix_dir_, profile_.amplitude_deg > 0 ? covered / profile_.amplitude_deg : 1.0);
    }

    double nod_offset(double t) const
    {
        if (saccading_ || !nod_)
            return 0.0;
        return nod_pitch_offset(*nod_, t);
    }

    void advance_agent(double t)
    {
        for (;;) {
            if (saccading_) {
                const double end = saccade_start_ms_ + profile_.duration_ms;
                if (t < end) {
                    note_entry(t);
                    return;
                }
                begin_fixation(end);
                continue;
            }
            if (release_ms_ == kOpen && t - fix_start_ms_ >= config_.behaviour.give_up_ms)
                release_ms_ = fix_start_ms_ + config_.behaviour.give_up_ms;
            if (t < release_ms_)
                return;
            start_next_visit(release_ms_);
        }
    }

    // First tick at which the moving gaze is within the trigger radius of where it is heading.
    void note_entry(double t)
    {
        if (visit_.kind == VisitKind::Home)
            return;
        if (!entered_ms_ && angle_between(clean_gaze(t), layout_.positions[static_cast<std::size_t>(visit_.position)]) <=
                                config_.target_radius_deg)
            entered_ms_ = t;
    }

    void start_next_visit(double t0)
    {
        if (visit_.kind == VisitKind::Home && !saccading_)
            head_.reset(fix_dir_);
        if (plan_.empty())
            plan_search();
        visit_ = plan_.front();
        plan_.pop_front();
        // Landing on the target is drawn once per target, so a second look lands in the same spot.
        Rng target_landing(landing_seed_);
        Rng& landing = visit_.kind == VisitKind::Target ? target_landing : rng_;
        saccade_to(t0, perturb(layout_.positions[static_cast<std::size_t>(visit_.position)],
                               config_.behaviour.landing_error_deg, landing));
    }

    void saccade_to(double t0, const Vec3& dir)
    {
        nod_.reset();
        entered_ms_.reset();
        saccade_from_ = clean_gaze(t0);
        fix_dir_ = dir;
        profile_ = SaccadeProfile::for_amplitude(angle_between(saccade_from_, fix_dir_));
        saccade_start_ms_ = t0;
        saccading_ = true;
        if (profile_.duration_ms <= 0.0)
            begin_fixation(t0);
    }

    // New scene: abandon the current visit, look straight ahead and orient before searching.
    void go_home(double t)
    {
        plan_.clear();
        visit_ = {-1, VisitKind::Home};
        release_ms_ = t + config_.behaviour.round_lead_in_ms;
        saccade_to(t, kHome);
    }

    void begin_fixation(double t0)
    {
        const auto& b = config_.behaviour;
        saccading_ = false;
        fix_start_ms_ = t0;
        if (visit_.kind == VisitKind::Home)
            return;
        if (!entered_ms_)
            entered_ms_ = t0;
        if (visit_.kind == VisitKind::Inspect) {
            const double nominal = nominal_trigger_ms(config_);
            release_ms_ = std::min(t0 + nominal * rng_.uniform(b.inspect_fraction_min, b.inspect_fraction_max),
                                   *entered_ms_ + nominal - b.trigger_margin_ms);
            release_ms_ = std::max(release_ms_, t0);
            return;
        }
        release_ms_ = kOpen;
        if (config_.method == Method::Nod)
            schedule_nod(t0 + config_.nod.hold_ms);
    }

    void schedule_nod(double earliest_ms)
    {
        const auto& b = config_.behaviour;
        NodScript nod;
        nod.start_ms = earliest_ms + rng_.uniform(b.nod_delay_min_ms, b.nod_delay_max_ms);
        nod.duration_ms = rng_.uniform(b.nod_duration_min_ms, b.nod_duration_max_ms);
        nod.amplitude_deg = rng_.uniform(b.nod_amplitude_min_deg, b.nod_amplitude_max_deg);
        nod_ = nod;
    }

    int random_position_except(int a, int b)
    {
        const auto n = layout_.positions.size();
        if (n < 3)
            return a >= 0 ? a : 0;
        for (;;) {
            const int p = static_cast<int>(rng_.index(n));
            if (p != a && p != b)
                return p;
        }
    }

    void plan_search()
    {
        std::vector<int> candidates;
        for (int p = 0; p < static_cast<int>(layout_.positions.size()); ++p)
            if (p != target_ && p != visit_.position)
                candidates.push_back(p);
        rng_.shuffle(candidates);
        const std::size_t visits =
            std::min(candidates.size(), rng_.index(config_.behaviour.max_distractor_visits + 1));
        for (std::size_t i = 0; i < visits; ++i) {
            const VisitKind kind = rng_.bernoulli(config_.midas_rate) ? VisitKind::Linger : VisitKind::Inspect;
            plan_.push_back({candidates[i], kind});
        }
        plan_.push_back({target_, VisitKind::Target});
    }

    // -- game -----------------------------------------------------------

    // Everything random from here until the next target is keyed by (round, target), so a
    // run whose EPS cancelled a selection replays the same later searches, only shifted in time.
    void reseed(std::uint64_t stream)
    {
        const std::uint64_t key = mix_seed(mix_seed(config_.seed, static_cast<std::uint64_t>(round_)), targets_in_round_);
        rng_ = Rng(mix_seed(mix_seed(key, 11), stream));
        if (stream == 0) {
            noise_.restart(mix_seed(key, 10));
            landing_seed_ = mix_seed(key, 12);
        }
    }

    void new_target(double t)
    {
        reseed(0);
        ++targets_in_round_;
        const int previous = target_;
        const auto n = static_cast<int>(layout_.positions.size());
        int next = static_cast<int>(rng_.index(static_cast<std::size_t>(n)));
        if (n > 1)
            while (next == previous)
                next = static_cast<int>(rng_.index(static_cast<std::size_t>(n)));
        target_ = next;
        target_shown_ms_ = t;
    }

    void start_round(SimSession& session, double t, double round_ms)
    {
        ++round_;
        targets_in_round_ = 0;
        session.rounds.back().end_ms = t;
        session.rounds.push_back({round_, t, std::min(t + round_ms, round_ms * config_.rounds), 0.0});
        new_target(t);
        // The scene changes: partial dwells and nods do not carry over.
        trigger_->reset();
        go_home(t);
    }

    void on_trigger(SimSession& session, const TriggerEvent& ev)
    {
        const auto& b = config_.behaviour;
        SelectionRecord rec;
        rec.id = session.selections.size();
        rec.t_ms = ev.t_ms;
        rec.method = config_.method;
        rec.target_id = ev.position;
        rec.label = ev.position == target_ ? Label::Correct : Label::Incorrect;
        rec.round = round_;
        rec.response_time_s = (ev.t_ms - target_shown_ms_) / 1000.0;

        if (!saccading_ && visit_.position == ev.position) {
            nod_.reset();
            if (rec.label == Label::Correct) {
                reseed(1);
                const double hold = std::clamp(rng_.normal(b.release_correct_mean_ms, b.release_correct_sd_ms),
                                               b.release_correct_min_ms, b.release_correct_max_ms);
                release_ms_ = ev.t_ms + std::min(hold, nominal_trigger_ms(config_) - b.trigger_margin_ms);
                plan_.clear();
                plan_.push_back({random_position_except(target_, ev.position), VisitKind::Inspect});
            } else {
                release_ms_ = ev.t_ms + rng_.uniform(b.release_error_min_ms, b.release_error_max_ms);
            }
        }

        // Feedback lands once the post-selection window has passed, with or without an EPS,
        // so the two arms of a paired comparison differ only in what the EPS rejects.
        if (eps_)
            rec.executed = false;
        session.selections.push_back(rec);
        pending_.push_back({rec.id, ev.t_ms + kPostSelectionMs});
    }

    void execute(SimSession& session, SelectionRecord& rec, double t)
    {
        rec.executed = true;
        rec.points = score_selection(rec.response_time_s, rec.label == Label::Correct);
        total_points_ += rec.points;
        session.rounds[static_cast<std::size_t>(rec.round)].points += rec.points;
        session.score_trace.push_back({t, rec.points, total_points_});
        if (rec.label == Label::Correct && rec.round == round_ && rec.target_id == target_)
            new_target(t);
    }

    void resolve_pending(SimSession& session, double t)
    {
        while (!pending_.empty() && pending_.front().deadline_ms <= t) {
            SelectionRecord& rec = session.selections[pending_.front().selection];
            pending_.pop_front();
            if (!eps_) {
                execute(session, rec, t);
                continue;
            }
            const Decision d = eps_->judge(session.recording, rec);
            rec.verdict = d.verdict;
            rec.err = d.reconstruction_error;
            rec.threshold = d.threshold_used;
            if (selection_accepted(d, eps_->policy)) {
                execute(session, rec, t);
            } else if (rec.label == Label::Correct && rec.round == round_ && rec.target_id == target_) {
                reselect(t, rec);
            }
        }
    }

    // The target survived a cancelled selection: look at it again.
    void reselect(double t, const SelectionRecord& rec)
    {
        plan_.clear();
        if (!saccading_ && visit_.position == rec.target_id) {
            visit_.kind = VisitKind::Target;
            release_ms_ = kOpen;
            fix_start_ms_ = t;
            if (config_.method == Method::Nod)
                schedule_nod(std::max(t, rec.t_ms + config_.nod.hold_ms));
            return;
        }
        plan_.push_back({rec.target_id, VisitKind::Target});
        if (!saccading_ && release_ms_ > t + config_.behaviour.cancel_reaction_ms)
            release_ms_ = t + config_.behaviour.cancel_reaction_ms;
    }

    const SimConfig& config_;
    const SceneLayout& layout_;
    const std::optional<EpsHook>& eps_;
    TrackerNoise noise_;
    Rng rng_;
    std::uint64_t landing_seed_ = 0;
    std::unique_ptr<SelectionTrigger> trigger_;
    HeadModel head_;

    int round_ = 0;
    std::uint64_t targets_in_round_ = 0;
    int target_ = -1;
    double target_shown_ms_ = 0.0;
    double total_points_ = 0.0;
    std::deque<PendingJudgement> pending_;

    std::deque<Visit> plan_;
    Visit visit_;
    bool saccading_ = false;
    Vec3 saccade_from_{0.0, 0.0, 1.0};
    Vec3 fix_dir_{0.0, 0.0, 1.0};
    SaccadeProfile profile_;
    double saccade_start_ms_ = 0.0;
    double fix_start_ms_ = 0.0;
    double release_ms_ = 0.0;
    std::optional<double> entered_ms_;
    std::optional<NodScript> nod_;
};

}  // namespace

void SimConfig::validate() const
{
    auto rate = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorKind::InvalidInput, std::string(name) + " must be in [0, 1]");
    };
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::InvalidInput, std::string(name) + " must be positive");
    };
    rate(frame_drop_probability, "frame_drop_probability");
    rate(midas_rate, "midas_rate");
    positive(sample_rate_hz, "sample_rate_hz");
    positive(dwell_s, "dwell_s");
    positive(gaze_head_dwell_s, "gaze_head_dwell_s");
    positive(gaze_head_alignment_deg, "gaze_head_alignment_deg");
    positive(target_radius_deg, "target_radius_deg");
    positive(round_duration_s, "round_duration_s");
    positive(nod.amplitude_threshold_deg, "nod amplitude threshold");
    positive(nod.max_duration_ms, "nod max duration");
    positive(nod.hold_ms, "nod hold");
    if (frame_drop_probability >= 1.0)
        throw Error(ErrorKind::InvalidInput, "frame_drop_probability must be below 1");
    if (fixation_noise_deg < 0.0 || fixation_noise_correlation_ms < 0.0)
        throw Error(ErrorKind::InvalidInput, "fixation noise and its correlation time must be >= 0");
    if (rounds < 1)
        throw Error(ErrorKind::InvalidInput, "rounds must be >= 1");
    if (layout_positions < 2)
        throw Error(ErrorKind::InvalidInput, "need at least 2 layout positions");
}

std::unique_ptr<SelectionTrigger> make_trigger(const SimConfig& c, const SceneLayout& layout)
{
    switch (c.method) {
    case Method::DwellTime:
        return std::make_unique<DwellTrigger>(layout, c.dwell_s * 1000.0, c.target_radius_deg, c.dwell_grace_ms);
    case Method::GazeAndHead:
        return std::make_unique<GazeHeadTrigger>(layout, c.gaze_head_dwell_s * 1000.0, c.target_radius_deg,
                                                 c.gaze_head_alignment_deg, c.dwell_grace_ms);
    case Method::Nod:
        return std::make_unique<NodTrigger>(layout, c.target_radius_deg, c.nod);
    }
    throw Error(ErrorKind::Usage, "unknown method");
}

double nod_pitch_offset(const NodScript& nod, double t_ms)
{
    const double u = (t_ms - nod.start_ms) / nod.duration_ms;
    if (u <= 0.0 || u >= 1.0)
        return 0.0;
    return -nod.amplitude_deg * std::sin(std::numbers::pi * u);
}

std::vector<GazeSample> synth_scanpath(std::span<const ScanStep> plan, const SimConfig& config)
{
    config.validate();
    if (plan.empty())
        return {};

    struct Piece {
        double start, end;
        Vec3 from, to;
        SaccadeProfile profile;
        bool saccade;
        std::optional<NodScript> nod;
    };
    std::vector<Piece> pieces;
    double cursor = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const Vec3 dir = normalized(plan[i].direction);
        if (i > 0) {
            const Vec3 prev = normalized(plan[i - 1].direction);
            const auto prof = SaccadeProfile::for_amplitude(angle_between(prev, dir));
            pieces.push_back({cursor, cursor + prof.duration_ms, prev, dir, prof, true, std::nullopt});
            cursor += prof.duration_ms;
        }
        std::optional<NodScript> nod = plan[i].nod;
        if (nod)
            nod->start_ms += cursor;
        pieces.push_back({cursor, cursor + plan[i].fixation_ms, dir, dir, {}, false, nod});
        cursor += plan[i].fixation_ms;
    }

    TrackerNoise noise(config, mix_seed(config.seed, 10));
    HeadModel head(config.behaviour.head_time_constant_ms);
    std::vector<GazeSample> out;
    std::size_t piece = 0;
    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * 1000.0 / config.sample_rate_hz;
        if (t > cursor)
            break;
        while (piece + 1 < pieces.size() && t >= pieces[piece].end)
            ++piece;
        const Piece& p = pieces[piece];
        Vec3 gaze = p.to;
        if (p.saccade && p.profile.amplitude_deg > 0.0)
            gaze = slerp(p.from, p.to, p.profile.progress_at(t - p.start) / p.profile.amplitude_deg);
        const double pitch_offset = p.nod ? nod_pitch_offset(*p.nod, t) : 0.0;
        const Vec3 h = with_pitch_offset(head.update(gaze, config.sample_period_ms()), pitch_offset);
        const Vec3 observed = noise.observe(gaze);
        if (noise.dropped())
            continue;
        out.push_back(GazeSample{t, observed, h});
    }
    return out;
}

SimSession simulate_session(const SimConfig& config, const SceneLayout& layout, const std::optional<EpsHook>& eps)
{
    config.validate();
    layout.validate(config.min_separation_deg);
    if (eps && !eps->judge)
        throw Error(ErrorKind::Usage, "EPS hook without a judge");
    SessionRunner runner(config, layout, eps);
    return runner.run();
}

double score_selection(double response_time_s, bool is_correct)
{
    if (!is_correct)
        return -21.0;
    if (response_time_s < 0.0)
        throw Error(ErrorKind::InvalidInput, "response time must be >= 0");
    return std::max(5.0, 20.0 - 1.5 * response_time_s);
}

SelectionJudge model_judge(std::shared_ptr<const EpsModel> model)
{
    return [model = std::move(model)](std::span<const GazeSample> recording, const SelectionRecord& sel) {
        return detect(*model, recording, sel.t_ms, sel.method);
    };
}

SelectionJudge oracle_judge()
{
    return [](std::span<const GazeSample>, const SelectionRecord& sel) {
        Decision d;
        d.verdict = sel.label == Label::Correct ? Verdict::Correct : Verdict::Incorrect;
        return d;
    };
}

double SimSession::total_points() const
{
    double s = 0.0;
    for (const auto& sel : selections)
        if (sel.executed)
            s += sel.points;
    return s;
}

std::size_t SimSession::executed_incorrect() const
{
    return static_cast<std::size_t>(std::count_if(selections.begin(), selections.end(), [](const SelectionRecord& s) {
        return s.executed && s.label == Label::Incorrect;
    }));
}

std::size_t SimSession::labelled(Label label) const
{
    return static_cast<std::size_t>(
        std::count_if(selections.begin(), selections.end(), [label](const SelectionRecord& s) { return s.label == label; }));
}

std::vector<VelocityWindow> session_windows(const SimSession& session)
{
    std::vector<VelocityWindow> out;
    for (const auto& sel : session.selections) {
        const auto end = window_end_index(session.recording, sel.t_ms);
        if (!end)
            continue;
        VelocityWindow w = window_ending_at(session.recording, *end, sel.t_ms, sel.method);
        w.label = sel.label;
        out.push_back(w);
    }
    return out;
}

}  // namespace eps
