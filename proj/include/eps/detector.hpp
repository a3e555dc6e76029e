#pragma once

#include "eps/gaze_features.hpp"
#include "eps/stats.hpp"
#include "eps/tcn_autoencoder.hpp"
#include "eps/trainer.hpp"

#include <optional>
#include <span>
#include <string>

namespace eps {

struct Provenance {
    std::string config_digest;
    std::string data_fingerprint;
    bool operator==(const Provenance&) const = default;
};

// The deployable error-prevention model for one interaction method.
struct EpsModel {
    TcnAutoencoder network;
    double threshold = 0.0;
    Method method = Method::DwellTime;
    double calibration_percentile = 95.0;
    PercentileMethod percentile_method = PercentileMethod::Linear;
    Normalization normalization;
    TrainConfig train_config;
    Provenance provenance;

    void validate() const;
    bool operator==(const EpsModel&) const = default;
};

// What to do with a selection whose window cannot be formed.
enum class UnclassifiablePolicy { FailOpen, FailClosed };

struct Decision {
    Verdict verdict = Verdict::Unclassifiable;
    std::optional<double> reconstruction_error;
    double threshold_used = 0.0;
};

// Whether the selection goes through: a correct verdict, or an unclassifiable one under fail-open.
bool selection_accepted(const Decision& d, UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen);

// mse(net(w), w) in the model's (possibly standardized) input space.
double reconstruction_error(const EpsModel& model, const VelocityWindow& window);

// Percentile of the correct-selection training errors; needs >= 20 finite values.
double calibrate_threshold(std::span<const double> errors, double percentile = 95.0,
                           PercentileMethod method = PercentileMethod::Linear);

// correct iff err < th; err >= th is incorrect.
Verdict classify(double err, double threshold);

Decision decide(const EpsModel& model, const VelocityWindow& window);

// Window extraction + reconstruction error + classification for a selection at
// `selection_t_ms`. Window-unavailable yields an Unclassifiable decision.
// Throws Usage when `method` differs from the model's method.
Decision detect(const EpsModel& model, std::span<const GazeSample> recording, double selection_t_ms, Method method);

// FNV-1a digest over window values; identifies a training set.
std::string fingerprint_windows(std::span<const VelocityWindow> windows);

// Trains, then calibrates the threshold on the training windows' errors.
struct CalibratedModel {
    EpsModel model;
    TrainReport report;
    std::vector<double> training_errors;
};
CalibratedModel build_model(std::span<const VelocityWindow> windows, Method method, const ArchConfig& arch,
                            const TrainConfig& config, double percentile = 95.0,
                            PercentileMethod percentile_method = PercentileMethod::Linear,
                            const EpochCallback& on_epoch = {});

}  // namespace eps
