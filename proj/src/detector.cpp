#include "eps/detector.hpp"

#include "eps/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace eps {

void EpsModel::validate() const
{
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw Error(ErrorKind::ModelCorruption, "threshold must be positive and finite");
    if (network.arch().seq_len != kWindowLength)
        throw Error(ErrorKind::ShapeMismatch, "model sequence length must be " + std::to_string(kWindowLength));
}

bool selection_accepted(const Decision& d, UnclassifiablePolicy policy)
{
    switch (d.verdict) {
    case Verdict::Correct: return true;
    case Verdict::Incorrect: return false;
    case Verdict::Unclassifiable: return policy == UnclassifiablePolicy::FailOpen;
    }
    return true;
}

double reconstruction_error(const EpsModel& model, const VelocityWindow& window)
{
    const auto input = model.normalization.apply(window.values);
    const Tensor x({1, 1, input.size()}, input);
    const Tensor out = model.network.infer(x);
    if (!out.all_finite())
        throw Error(ErrorKind::ModelCorruption, "network produced non-finite output");
    return mse_loss(out, x);
}

double calibrate_threshold(std::span<const double> errors, double percentile_value, PercentileMethod method)
{
    if (errors.size() < 20)
        throw Error(ErrorKind::Calibration,
                    "need at least 20 errors to calibrate, got " + std::to_string(errors.size()));
    for (double e : errors)
        if (!std::isfinite(e))
            throw Error(ErrorKind::Calibration, "non-finite reconstruction error");
    return percentile(errors, percentile_value, method);
}

Verdict classify(double err, double threshold)
{
    if (!std::isfinite(err) || !std::isfinite(threshold) || !(threshold > 0.0))
        throw Error(ErrorKind::InvalidInput, "classify needs finite error and positive threshold");
    return err < threshold ? Verdict::Correct : Verdict::Incorrect;
}

Decision decide(const EpsModel& model, const VelocityWindow& window)
{
    Decision d;
    d.threshold_used = model.threshold;
    const double err = reconstruction_error(model, window);
    d.reconstruction_error = err;
    d.verdict = classify(err, model.threshold);
    return d;
}

Decision detect(const EpsModel& model, std::span<const GazeSample> recording, double selection_t_ms, Method method)
{
    if (method != model.method)
        throw Error(ErrorKind::Usage, "selection method " + std::string(to_string(method)) + " does not match model " +
                                          std::string(to_string(model.method)));
    const auto end = window_end_index(recording, selection_t_ms);
    if (!end) {
        Decision d;
        d.threshold_used = model.threshold;
        return d;
    }
    return decide(model, window_ending_at(recording, *end, selection_t_ms, method));
}

std::string fingerprint_windows(std::span<const VelocityWindow> windows)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& w : windows)
        feed(w.values.data(), sizeof(double) * w.values.size());
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

CalibratedModel build_model(std::span<const VelocityWindow> windows, Method method, const ArchConfig& arch,
                            const TrainConfig& config, double percentile_value, PercentileMethod percentile_method,
                            const EpochCallback& on_epoch)
{
    for (const auto& w : windows)
        if (w.method != method)
            throw Error(ErrorKind::Usage, "training window method does not match requested method");
    TrainResult trained = train(windows, arch, config, on_epoch);
    CalibratedModel out{EpsModel{std::move(trained.network), 0.0, method, percentile_value, percentile_method,
                                 std::move(trained.normalization), config,
                                 Provenance{config.digest(), fingerprint_windows(windows)}},
                        std::move(trained.report),
                        {}};
    out.training_errors.reserve(windows.size());
    for (const auto& w : windows)
        out.training_errors.push_back(reconstruction_error(out.model, w));
    out.model.threshold = calibrate_threshold(out.training_errors, percentile_value, percentile_method);
    if (!(out.model.threshold > 0.0))
        throw Error(ErrorKind::Calibration, "calibrated threshold is not positive");
    return out;
}

}  // namespace eps
