#pragma once

#include "eps/gaze_features.hpp"
#include "eps/tcn_autoencoder.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace eps {

struct TrainConfig {
    int epochs = 2000;
    std::size_t batch_size = 4000;
    double learning_rate = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool shuffle = true;
    // Per-time-index standardization of the input windows (off by default).
    bool standardize = false;

    // epochs may be 0: the model keeps its initialization.
    void validate() const;
    // Stable hex digest of every field; recorded as model provenance.
    std::string digest() const;
    bool operator==(const TrainConfig&) const = default;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;
};

// One bias-corrected Adam update of every parameter from its gradient.
// Throws TrainingDivergence on a non-finite gradient.
void adam_step(std::span<const ParamRef> params, AdamState& state, const TrainConfig& config);

struct Normalization {
    bool enabled = false;
    std::vector<double> mean;
    std::vector<double> scale;  // standard deviation per index

    std::vector<double> apply(std::span<const double> values) const;
    bool operator==(const Normalization&) const = default;
};

Normalization fit_normalization(std::span<const VelocityWindow> windows, bool enabled);

struct TrainReport {
    TrainConfig config;
    std::vector<double> epoch_losses;
    double initial_loss = 0.0;  // eval-mode loss at initialization
    double final_loss = 0.0;    // eval-mode loss after training
    std::size_t steps = 0;
    std::size_t samples = 0;
    double duration_s = 0.0;
};

struct TrainResult {
    TcnAutoencoder network;
    Normalization normalization;
    TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Trains the autoencoder to reconstruct `windows` (all labelled correct, or unlabelled).
TrainResult train(std::span<const VelocityWindow> windows, const ArchConfig& arch, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Mean eval-mode reconstruction MSE.
double evaluate_loss(const TcnAutoencoder& net, const Normalization& norm, std::span<const VelocityWindow> windows);

Tensor windows_to_batch(std::span<const VelocityWindow> windows, const Normalization& norm,
                        std::span<const std::size_t> indices);

enum class FoldStrategy { ByWindow, ByGroup };

// Fold index per window. ByGroup keeps all windows sharing a group id in one fold.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed, FoldStrategy strategy = FoldStrategy::ByWindow,
                                      std::span<const std::size_t> groups = {});

struct CvCandidate {
    std::string name;
    TrainConfig config;
};

struct CvResult {
    std::string name;
    TrainConfig config;
    std::vector<double> fold_losses;
    double mean = 0.0;
    double sd = 0.0;
};

struct CvReport {
    std::vector<CvResult> results;
    std::vector<std::size_t> fold_of;
    std::size_t best = 0;
};

CvReport cross_validate(std::span<const VelocityWindow> windows, std::size_t folds, std::span<const CvCandidate> candidates,
                        const ArchConfig& arch, std::uint64_t split_seed, FoldStrategy strategy = FoldStrategy::ByWindow,
                        std::span<const std::size_t> groups = {});

// Unweighted mean of each candidate's validation loss across per-method reports.
// Returns (per-candidate aggregate, argmin).
std::pair<std::vector<double>, std::size_t> aggregate_across_methods(std::span<const CvReport> per_method);

}  // namespace eps
