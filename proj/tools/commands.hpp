#pragma once

#include "eps/detector.hpp"
#include "eps/recording_io.hpp"
#include "eps/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eps::cli {

namespace fs = std::filesystem;

struct SimulateOptions {
    Method method = Method::DwellTime;
    int sessions = 10;
    int rounds = 10;
    double midas_rate = 0.1;
    std::uint64_t seed = 1;
    std::optional<fs::path> eps_model;
    fs::path out;
};

struct TrainOptions {
    Method method = Method::DwellTime;
    fs::path data;
    int epochs = 2000;
    std::size_t batch = 4000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    double percentile = 95.0;
    bool standardize = false;
    Padding padding = Padding::Symmetric;
    fs::path out = "model.epsmodel";
    std::optional<fs::path> report;  // defaults to <out>.report.json
};

struct EvalOptions {
    fs::path model;  // unused with oracle
    fs::path data;
    std::optional<fs::path> csv;  // defaults to <data>/eval.csv
    bool oracle = false;
    UnclassifiablePolicy policy = UnclassifiablePolicy::FailOpen;
};

struct ReplayOptions {
    fs::path model;
    fs::path recording;
    std::optional<fs::path> out;  // decision log; defaults to <recording>.decisions.jsonl
    bool omit_latency = false;
};

struct CrossvalOptions {
    Method method = Method::DwellTime;
    fs::path data;
    std::size_t folds = 5;
    std::optional<fs::path> grid;
    std::uint64_t seed = 0;
    std::optional<fs::path> out;
};

struct ProfileOptions {
    fs::path data;
    fs::path out = "profile.csv";
    std::optional<Label> label = Label::Correct;  // empty: every labelled selection
};

// A recording file found in a data directory, keyed by file stem.
struct NamedRecording {
    std::string name;
    Recording recording;
};

// *.jsonl files directly inside `dir`, sorted by name.
std::vector<NamedRecording> load_dataset(const fs::path& dir);

// Windows for labelled selections; `only` filters by label.
std::vector<VelocityWindow> dataset_windows(const std::vector<NamedRecording>& data, std::optional<Method> method,
                                            std::optional<Label> only = std::nullopt);

int cmd_simulate(const SimulateOptions& o, std::ostream& log);
int cmd_train(const TrainOptions& o, std::ostream& log);
int cmd_eval(const EvalOptions& o, std::ostream& log);
int cmd_replay(const ReplayOptions& o, std::ostream& log);
int cmd_crossval(const CrossvalOptions& o, std::ostream& log);
int cmd_profile(const ProfileOptions& o, std::ostream& log);

// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eps::cli
