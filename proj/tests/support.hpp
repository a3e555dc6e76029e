#pragma once

// Shared helpers for the test binaries: generators, scratch directories, small models.

#include "eps/detector.hpp"
#include "eps/rng.hpp"
#include "eps/simulator.hpp"
#include "eps/types.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <unistd.h>

namespace testing {

inline eps::Vec3 random_unit(eps::Rng& rng)
{
    for (;;) {
        eps::Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = eps::norm(v);
        if (n > 1e-3)
            return eps::normalized(v);
    }
}

// Unit vector perpendicular to `v`.
inline eps::Vec3 perpendicular(const eps::Vec3& v, eps::Rng& rng)
{
    for (;;) {
        const eps::Vec3 c = eps::cross(v, random_unit(rng));
        if (eps::norm(c) > 1e-3)
            return eps::normalized(c);
    }
}

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("eps_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline eps::SimConfig short_session(eps::Method method, std::uint64_t seed, int rounds = 2)
{
    eps::SimConfig c;
    c.method = method;
    c.seed = seed;
    c.rounds = rounds;
    return c;
}

// Quickly trained model on a few synthetic sessions; good enough to exercise plumbing.
inline eps::EpsModel small_model(eps::Method method = eps::Method::DwellTime, int epochs = 5, std::uint64_t seed = 3)
{
    const auto layout = eps::SceneLayout::standard();
    std::vector<eps::VelocityWindow> windows;
    for (std::uint64_t s = 0; s < 2; ++s) {
        const auto session = eps::simulate_session(short_session(method, 100 + s, 3), layout);
        for (const auto& w : eps::session_windows(session))
            if (w.label == eps::Label::Correct)
                windows.push_back(w);
    }
    eps::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 64;
    cfg.seed = seed;
    return eps::build_model(windows, method, eps::ArchConfig::reference(), cfg).model;
}

}  // namespace testing
