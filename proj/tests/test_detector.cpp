#include "support.hpp"

#include "eps/detector.hpp"
#include "eps/error.hpp"
#include "eps/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace eps;

namespace {

// Sort-based linear-interpolation percentile, written independently of stats.cpp.
double percentile_oracle(std::vector<double> v, double p)
{
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> one_to(std::size_t n)
{
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 1.0);
    return v;
}

}  // namespace

TEST_CASE("threshold on 1..100 at the 95th percentile")
{
    const auto v = one_to(100);
    CHECK(calibrate_threshold(v, 95.0) == doctest::Approx(95.05).epsilon(1e-12));
    CHECK(calibrate_threshold(v, 95.0, PercentileMethod::NearestRank) == 95.0);
}

TEST_CASE("percentile agrees with a sort-based oracle")
{
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.index(60));
        for (auto& x : v)
            x = rng.uniform(-5.0, 5.0);
        const double p = rng.uniform(0.0, 100.0);
        CHECK(percentile(v, p) == doctest::Approx(percentile_oracle(v, p)).epsilon(1e-12));
    }
    CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(median(std::vector<double>{4, 1, 2, 3}) == 2.5);
    CHECK_THROWS_AS(percentile(std::vector<double>{}, 50.0), Error);
    CHECK_THROWS_AS(percentile(std::vector<double>{1.0}, 101.0), Error);
}

TEST_CASE("calibration needs at least 20 finite errors")
{
    try {
        calibrate_threshold(one_to(19));
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Calibration);
    }
    auto v = one_to(30);
    v[3] = NAN;
    CHECK_THROWS_AS(calibrate_threshold(v), Error);
}

TEST_CASE("err equal to the threshold is incorrect")
{
    CHECK(classify(0.99, 1.0) == Verdict::Correct);
    CHECK(classify(1.0, 1.0) == Verdict::Incorrect);
    CHECK(classify(2.0, 1.0) == Verdict::Incorrect);
}

TEST_CASE("self-classification flags at most ceil(5%) + 1 of the calibration set")
{
    Rng rng(17);
    for (std::size_t n : {20u, 100u, 1000u, 57u}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> errs(n);
            for (auto& e : errs)
                e = rng.bernoulli(0.3) ? std::round(rng.uniform(1, 5)) : rng.uniform(0.1, 10.0);  // with ties
            const double th = calibrate_threshold(errs);
            const auto flagged = std::count_if(errs.begin(), errs.end(),
                                               [&](double e) { return classify(e, th) == Verdict::Incorrect; });
            CHECK(static_cast<double>(flagged) <= std::ceil(0.05 * n) + 1);
        }
    }
}

TEST_CASE("fail-open and fail-closed policies")
{
    const Decision u{Verdict::Unclassifiable, std::nullopt, 1.0};
    CHECK(selection_accepted(u, UnclassifiablePolicy::FailOpen));
    CHECK_FALSE(selection_accepted(u, UnclassifiablePolicy::FailClosed));
    CHECK(selection_accepted({Verdict::Correct, 0.1, 1.0}, UnclassifiablePolicy::FailClosed));
    CHECK_FALSE(selection_accepted({Verdict::Incorrect, 2.0, 1.0}));
}

TEST_CASE("model decisions")
{
    const EpsModel model = testing::small_model();
    const auto layout = SceneLayout::standard();
    const auto session = simulate_session(testing::short_session(Method::DwellTime, 55), layout);
    REQUIRE(session.selections.size() > 3);

    SUBCASE("reconstruction error equals the mse of the eval-mode output")
    {
        const auto windows = session_windows(session);
        const auto& w = windows.front();
        Tensor x({1, 1, kWindowLength});
        std::copy(w.values.begin(), w.values.end(), x.raw());
        CHECK(reconstruction_error(model, w) == mse_loss(model.network.infer(x), x));
    }
    SUBCASE("detect agrees with decide on the extracted window")
    {
        for (const auto& sel : session.selections) {
            const Decision d = detect(model, session.recording, sel.t_ms, Method::DwellTime);
            const auto end = window_end_index(session.recording, sel.t_ms);
            if (!end) {
                CHECK(d.verdict == Verdict::Unclassifiable);
                continue;
            }
            const Decision e =
                decide(model, window_ending_at(session.recording, *end, sel.t_ms, Method::DwellTime));
            CHECK(d.verdict == e.verdict);
            CHECK(d.reconstruction_error == e.reconstruction_error);
            CHECK(d.threshold_used == model.threshold);
        }
    }
    SUBCASE("short recordings are unclassifiable")
    {
        const std::span<const GazeSample> head(session.recording.data(), 20);
        const Decision d = detect(model, head, head.back().t_ms, Method::DwellTime);
        CHECK(d.verdict == Verdict::Unclassifiable);
        CHECK_FALSE(d.reconstruction_error.has_value());
    }
    SUBCASE("method mismatch is a usage error")
    {
        try {
            detect(model, session.recording, 5000.0, Method::Nod);
            FAIL("expected a throw");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Usage);
        }
    }
}

TEST_CASE("build_model calibrates on its own training errors and records provenance")
{
    const auto layout = SceneLayout::standard();
    const auto session = simulate_session(testing::short_session(Method::GazeAndHead, 9, 3), layout);
    std::vector<VelocityWindow> windows;
    for (const auto& w : session_windows(session))
        if (w.label == Label::Correct)
            windows.push_back(w);
    REQUIRE(windows.size() >= 20);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    const auto built = build_model(windows, Method::GazeAndHead, ArchConfig::reference(), cfg);
    CHECK(built.model.method == Method::GazeAndHead);
    CHECK(built.model.threshold == percentile(built.training_errors, 95.0));
    CHECK(built.model.provenance.config_digest == cfg.digest());
    CHECK(built.model.provenance.data_fingerprint == fingerprint_windows(windows));
    CHECK_THROWS_AS(build_model(windows, Method::Nod, ArchConfig::reference(), cfg), Error);
}

TEST_CASE("fingerprint changes with the data")
{
    std::vector<VelocityWindow> w(3);
    const auto a = fingerprint_windows(w);
    w[1].values[4] = 1.0;
    CHECK(a != fingerprint_windows(w));
}
