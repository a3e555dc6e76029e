#include "support.hpp"

#include "eps/error.hpp"
#include "eps/gaze_features.hpp"

#include <doctest.h>

#include <vector>

using namespace eps;

namespace {

std::vector<GazeSample> regular_stream(std::size_t n, double period_ms, const Vec3& dir = {0, 0, 1})
{
    std::vector<GazeSample> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({i * period_ms, dir, std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("angular distance of known pairs")
{
    CHECK(angular_distance({1, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
    CHECK(angular_distance({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0));
    CHECK(angular_distance({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(180.0));
    const Vec3 a = direction_from_angles(0, 0);
    const Vec3 b = direction_from_angles(30, 0);
    CHECK(angular_distance(a, b) == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("angular distance is symmetric and never NaN for near-parallel pairs")
{
    Rng rng(4);
    for (int i = 0; i < 20000; ++i) {
        const Vec3 u = testing::random_unit(rng);
        const double tiny = rng.uniform(0.0, 1e-7);
        Vec3 v = rng.bernoulli(0.5) ? u : normalized(u + tiny * testing::perpendicular(u, rng));
        if (rng.bernoulli(0.2))
            v = -1.0 * v;
        const double d = angular_distance(u, v);
        REQUIRE_FALSE(std::isnan(d));
        CHECK(d >= 0.0);
        CHECK(d <= 180.0);
        CHECK(d == angular_distance(v, u));
    }
}

TEST_CASE("angular distance rejects bad vectors")
{
    CHECK_THROWS_AS(angular_distance({2, 0, 0}, {1, 0, 0}), Error);
    CHECK_THROWS_AS(angular_distance({NAN, 0, 1}, {1, 0, 0}), Error);
    try {
        angular_distance({0.5, 0, 0}, {1, 0, 0});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidInput);
    }
}

TEST_CASE("constant rotation gives a constant velocity, even across a dropped frame")
{
    const Vec3 axis{0, 1, 0};
    const Vec3 g0{0, 0, 1};
    const double rate = 120.0;  // deg/s
    std::vector<GazeSample> s;
    double t = 0.0;
    for (int i = 0; i < 37; ++i) {
        s.push_back({t, rotate(g0, axis, rate * t / 1000.0), std::nullopt});
        t += (i == 10) ? 2 * 1000.0 / 90.0 : 1000.0 / 90.0;
    }
    const auto v = angular_velocity_series(s);
    for (double x : v)
        CHECK(x == doctest::Approx(rate).epsilon(1e-9));
}

TEST_CASE("velocity series: v_j = angle / gap in seconds")
{
    std::vector<GazeSample> s = regular_stream(37, 10.0);
    s[5].gaze = direction_from_angles(1.0, 0.0);
    const auto v = angular_velocity_series(s);
    CHECK(v[3] == doctest::Approx(0.0));
    CHECK(v[4] == doctest::Approx(100.0));  // 1 degree in 10 ms
    CHECK(v[5] == doctest::Approx(100.0));
    CHECK(v[6] == doctest::Approx(0.0));
}

TEST_CASE("velocity series needs exactly 37 samples with increasing time")
{
    auto s = regular_stream(36, 11.0);
    CHECK_THROWS_AS(angular_velocity_series(s), Error);
    s = regular_stream(37, 11.0);
    s[20].t_ms = s[19].t_ms;
    try {
        angular_velocity_series(s);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateTiming);
    }
}

TEST_CASE("window ends at the first sample at or after selection + 200 ms")
{
    const double period = 1000.0 / 90.0;
    const auto rec = regular_stream(200, period);
    const double sel = 1000.0;
    const auto end = window_end_index(rec, sel);
    REQUIRE(end.has_value());
    CHECK(rec[*end].t_ms >= sel + 200.0);
    CHECK(rec[*end - 1].t_ms < sel + 200.0);

    // exact hit on the boundary
    const auto exact = regular_stream(100, 10.0);
    CHECK(*window_end_index(exact, 300.0) == 50u);
}

TEST_CASE("window unavailable near the start or past the end of a recording")
{
    const auto rec = regular_stream(100, 10.0);
    CHECK_FALSE(window_end_index(rec, 900.0).has_value());  // needs t >= 1100
    CHECK_FALSE(window_end_index(rec, 0.0).has_value());    // only 21 samples before the cut
    CHECK(window_end_index(rec, 160.0).has_value());        // cut at index 36
    try {
        extract_window(rec, 900.0);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WindowUnavailable);
    }
}

TEST_CASE("extract_window carries the method and selection time")
{
    const auto rec = regular_stream(100, 10.0);
    const auto w = extract_window(rec, 500.0, Method::Nod);
    CHECK(w.method == Method::Nod);
    CHECK(w.selection_t_ms == 500.0);
    CHECK_FALSE(w.label.has_value());
    for (double v : w.values)
        CHECK(v == 0.0);
}

TEST_CASE("is_unit tolerance")
{
    CHECK(is_unit({0, 0, 1}));
    CHECK(is_unit({0, 0, 1 + 1e-9}));
    CHECK_FALSE(is_unit({0, 0, 1.01}));
}
