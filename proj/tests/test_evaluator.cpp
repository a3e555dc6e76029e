#include "support.hpp"

#include "eps/error.hpp"
#include "eps/evaluator.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace eps;

namespace {

ConfusionCounts counts(std::size_t ct, std::size_t cc, std::size_t it, std::size_t ii)
{
    ConfusionCounts c;
    c.correct_total = ct;
    c.correct_classified_correct = cc;
    c.incorrect_total = it;
    c.incorrect_classified_incorrect = ii;
    return c;
}

DecisionRecord record(std::string session, Method m, Label label, Verdict v)
{
    DecisionRecord r;
    r.session = std::move(session);
    r.method = m;
    r.label = label;
    r.verdict = v;
    return r;
}

std::vector<DecisionRecord> random_log(eps::Rng& rng, std::size_t n)
{
    const Method methods[] = {Method::DwellTime, Method::GazeAndHead, Method::Nod};
    const Verdict verdicts[] = {Verdict::Correct, Verdict::Incorrect, Verdict::Unclassifiable};
    std::vector<DecisionRecord> log;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = record("s" + std::to_string(rng.index(4)), methods[rng.index(3)],
                        rng.bernoulli(0.7) ? Label::Correct : Label::Incorrect, verdicts[rng.index(3)]);
        r.t_ms = static_cast<double>(i);
        log.push_back(r);
    }
    return log;
}

}  // namespace

TEST_CASE("class accuracies from the paper's table reproduce the macro column")
{
    const auto dwell = accuracies(counts(1000, 794, 1000, 928));
    CHECK(*dwell.correct_accuracy == doctest::Approx(0.794));
    CHECK(*dwell.incorrect_accuracy == doctest::Approx(0.928));
    CHECK(std::abs(*dwell.macro_accuracy - 0.861) <= 0.0005);

    const auto gh = accuracies(counts(1000, 730, 1000, 821));
    CHECK(*gh.macro_accuracy == doctest::Approx(0.7755));
    CHECK(std::abs(*gh.macro_accuracy - 0.775) <= 0.0005 + 1e-12);
}

TEST_CASE("the Nod row of the table is not reproducible from its class accuracies")
{
    const auto nod = accuracies(counts(1000, 908, 1000, 607));
    CHECK(*nod.macro_accuracy == doctest::Approx(0.7575));
    CHECK(std::abs(*nod.macro_accuracy - 0.886) > 0.1);
}

TEST_CASE("micro equals the count-weighted mean of the class accuracies")
{
    eps::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t ct = 1 + rng.index(500), it = 1 + rng.index(500);
        const auto c = counts(ct, rng.index(ct + 1), it, rng.index(it + 1));
        const auto r = accuracies(c);
        const double expected = static_cast<double>(c.correct_classified_correct + c.incorrect_classified_incorrect) /
                                static_cast<double>(ct + it);
        CHECK(r.micro_accuracy == expected);
        const double weighted = (*r.correct_accuracy * ct + *r.incorrect_accuracy * it) / static_cast<double>(ct + it);
        CHECK(r.micro_accuracy == doctest::Approx(weighted).epsilon(1e-12));
        const double lo = std::min(*r.correct_accuracy, *r.incorrect_accuracy);
        const double hi = std::max(*r.correct_accuracy, *r.incorrect_accuracy);
        CHECK(*r.macro_accuracy >= lo);
        CHECK(*r.macro_accuracy <= hi);
        CHECK(r.micro_accuracy >= lo - 1e-15);
        CHECK(r.micro_accuracy <= hi + 1e-15);
    }
}

TEST_CASE("an empty incorrect class leaves macro blank")
{
    const auto r = accuracies(counts(10, 10, 0, 0));
    CHECK(r.micro_accuracy == 1.0);
    CHECK(*r.correct_accuracy == 1.0);
    CHECK(!r.incorrect_accuracy);
    CHECK(!r.macro_accuracy);

    CHECK_THROWS_AS(accuracies(counts(0, 0, 0, 0)), Error);
    CHECK_THROWS_AS(accuracies(counts(3, 4, 0, 0)), Error);
    CHECK_THROWS_AS(accuracies(counts(3, 1, 2, 5)), Error);
}

TEST_CASE("counting decisions applies the unclassifiable policy")
{
    const std::vector<DecisionRecord> log{
        record("a", Method::DwellTime, Label::Correct, Verdict::Correct),
        record("a", Method::DwellTime, Label::Correct, Verdict::Unclassifiable),
        record("a", Method::DwellTime, Label::Incorrect, Verdict::Incorrect),
        record("a", Method::DwellTime, Label::Incorrect, Verdict::Unclassifiable),
    };
    const auto open = count_decisions(log, UnclassifiablePolicy::FailOpen);
    CHECK(open == counts(2, 2, 2, 1));
    const auto closed = count_decisions(log, UnclassifiablePolicy::FailClosed);
    CHECK(closed == counts(2, 1, 2, 2));

    auto unlabelled = log;
    unlabelled[0].label.reset();
    CHECK(count_decisions(unlabelled).correct_total == 1);
}

TEST_CASE("per-session report rows and sum consistency")
{
    eps::Rng rng(11);
    const auto log = random_log(rng, 600);
    const auto rows = per_session_report(log);
    const auto methods = per_method_report(log);
    CHECK(methods.size() == 3);

    std::set<std::pair<int, std::string>> keys;
    for (const auto& r : log)
        keys.insert({static_cast<int>(r.method), r.session});
    CHECK(rows.size() == keys.size());

    for (const auto& m : methods) {
        ConfusionCounts sum;
        for (const auto& r : rows)
            if (r.method == m.method)
                sum += r.counts;
        CHECK(sum == m.counts);
        std::vector<DecisionRecord> subset;
        for (const auto& r : log)
            if (r.method == m.method)
                subset.push_back(r);
        CHECK(count_decisions(subset) == m.counts);
        CHECK(m.session.empty());
    }
    CHECK(std::is_sorted(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::pair(static_cast<int>(a.method), a.session) < std::pair(static_cast<int>(b.method), b.session);
    }));
}

TEST_CASE("reports do not depend on log order")
{
    eps::Rng rng(12);
    auto log = random_log(rng, 300);
    const auto csv = report_csv(per_session_report(log));
    for (int i = 0; i < 5; ++i) {
        rng.shuffle(log);
        CHECK(report_csv(per_session_report(log)) == csv);
    }
}

TEST_CASE("all-right single session gives ones everywhere")
{
    const std::vector<DecisionRecord> log{
        record("p1", Method::Nod, Label::Correct, Verdict::Correct),
        record("p1", Method::Nod, Label::Incorrect, Verdict::Incorrect),
    };
    const auto rows = per_session_report(log);
    REQUIRE(rows.size() == 1);
    CHECK(*rows[0].report.correct_accuracy == 1.0);
    CHECK(*rows[0].report.incorrect_accuracy == 1.0);
    CHECK(*rows[0].report.macro_accuracy == 1.0);
    CHECK(rows[0].report.micro_accuracy == 1.0);
}

TEST_CASE("table rendering leaves absent cells blank")
{
    const std::vector<DecisionRecord> log{
        record("p1", Method::DwellTime, Label::Correct, Verdict::Correct),
        record("p1", Method::DwellTime, Label::Correct, Verdict::Incorrect),
    };
    const auto rows = per_session_report(log);
    const auto table = report_table(rows);
    CHECK(table.find("0.500") != std::string::npos);
    CHECK(table.find("nan") == std::string::npos);
    const auto csv = report_csv(rows);
    CHECK(csv.find(",,") != std::string::npos);
}

TEST_CASE("performance comparison pairs sessions by seed")
{
    std::vector<SessionOutcome> without, with;
    for (std::uint64_t s = 0; s < 5; ++s) {
        without.push_back({s, Method::DwellTime, 10 + s, 400.0 + s});
        with.push_back({s, Method::DwellTime, s % 2, 800.0 + s});
    }
    const auto cmp = performance_comparison(without, with);
    REQUIRE(cmp.size() == 1);
    CHECK(cmp[0].median_incorrect_without == 12.0);
    CHECK(cmp[0].median_incorrect_with == 0.0);
    CHECK(cmp[0].median_points_with == 802.0);
    CHECK(cmp[0].incorrect_delta.size() == 5);
    CHECK(cmp[0].incorrect_delta[0] == -10.0);
    CHECK(*cmp[0].incorrect_reduction == doctest::Approx(1.0 - 2.0 / 60.0));

    auto unpaired = with;
    unpaired.pop_back();
    CHECK_THROWS_AS(performance_comparison(without, unpaired), Error);
    unpaired = with;
    unpaired.back().seed = 99;
    CHECK_THROWS_AS(performance_comparison(without, unpaired), Error);
}

TEST_CASE("a midas-free cohort has zero incorrect delta")
{
    const auto layout = SceneLayout::standard();
    std::vector<SessionOutcome> without, with;
    for (std::uint64_t s = 0; s < 3; ++s) {
        auto cfg = testing::short_session(Method::DwellTime, s, 2);
        cfg.midas_rate = 0.0;
        const auto a = simulate_session(cfg, layout);
        const auto b = simulate_session(cfg, layout, EpsHook{oracle_judge(), UnclassifiablePolicy::FailOpen});
        without.push_back({s, cfg.method, a.executed_incorrect(), a.total_points()});
        with.push_back({s, cfg.method, b.executed_incorrect(), b.total_points()});
    }
    const auto cmp = performance_comparison(without, with);
    REQUIRE(cmp.size() == 1);
    for (double d : cmp[0].incorrect_delta)
        CHECK(d == 0.0);
    CHECK(!cmp[0].incorrect_reduction);
}

TEST_CASE("oracle EPS cohort executes no incorrect selections and beats the baseline")
{
    const auto layout = SceneLayout::standard();
    std::vector<SessionOutcome> without, with;
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto cfg = testing::short_session(Method::DwellTime, 50 + s, 3);
        cfg.midas_rate = 0.3;
        const auto a = simulate_session(cfg, layout);
        const auto b = simulate_session(cfg, layout, EpsHook{oracle_judge(), UnclassifiablePolicy::FailOpen});
        without.push_back({s, cfg.method, a.executed_incorrect(), a.total_points()});
        with.push_back({s, cfg.method, b.executed_incorrect(), b.total_points()});
    }
    const auto cmp = performance_comparison(without, with);
    REQUIRE(cmp.size() == 1);
    CHECK(cmp[0].median_incorrect_with == 0.0);
    CHECK(cmp[0].median_incorrect_with < cmp[0].median_incorrect_without);
    CHECK(*cmp[0].incorrect_reduction == 1.0);
}

TEST_CASE("velocity profile quartiles per index")
{
    std::vector<VelocityWindow> windows(5);
    for (std::size_t w = 0; w < windows.size(); ++w)
        for (std::size_t i = 0; i < kWindowLength; ++i)
            windows[w].values[i] = static_cast<double>(w * 10 + i);
    const auto rows = velocity_profile(windows);
    REQUIRE(rows.size() == kWindowLength);
    for (std::size_t i = 0; i < kWindowLength; ++i) {
        CHECK(rows[i].index == i);
        CHECK(rows[i].median == doctest::Approx(20.0 + i));
        CHECK(rows[i].p25 == doctest::Approx(10.0 + i));
        CHECK(rows[i].p75 == doctest::Approx(30.0 + i));
    }
    CHECK_THROWS_AS(velocity_profile({}), Error);
}

TEST_CASE("dwell profile is quiet before the selection and bursts after it")
{
    const auto layout = SceneLayout::standard();
    std::vector<VelocityWindow> correct;
    for (std::uint64_t s = 0; s < 3; ++s)
        for (const auto& w : session_windows(simulate_session(testing::short_session(Method::DwellTime, s, 3), layout)))
            if (w.label == Label::Correct)
                correct.push_back(w);
    REQUIRE(correct.size() > 10);
    const auto rows = velocity_profile(correct);
    double pre = 0.0, post = 0.0;
    for (std::size_t i = 0; i < 12; ++i)
        pre = std::max(pre, rows[i].median);
    for (std::size_t i = 18; i < kWindowLength; ++i)
        post = std::max(post, rows[i].median);
    CHECK(pre < 30.0);
    CHECK(post > 100.0);
}
