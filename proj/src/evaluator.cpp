#include "eps/evaluator.hpp"

#include "eps/error.hpp"
#include "eps/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace eps {

void ConfusionCounts::validate() const
{
    if (correct_classified_correct > correct_total || incorrect_classified_incorrect > incorrect_total)
        throw Error(ErrorKind::InvalidInput, "classified count exceeds class total");
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o)
{
    correct_total += o.correct_total;
    correct_classified_correct += o.correct_classified_correct;
    incorrect_total += o.incorrect_total;
    incorrect_classified_incorrect += o.incorrect_classified_incorrect;
    return *this;
}

AccuracyReport accuracies(const ConfusionCounts& c)
{
    c.validate();
    if (c.correct_total == 0 && c.incorrect_total == 0)
        throw Error(ErrorKind::InvalidInput, "no selections in either class");
    AccuracyReport r;
    if (c.correct_total > 0)
        r.correct_accuracy = static_cast<double>(c.correct_classified_correct) / static_cast<double>(c.correct_total);
    if (c.incorrect_total > 0)
        r.incorrect_accuracy =
            static_cast<double>(c.incorrect_classified_incorrect) / static_cast<double>(c.incorrect_total);
    if (r.correct_accuracy && r.incorrect_accuracy)
        r.macro_accuracy = (*r.correct_accuracy + *r.incorrect_accuracy) / 2.0;
    r.micro_accuracy = static_cast<double>(c.correct_classified_correct + c.incorrect_classified_incorrect) /
                       static_cast<double>(c.correct_total + c.incorrect_total);
    return r;
}

ConfusionCounts count_decisions(std::span<const DecisionRecord> records, UnclassifiablePolicy policy)
{
    ConfusionCounts c;
    for (const auto& r : records) {
        if (!r.label)
            continue;
        const bool said_correct = selection_accepted(Decision{r.verdict, r.err, r.threshold}, policy);
        if (*r.label == Label::Correct) {
            ++c.correct_total;
            c.correct_classified_correct += said_correct ? 1 : 0;
        } else {
            ++c.incorrect_total;
            c.incorrect_classified_incorrect += said_correct ? 0 : 1;
        }
    }
    return c;
}

namespace {

std::vector<ReportRow> grouped(std::span<const DecisionRecord> records, UnclassifiablePolicy policy, bool by_session)
{
    std::map<std::pair<int, std::string>, ConfusionCounts> groups;
    for (const auto& r : records) {
        if (!r.label)
            continue;
        auto& c = groups[{static_cast<int>(r.method), by_session ? r.session : std::string()}];
        c += count_decisions(std::span<const DecisionRecord>(&r, 1), policy);
    }
    std::vector<ReportRow> rows;
    for (const auto& [key, counts] : groups)
        rows.push_back({static_cast<Method>(key.first), key.second, counts, accuracies(counts)});
    return rows;
}

std::string cell(const std::optional<double>& v)
{
    if (!v)
        return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string full(const std::optional<double>& v)
{
    if (!v)
        return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}


}  // namespace

std::vector<ReportRow> per_session_report(std::span<const DecisionRecord> records, UnclassifiablePolicy policy)
{
    return grouped(records, policy, true);
}

std::vector<ReportRow> per_method_report(std::span<const DecisionRecord> records, UnclassifiablePolicy policy)
{
    return grouped(records, policy, false);
}

std::string report_csv(std::span<const ReportRow> rows)
{
    std::ostringstream out;
    out << "method,session,correct_total,correct_classified_correct,incorrect_total,incorrect_classified_incorrect,"
           "correct_accuracy,incorrect_accuracy,macro_accuracy,micro_accuracy\n";
    for (const auto& r : rows) {
        out << to_string(r.method) << ',' << r.session << ',' << r.counts.correct_total << ','
            << r.counts.correct_classified_correct << ',' << r.counts.incorrect_total << ','
            << r.counts.incorrect_classified_incorrect << ',' << full(r.report.correct_accuracy) << ','
            << full(r.report.incorrect_accuracy) << ',' << full(r.report.macro_accuracy) << ','
            << full(r.report.micro_accuracy) << '\n';
    }
    return out.str();
}

std::string report_table(std::span<const ReportRow> rows)
{
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-14s %8s %8s %8s %8s %8s %8s\n", "method", "session", "n_corr", "n_inc",
                  "corr", "incorr", "macro", "micro");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-14s %-14s %8zu %8zu %8s %8s %8s %8s\n", std::string(to_string(r.method)).c_str(),
                      r.session.empty() ? "all" : r.session.c_str(), r.counts.correct_total, r.counts.incorrect_total,
                      cell(r.report.correct_accuracy).c_str(), cell(r.report.incorrect_accuracy).c_str(),
                      cell(r.report.macro_accuracy).c_str(), cell(r.report.micro_accuracy).c_str());
        out << line;
    }
    return out.str();
}

std::vector<MethodComparison> performance_comparison(std::span<const SessionOutcome> without_eps,
                                                     std::span<const SessionOutcome> with_eps)
{
    using Key = std::pair<int, std::uint64_t>;
    auto index = [](std::span<const SessionOutcome> arm, const char* name) {
        std::map<Key, const SessionOutcome*> m;
        for (const auto& s : arm)
            if (!m.emplace(Key{static_cast<int>(s.method), s.seed}, &s).second)
                throw Error(ErrorKind::InvalidInput, std::string("duplicate session in ") + name + " arm");
        return m;
    };
    const auto base = index(without_eps, "without-EPS");
    const auto treated = index(with_eps, "with-EPS");
    if (base.size() != treated.size())
        throw Error(ErrorKind::InvalidInput, "arms have different session counts");

    std::map<int, MethodComparison> by_method;
    for (const auto& [key, b] : base) {
        auto it = treated.find(key);
        if (it == treated.end())
            throw Error(ErrorKind::InvalidInput, "unpaired session seed " + std::to_string(key.second));
        const SessionOutcome* w = it->second;
        auto& mc = by_method[key.first];
        mc.method = b->method;
        mc.seeds.push_back(key.second);
        mc.incorrect_without.push_back(static_cast<double>(b->executed_incorrect));
        mc.incorrect_with.push_back(static_cast<double>(w->executed_incorrect));
        mc.points_without.push_back(b->points);
        mc.points_with.push_back(w->points);
        mc.incorrect_delta.push_back(mc.incorrect_with.back() - mc.incorrect_without.back());
        mc.points_delta.push_back(w->points - b->points);
    }

    std::vector<MethodComparison> out;
    for (auto& [m, mc] : by_method) {
        mc.median_incorrect_without = median(mc.incorrect_without);
        mc.median_incorrect_with = median(mc.incorrect_with);
        mc.median_points_without = median(mc.points_without);
        mc.median_points_with = median(mc.points_with);
        const double sum_without = std::accumulate(mc.incorrect_without.begin(), mc.incorrect_without.end(), 0.0);
        const double sum_with = std::accumulate(mc.incorrect_with.begin(), mc.incorrect_with.end(), 0.0);
        if (sum_without > 0.0)
            mc.incorrect_reduction = 1.0 - sum_with / sum_without;
        out.push_back(std::move(mc));
    }
    return out;
}

std::vector<ProfileRow> velocity_profile(std::span<const VelocityWindow> windows)
{
    if (windows.empty())
        throw Error(ErrorKind::InvalidInput, "no windows to profile");
    std::vector<ProfileRow> rows;
    std::vector<double> column(windows.size());
    for (std::size_t j = 0; j < kWindowLength; ++j) {
        for (std::size_t i = 0; i < windows.size(); ++i)
            column[i] = windows[i].values[j];
        std::sort(column.begin(), column.end());
        rows.push_back({j, percentile_sorted(column, 25.0), percentile_sorted(column, 50.0), percentile_sorted(column, 75.0)});
    }
    return rows;
}

}  // namespace eps
