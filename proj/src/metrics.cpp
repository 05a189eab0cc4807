#include "ata/metrics.hpp"

#include <fmt/format.h>

#include <map>
#include <numeric>
#include <set>

namespace ata {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw ScoringError("rational overflow");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw ScoringError("rational overflow");
    return r;
}

Metric ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return Rational(num, den);
}

Metric add(const Metric& a, const Metric& b) {
    if (!a || !b) return std::nullopt;
    return *a + *b;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw ScoringError("zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    auto g = std::gcd(num, den);
    if (g == 0) g = 1;
    num_ = num / g;
    den_ = den / g;
}

Rational Rational::operator+(const Rational& o) const {
    auto g = std::gcd(den_, o.den_);
    auto lhs = checked_mul(num_, o.den_ / g);
    auto rhs = checked_mul(o.num_, den_ / g);
    return Rational(checked_add(lhs, rhs), checked_mul(den_, o.den_ / g));
}

Rational Rational::operator-(const Rational& o) const { return *this + Rational(-o.num_, o.den_); }

Rational Rational::operator/(std::int64_t k) const { return Rational(num_, checked_mul(den_, k)); }

std::strong_ordering Rational::operator<=>(const Rational& o) const {
    return static_cast<__int128>(num_) * o.den_ <=> static_cast<__int128>(o.num_) * den_;
}

std::string Rational::str() const { return den_ == 1 ? std::to_string(num_) : fmt::format("{}/{}", num_, den_); }

std::string Rational::fixed2() const {
    // floor(x * 100 + 1/2) for x >= 0; mirrored for negatives.
    bool neg = num_ < 0;
    __int128 n = neg ? -static_cast<__int128>(num_) : num_;
    __int128 hundredths = (n * 200 + den_) / (2 * static_cast<__int128>(den_));
    auto whole = static_cast<std::int64_t>(hundredths / 100);
    auto frac = static_cast<int>(hundredths % 100);
    return fmt::format("{}{}.{:02}", neg && hundredths != 0 ? "-" : "", whole, frac);
}

std::string render_metric(const Metric& m) { return m ? m->fixed2() : "n/a"; }

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::TP: return "TP";
        case Outcome::TN: return "TN";
        case Outcome::FP: return "FP";
        case Outcome::FN: return "FN";
    }
    return "TN";
}

std::string_view to_string(Alignment a) {
    switch (a) {
        case Alignment::AFB: return "AFB";
        case Alignment::AFA: return "AFA";
        case Alignment::AFC: return "AFC";
    }
    return "AFC";
}

Classification classify(const ResultPair& pair) {
    bool ground_fail = pair.ground.verdict == Verdict::Fail;
    bool agent_fail = pair.agent.outcome == Verdict::Fail;
    if (ground_fail && !pair.ground.failure_step)
        throw ScoringError(fmt::format("case '{}': FAIL ground truth without failure step", pair.case_id));
    if (!ground_fail) return {agent_fail ? Outcome::FP : Outcome::TN, std::nullopt};
    if (!agent_fail) return {Outcome::FN, std::nullopt};
    if (!pair.agent.failed_step)
        throw ScoringError(fmt::format("case '{}': agent FAIL without failed step", pair.case_id));
    auto agent_step = *pair.agent.failed_step;
    auto ground_step = *pair.ground.failure_step;
    Alignment a = agent_step < ground_step ? Alignment::AFB : agent_step > ground_step ? Alignment::AFA : Alignment::AFC;
    return {Outcome::TP, a};
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    afb += o.afb;
    afa += o.afa;
    afc += o.afc;
    return *this;
}

ConfusionCounts aggregate(std::span<const ResultPair> pairs) {
    ConfusionCounts c;
    std::set<std::string_view> seen;
    for (const auto& p : pairs) {
        if (!seen.insert(p.case_id).second) throw ScoringError(fmt::format("duplicate case id '{}'", p.case_id));
        auto cl = classify(p);
        switch (cl.outcome) {
            case Outcome::TP: ++c.tp; break;
            case Outcome::TN: ++c.tn; break;
            case Outcome::FP: ++c.fp; break;
            case Outcome::FN: ++c.fn; break;
        }
        if (cl.alignment) {
            switch (*cl.alignment) {
                case Alignment::AFB: ++c.afb; break;
                case Alignment::AFA: ++c.afa; break;
                case Alignment::AFC: ++c.afc; break;
            }
        }
    }
    return c;
}

MetricsReport compute(const ConfusionCounts& c) {
    MetricsReport r;
    r.counts = c;
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.specificity = ratio(c.tn, c.tn + c.fp);
    r.sensitivity = ratio(c.tp, c.tp + c.fn);
    r.aer = ratio(c.afb, c.tp);
    r.her = ratio(c.afa, c.tp);
    r.smer = add(r.aer, r.her);
    r.truacc = ratio(c.afc + c.tn, c.total());
    return r;
}

std::vector<Metric> metric_values(const MetricsReport& r) {
    return {r.accuracy, r.specificity, r.sensitivity, r.aer, r.her, r.smer, r.truacc};
}

namespace {

// Mean over the applications where the metric is defined.
Metric mean(const std::vector<ReportRow>& rows, Metric MetricsReport::*field) {
    Rational sum;
    std::int64_t n = 0;
    for (const auto& row : rows) {
        if (const auto& m = row.metrics.*field) {
            sum = sum + *m;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

}  // namespace

ScoreTable score_by_app(std::span<const ResultPair> pairs, AverageMode mode) {
    // Duplicate ids are checked across the whole set, not per app.
    auto pooled = aggregate(pairs);

    std::map<std::string, std::vector<ResultPair>> by_app;
    for (const auto& p : pairs) by_app[p.app_id].push_back(p);

    ScoreTable table;
    for (const auto& [app, group] : by_app) table.apps.push_back({app, compute(aggregate(group))});

    table.average.label = "Average";
    table.average.metrics = compute(pooled);
    if (mode == AverageMode::Macro) {
        auto& m = table.average.metrics;
        m.accuracy = mean(table.apps, &MetricsReport::accuracy);
        m.specificity = mean(table.apps, &MetricsReport::specificity);
        m.sensitivity = mean(table.apps, &MetricsReport::sensitivity);
        m.aer = mean(table.apps, &MetricsReport::aer);
        m.her = mean(table.apps, &MetricsReport::her);
        m.smer = add(m.aer, m.her);
        m.truacc = mean(table.apps, &MetricsReport::truacc);
    }
    return table;
}

std::string render_table(const ScoreTable& table) {
    std::size_t label_w = std::string_view("Average").size();
    for (const auto& row : table.apps) label_w = std::max(label_w, row.label.size());

    std::string out = fmt::format("{:<{}}", "App", label_w);
    for (auto col : kMetricColumns) out += fmt::format("  {:>6}", col);
    out += "\n";

    auto emit = [&](const ReportRow& row) {
        out += fmt::format("{:<{}}", row.label, label_w);
        for (const auto& m : metric_values(row.metrics)) out += fmt::format("  {:>6}", render_metric(m));
        out += "\n";
    };
    for (const auto& row : table.apps) emit(row);
    if (!table.apps.empty()) emit(table.average);
    return out;
}

}  // namespace ata
