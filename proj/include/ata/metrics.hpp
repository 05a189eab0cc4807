#pragma once

// Verdict-alignment and step-alignment scoring of agent results against
// human ground truth. All arithmetic is exact; decimals appear only when a
// report is rendered.

#include "ata/trace.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ata {

class ScoringError : public Error {
public:
    using Error::Error;
};

/// Normalised fraction with a positive denominator.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator/(std::int64_t k) const;
    bool operator==(const Rational&) const = default;
    std::strong_ordering operator<=>(const Rational& o) const;

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    /// "n/d" (or "n" when whole).
    std::string str() const;
    /// Two decimals, round half up.
    std::string fixed2() const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// nullopt = UNDEFINED (zero denominator).
using Metric = std::optional<Rational>;

/// "n/a" for UNDEFINED, else two decimals.
std::string render_metric(const Metric& m);

struct GroundTruth {
    Verdict verdict = Verdict::Pass;
    std::optional<std::size_t> failure_step;
};

struct ResultPair {
    std::string case_id;
    std::string app_id;
    GroundTruth ground;
    AgentVerdict agent;
};

enum class Outcome { TP, TN, FP, FN };
/// Step alignment of a true positive: agent fails before, after, or at the
/// human's failure step.
enum class Alignment { AFB, AFA, AFC };

std::string_view to_string(Outcome o);
std::string_view to_string(Alignment a);

struct Classification {
    Outcome outcome = Outcome::TN;
    std::optional<Alignment> alignment;
};

/// Positive class is FAIL. Throws ScoringError for malformed pairs.
Classification classify(const ResultPair& pair);

struct ConfusionCounts {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::int64_t afb = 0, afa = 0, afc = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

/// Throws ScoringError on duplicate case ids.
ConfusionCounts aggregate(std::span<const ResultPair> pairs);

struct MetricsReport {
    Metric accuracy, specificity, sensitivity, aer, her, smer, truacc;
    ConfusionCounts counts;
};

MetricsReport compute(const ConfusionCounts& counts);

enum class AverageMode { Pooled, Macro };

struct ReportRow {
    std::string label;
    MetricsReport metrics;
};

/// Per-application rows (sorted by app id) plus an "Average" row.
struct ScoreTable {
    std::vector<ReportRow> apps;
    ReportRow average;
};

ScoreTable score_by_app(std::span<const ResultPair> pairs, AverageMode mode = AverageMode::Pooled);

/// Metric columns, in report order.
inline constexpr std::string_view kMetricColumns[] = {"Acc", "Spec", "Sens", "AER", "HER", "SMER", "TruAcc"};

std::vector<Metric> metric_values(const MetricsReport& r);

/// Aligned text grid; always has a header, the Average row only when there
/// is at least one application row.
std::string render_table(const ScoreTable& table);

}  // namespace ata
