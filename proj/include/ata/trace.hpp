#pragma once

// Agent verdicts and the step-tagged execution trace every run produces.

#include "ata/testcase.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ata {

enum class FailureCause { Action, Assertion };
enum class VerdictFlag { CapExceeded, ParseDegraded };

std::string_view to_string(FailureCause c);
FailureCause failure_cause_from_string(std::string_view s);
std::string_view to_string(VerdictFlag f);
VerdictFlag verdict_flag_from_string(std::string_view s);

struct AgentVerdict {
    Verdict outcome = Verdict::Pass;
    std::optional<std::size_t> failed_step;
    std::optional<FailureCause> cause;
    std::set<VerdictFlag> flags;

    static AgentVerdict pass() { return {}; }
    static AgentVerdict fail(std::size_t step, FailureCause cause, std::set<VerdictFlag> flags = {}) {
        return {Verdict::Fail, step, cause, std::move(flags)};
    }
    /// outcome = FAIL ⇔ failed_step and cause are present.
    bool consistent() const {
        return (outcome == Verdict::Fail) == (failed_step.has_value() && cause.has_value());
    }
    bool operator==(const AgentVerdict&) const = default;
};

std::string describe(const AgentVerdict& v);

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
};

/// Advances by one per reading; makes traces byte-reproducible.
class LogicalClock : public Clock {
public:
    std::int64_t now_ms() override { return tick_++; }

private:
    std::int64_t tick_ = 0;
};

/// Milliseconds since construction.
class SteadyClock : public Clock {
public:
    SteadyClock() : start_(std::chrono::steady_clock::now()) {}
    std::int64_t now_ms() override;

private:
    std::chrono::steady_clock::time_point start_;
};

enum class EventKind { Prompt, Response, Command, Observation, Judgment, Memory, Invocation, Verdict, Note };

std::string_view to_string(EventKind k);

using Fields = std::vector<std::pair<std::string, std::string>>;

struct TraceEvent {
    std::size_t seq = 0;
    std::int64_t timestamp_ms = 0;
    /// nullopt = PREAMBLE (before the first step).
    std::optional<std::size_t> step;
    EventKind kind = EventKind::Note;
    std::string component;
    Fields fields;

    std::string field(std::string_view key) const;
};

std::string to_json_line(const TraceEvent& e, std::string_view case_id);

/// Append-only, strictly ordered event log. When a sink is attached every
/// event is written and flushed as it happens, so a crashed run still
/// leaves a readable prefix.
class ExecutionTrace {
public:
    ExecutionTrace(std::string case_id, Clock& clock, std::ostream* sink = nullptr)
        : case_id_(std::move(case_id)), clock_(&clock), sink_(sink) {}

    const TraceEvent& add(std::optional<std::size_t> step, EventKind kind, std::string component, Fields fields = {});

    const std::string& case_id() const { return case_id_; }
    /// Reads the trace's clock (memory timestamps share it).
    std::int64_t now() { return clock_->now_ms(); }
    const std::vector<TraceEvent>& events() const { return events_; }

    std::size_t count(EventKind kind, std::string_view component = {},
                      std::optional<std::size_t> step = std::nullopt) const;
    std::string to_jsonl() const;

private:
    std::string case_id_;
    Clock* clock_;
    std::ostream* sink_;
    std::vector<TraceEvent> events_;
};

}  // namespace ata
