#include "ata/trace.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace ata {

std::string_view to_string(FailureCause c) { return c == FailureCause::Action ? "ACTION" : "ASSERTION"; }

FailureCause failure_cause_from_string(std::string_view s) {
    if (text::iequals(s, "ACTION")) return FailureCause::Action;
    if (text::iequals(s, "ASSERTION")) return FailureCause::Assertion;
    throw Error(fmt::format("unknown failure cause '{}'", s));
}

std::string_view to_string(VerdictFlag f) { return f == VerdictFlag::CapExceeded ? "CAP_EXCEEDED" : "PARSE_DEGRADED"; }

VerdictFlag verdict_flag_from_string(std::string_view s) {
    if (s == "CAP_EXCEEDED") return VerdictFlag::CapExceeded;
    if (s == "PARSE_DEGRADED") return VerdictFlag::ParseDegraded;
    throw Error(fmt::format("unknown verdict flag '{}'", s));
}

std::string describe(const AgentVerdict& v) {
    if (v.outcome == Verdict::Pass) return "PASS";
    std::string out = fmt::format("FAIL@{} cause={}", v.failed_step.value_or(0),
                                  v.cause ? to_string(*v.cause) : std::string_view("?"));
    for (auto f : v.flags) out += fmt::format(" {}", to_string(f));
    return out;
}

std::int64_t SteadyClock::now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Prompt: return "prompt";
        case EventKind::Response: return "response";
        case EventKind::Command: return "command";
        case EventKind::Observation: return "observation";
        case EventKind::Judgment: return "judgment";
        case EventKind::Memory: return "memory";
        case EventKind::Invocation: return "invocation";
        case EventKind::Verdict: return "verdict";
        case EventKind::Note: return "note";
    }
    return "note";
}

std::string TraceEvent::field(std::string_view key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return v;
    return {};
}

std::string to_json_line(const TraceEvent& e, std::string_view case_id) {
    // ordered_json keeps insertion order so lines are byte-stable.
    nlohmann::ordered_json j;
    j["case_id"] = case_id;
    j["seq"] = e.seq;
    j["ts"] = e.timestamp_ms;
    if (e.step) j["step"] = *e.step;
    else j["step"] = "PREAMBLE";
    j["kind"] = to_string(e.kind);
    j["component"] = e.component;
    nlohmann::ordered_json data = nlohmann::ordered_json::object();
    for (const auto& [k, v] : e.fields) data[k] = v;
    j["data"] = data;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

const TraceEvent& ExecutionTrace::add(std::optional<std::size_t> step, EventKind kind, std::string component,
                                      Fields fields) {
    TraceEvent e;
    e.seq = events_.size() + 1;
    e.timestamp_ms = clock_->now_ms();
    e.step = step;
    e.kind = kind;
    e.component = std::move(component);
    e.fields = std::move(fields);
    events_.push_back(std::move(e));
    if (sink_) {
        *sink_ << to_json_line(events_.back(), case_id_) << '\n';
        sink_->flush();
    }
    return events_.back();
}

std::size_t ExecutionTrace::count(EventKind kind, std::string_view component, std::optional<std::size_t> step) const {
    std::size_t n = 0;
    for (const auto& e : events_) {
        if (e.kind != kind) continue;
        if (!component.empty() && e.component != component) continue;
        if (step && e.step != step) continue;
        ++n;
    }
    return n;
}

std::string ExecutionTrace::to_jsonl() const {
    std::string out;
    for (const auto& e : events_) out += to_json_line(e, case_id_) + "\n";
    return out;
}

}  // namespace ata
