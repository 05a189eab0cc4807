#include "ata/pinata.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <climits>
#include <set>

namespace ata {

std::string_view to_string(ActionStatus s) {
    switch (s) {
        case ActionStatus::Pending: return "PENDING";
        case ActionStatus::Done: return "DONE";
        case ActionStatus::Infeasible: return "INFEASIBLE";
    }
    return "PENDING";
}

std::string_view to_string(AssertionPhase s) {
    switch (s) {
        case AssertionPhase::Pending: return "PENDING";
        case AssertionPhase::Verified: return "VERIFIED";
        case AssertionPhase::NotVerified: return "NOT_VERIFIED";
        case AssertionPhase::None: return "NONE";
    }
    return "PENDING";
}

std::string_view to_string(Judgment j) {
    switch (j) {
        case Judgment::Accept: return "ACCEPT";
        case Judgment::Retry: return "RETRY";
        case Judgment::Infeasible: return "INFEASIBLE";
    }
    return "RETRY";
}

bool AssertorReport::verified() const {
    return !degraded && !atomic.empty() &&
           std::all_of(atomic.begin(), atomic.end(),
                       [](const AtomicAssertion& a) { return a.status == AssertionStatus::Verified; });
}

namespace {

constexpr std::string_view kUngroundable = "ungroundable";

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view clean(std::string_view s) {
    s = text::trim(s);
    auto junk = [](char c) { return c == ',' || c == ';' || c == '*' || c == '`' || c == '"' || c == ' ' || c == '\t'; };
    while (!s.empty() && junk(s.back())) s.remove_suffix(1);
    while (!s.empty() && junk(s.front())) s.remove_prefix(1);
    return s;
}

bool is_none(std::string_view v) { return v.empty() || text::iequals(v, "none") || text::iequals(v, "n/a"); }

// All integers in `s`, in order (at most `limit`).
std::vector<int> integers(std::string_view s, std::size_t limit) {
    std::vector<int> out;
    for (std::size_t i = 0; i < s.size() && out.size() < limit;) {
        bool neg = s[i] == '-' && i + 1 < s.size() && is_digit(s[i + 1]);
        if (!is_digit(s[i]) && !neg) {
            ++i;
            continue;
        }
        std::size_t j = i + (neg ? 1 : 0);
        long long v = 0;
        while (j < s.size() && is_digit(s[j])) {
            v = std::min<long long>(v * 10 + (s[j] - '0'), INT_MAX);
            ++j;
        }
        out.push_back(static_cast<int>(neg ? -v : v));
        i = j;
    }
    return out;
}

// KEY: value pairs; keys are the uppercase words below, found at a line
// start or after a separator. A value runs to the next key or line end.
std::map<std::string, std::string> reply_fields(std::string_view reply) {
    static constexpr std::string_view keys[] = {"STATUS", "MARK", "POINT", "ACTION", "VALUE", "REASON", "DECISION"};
    struct Hit {
        std::size_t at, value_start;
        std::string_view key;
    };
    std::map<std::string, std::string> out;
    for (const auto& line : text::split_lines(reply)) {
        std::vector<Hit> hits;
        for (auto key : keys) {
            for (auto pos = line.find(key); pos != std::string::npos; pos = line.find(key, pos + 1)) {
                bool left = pos == 0 || line[pos - 1] == ' ' || line[pos - 1] == ',' || line[pos - 1] == '*' ||
                            line[pos - 1] == '-' || line[pos - 1] == ';' || line[pos - 1] == '\t';
                auto q = pos + key.size();
                while (q < line.size() && (line[q] == '*' || line[q] == ' ')) ++q;
                if (!left || q >= line.size() || line[q] != ':') continue;
                hits.push_back({pos, q + 1, key});
            }
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.at < b.at; });
        for (std::size_t i = 0; i < hits.size(); ++i) {
            auto end = i + 1 < hits.size() ? hits[i + 1].at : line.size();
            if (hits[i].value_start > end) continue;
            out[std::string(hits[i].key)] =
                std::string(clean(std::string_view(line).substr(hits[i].value_start, end - hits[i].value_start)));
        }
    }
    return out;
}

std::optional<CommandKind> parse_kind(std::string_view raw) {
    auto norm = text::to_upper(clean(raw));
    std::replace(norm.begin(), norm.end(), '_', ' ');
    if (norm.starts_with("PRESS ENTER") || norm == "ENTER") return CommandKind::PressEnter;
    static constexpr std::pair<std::string_view, CommandKind> table[] = {
        {"CLICK", CommandKind::Click},     {"TYPE", CommandKind::Type},         {"SELECT", CommandKind::Select},
        {"NAVIGATE", CommandKind::Navigate}, {"SCROLL", CommandKind::Scroll},
    };
    for (auto [word, kind] : table)
        if (norm.starts_with(word) && (norm.size() == word.size() || !std::isalpha(static_cast<unsigned char>(norm[word.size()]))))
            return kind;
    return std::nullopt;
}

std::string page_summary(const PageObservation& obs) {
    return fmt::format("\"{}\" {} ({} elements, state {})", obs.title, obs.url, obs.elements.size(),
                       observation_hash(obs).substr(0, 12));
}

std::string element_list(const MarkedObservation& marked) {
    std::string out;
    for (const auto& e : marked.observation.elements)
        out += fmt::format("[{}] {} at ({}, {}) size {}x{}\n", e.mark_id, element_html(e), e.bbox.x, e.bbox.y,
                           e.bbox.width, e.bbox.height);
    if (out.empty()) return "(none)";
    out.pop_back();
    return out;
}

ContentPart screenshot_part(const ScreenshotArtifact& shot) {
    if (shot.kind == ScreenshotArtifact::Kind::TextRender) return ContentPart::text(shot.payload);
    return ContentPart::image(shot.payload, screenshot_media_type(shot.payload));
}

std::string retry_note(const std::string& error) {
    if (error.empty()) return {};
    return fmt::format("Your previous answer could not be used ({}). Follow the format exactly.\n\n", error);
}

ChatRequest make_request(std::vector<ContentPart> parts, const std::string& model, const OrchestratorConfig& cfg) {
    ChatRequest req;
    req.messages.push_back({Role::User, std::move(parts)});
    req.model_id = model;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    return req;
}

ChatResponse ask(Backend& backend, const ChatRequest& req, std::size_t step, const char* component, int attempt,
                 ExecutionTrace& trace) {
    trace.add(step, EventKind::Prompt, component,
              {{"attempt", std::to_string(attempt)},
               {"fingerprint", fingerprint(req)},
               {"canonical", canonical_request(req)}});
    auto reply = complete(backend, req);
    trace.add(step, EventKind::Response, component, {{"attempt", std::to_string(attempt)}, {"text", reply.text}});
    return reply;
}

std::string profile(const PinataContext& ctx) {
    return std::string(text::trim(ctx.cfg.templates.profile.text));
}

}  // namespace

GroundingIntent parse_grounding_reply(std::string_view reply) {
    auto f = reply_fields(reply);
    GroundingIntent out;
    if (f.contains("REASON")) out.reason = f["REASON"];
    if (f.contains("STATUS") && text::starts_with_icase(f["STATUS"], "BLOCKED")) {
        out.blocked = true;
        return out;
    }
    if (f.contains("MARK") && !is_none(f["MARK"])) {
        auto nums = integers(f["MARK"], 1);
        if (nums.empty()) throw GroundingError(fmt::format("unreadable MARK '{}'", f["MARK"]));
        out.mark = nums[0];
    }
    if (f.contains("POINT") && !is_none(f["POINT"])) {
        auto nums = integers(f["POINT"], 2);
        if (nums.size() < 2) throw GroundingError(fmt::format("unreadable POINT '{}'", f["POINT"]));
        out.point = Point{nums[0], nums[1]};
    }
    if (f.contains("VALUE") && !is_none(f["VALUE"])) out.value = f["VALUE"];
    if (f.contains("ACTION") && !is_none(f["ACTION"])) {
        out.kind = parse_kind(f["ACTION"]);
        if (!out.kind) throw GroundingError(fmt::format("unknown ACTION '{}'", f["ACTION"]));
    } else if (out.mark || out.point) {
        out.kind = CommandKind::Click;
    } else {
        throw GroundingError("no ACTION in reply");
    }
    bool needs_value = *out.kind == CommandKind::Type || *out.kind == CommandKind::Select ||
                       *out.kind == CommandKind::Navigate;
    if (needs_value && !out.value) throw GroundingError(fmt::format("{} without VALUE", to_string(*out.kind)));
    bool needs_target = *out.kind == CommandKind::Click || *out.kind == CommandKind::Type ||
                        *out.kind == CommandKind::Select;
    if (needs_target && !out.mark && !out.point) throw GroundingError(fmt::format("{} without MARK or POINT", to_string(*out.kind)));
    return out;
}

GroundedCommand ground(const GroundingIntent& intent, const MarkedObservation& marked) {
    if (intent.blocked || !intent.kind) throw GroundingError("nothing to ground");
    GroundedCommand out;
    out.command.kind = *intent.kind;
    out.command.value = intent.value;
    out.path = "none";
    switch (*intent.kind) {
        case CommandKind::PressEnter:
        case CommandKind::Scroll:
        case CommandKind::Noop:
            out.command.value.reset();
            return out;
        case CommandKind::Navigate: return out;
        default: break;
    }

    if (intent.mark) {
        auto driver = marked.driver_id(*intent.mark);
        if (!driver)
            throw GroundingError(fmt::format("mark {} out of range (1..{})", *intent.mark, marked.marks.size()));
        out.command.target = *driver;
        out.path = "mark";
        return out;
    }
    if (!intent.point) throw GroundingError("no target");

    auto p = *intent.point;
    const auto& obs = marked.observation;
    bool off_page = p.x < 0 || p.y < 0 || (obs.page_width > 0 && p.x >= obs.page_width) ||
                    (obs.page_height > 0 && p.y >= obs.page_height);
    if (off_page)
        throw GroundingError(
            fmt::format("point ({}, {}) outside page {}x{}", p.x, p.y, obs.page_width, obs.page_height));

    const ElementDescriptor* hit = nullptr;
    for (const auto& e : obs.elements) {
        if (!e.bbox.contains(p.x, p.y)) continue;
        auto area = static_cast<long long>(e.bbox.width) * e.bbox.height;
        if (!hit || area < static_cast<long long>(hit->bbox.width) * hit->bbox.height) hit = &e;
    }
    if (hit) {
        out.command.target = marked.driver_id(hit->mark_id).value_or(hit->mark_id);
        out.path = "bbox";
    } else {
        out.command.target = p;
        out.path = "point";
    }
    return out;
}

Judgment parse_judgment(std::string_view reply) {
    auto f = reply_fields(reply);
    if (!f.contains("DECISION")) throw GroundingError("no DECISION in reply");
    auto v = text::to_upper(f["DECISION"]);
    if (v.starts_with("ACCEPT")) return Judgment::Accept;
    if (v.starts_with("RETRY")) return Judgment::Retry;
    if (v.starts_with("INFEASIBLE")) return Judgment::Infeasible;
    throw GroundingError(fmt::format("unknown DECISION '{}'", f["DECISION"]));
}

std::vector<AtomicAssertion> parse_assertor_reply(std::string_view reply) {
    std::vector<AtomicAssertion> out;
    for (const auto& raw : text::split_lines(reply)) {
        auto line = text::trim(raw);
        while (!line.empty() && (line.front() == '*' || line.front() == '-' || line.front() == ' ')) line.remove_prefix(1);
        std::size_t i = 0;
        while (i < line.size() && is_digit(line[i])) ++i;
        if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
        auto body = line.substr(i + 1);

        std::vector<std::string_view> cols;
        std::size_t start = 0;
        for (std::size_t k = 0; k <= body.size(); ++k) {
            if (k == body.size() || body[k] == '|') {
                cols.push_back(text::trim(body.substr(start, k - start)));
                start = k + 1;
            }
        }
        if (cols.size() < 2 || cols[0].empty()) continue;
        auto status = text::to_upper(clean(cols[1]));
        std::replace(status.begin(), status.end(), '_', ' ');
        AtomicAssertion a;
        a.text = std::string(cols[0]);
        if (status == "VERIFIED") a.status = AssertionStatus::Verified;
        else if (status == "NOT VERIFIED") a.status = AssertionStatus::NotVerified;
        else continue;
        for (std::size_t k = 2; k < cols.size(); ++k) {
            if (!a.justification.empty()) a.justification += " | ";
            a.justification += std::string(cols[k]);
        }
        out.push_back(std::move(a));
    }
    if (out.empty()) throw GroundingError("no numbered assertion lines");
    return out;
}

ActorFeedback act(const Step& step, DriverSession& env, Backend& backend, PinataContext& ctx) {
    constexpr const char* who = "actor";
    auto& trace = ctx.trace;
    const auto idx = step.index;
    trace.add(idx, EventKind::Invocation, who, {{"call", "act"}});

    auto obs = env.observe();
    auto marked = annotate_marks(obs);
    trace.add(idx, EventKind::Observation, who, {{"hash", observation_hash(obs)}, {"url", obs.url}, {"title", obs.title}});
    auto memory_text = render_memory_context(ctx.memory, idx, ctx.cfg.memory_budget);
    ctx.memory.append(idx, MemoryKind::Observation, "actor sees page " + page_summary(obs), trace.now());
    trace.add(idx, EventKind::Memory, who, {{"kind", "OBSERVATION"}, {"entries", std::to_string(ctx.memory.size())}});

    auto finish = [&](ActorFeedback fb) {
        ctx.memory.append(idx, MemoryKind::Action, fb.narration, trace.now());
        trace.add(idx, EventKind::Memory, who, {{"kind", "ACTION"}, {"entries", std::to_string(ctx.memory.size())}});
        return fb;
    };

    std::string error;
    for (int attempt = 1; attempt <= 1 + ctx.cfg.parse_retries; ++attempt) {
        std::map<std::string, std::string> vars = {
            {"PROFILE", profile(ctx)},         {"STEP", std::to_string(idx)},
            {"ACTION", step.action},           {"MEMORY", memory_text},
            {"TITLE", obs.title},              {"URL", obs.url},
            {"ELEMENTS", element_list(marked)}, {"FEEDBACK", retry_note(error)},
        };
        auto req = make_request(render_template_parts(ctx.cfg.templates.actor.text, vars,
                                                      screenshot_part(marked.observation.screenshot)),
                                ctx.cfg.actor_model, ctx.cfg);
        auto reply = ask(backend, req, idx, who, attempt, trace);

        GroundedCommand g;
        try {
            auto intent = parse_grounding_reply(reply.text);
            if (intent.blocked) {
                ActorFeedback fb;
                fb.narration = fmt::format("BLOCKED: {}", intent.reason.empty() ? "actor could not act" : intent.reason);
                return finish(fb);
            }
            g = ground(intent, marked);
            if (auto bad = check_command(g.command)) throw GroundingError(*bad);
        } catch (const GroundingError& e) {
            error = e.what();
            trace.add(idx, EventKind::Note, who, {{"grounding_error", error}});
            continue;
        }

        auto result = env.execute(g.command);
        trace.add(idx, EventKind::Command, who,
                  {{"command", describe(g.command)},
                   {"grounding", g.path},
                   {"status", std::string(to_string(result.status))},
                   {"note", result.note}});
        ActorFeedback fb;
        fb.outcome = result.ok() ? ActorFeedback::Outcome::Executed : ActorFeedback::Outcome::Blocked;
        fb.command = g.command;
        fb.result = result;
        fb.narration = fmt::format("{} via {} -> {}{}", describe(g.command), g.path, to_string(result.status),
                                   result.note.empty() ? "" : ": " + result.note);
        return finish(fb);
    }
    ActorFeedback fb;
    fb.narration = std::string(kUngroundable);
    return finish(fb);
}

Judgment judge_feedback(const Step& step, const ActorFeedback& feedback, const PageObservation& before,
                        const PageObservation& after, int attempt, Backend& backend, PinataContext& ctx) {
    constexpr const char* who = "orchestrator";
    auto& trace = ctx.trace;
    const auto idx = step.index;
    trace.add(idx, EventKind::Invocation, who, {{"call", "judge"}, {"attempt", std::to_string(attempt)}});

    auto record = [&](Judgment j, const char* source) {
        ctx.memory.append(idx, MemoryKind::Judgment, fmt::format("attempt {}: {}", attempt, to_string(j)), trace.now());
        trace.add(idx, EventKind::Judgment, who,
                  {{"attempt", std::to_string(attempt)}, {"decision", std::string(to_string(j))}, {"source", source}});
        return j;
    };

    bool unchanged = observation_hash(before) == observation_hash(after);
    if (!feedback.executed() && attempt >= ctx.cfg.max_retries && unchanged) return record(Judgment::Infeasible, "rule");

    auto memory_text = render_memory_context(ctx.memory, idx, ctx.cfg.memory_budget);
    std::string error;
    for (int call = 1; call <= 1 + ctx.cfg.parse_retries; ++call) {
        std::map<std::string, std::string> vars = {
            {"PROFILE", profile(ctx)},
            {"STEP", std::to_string(idx)},
            {"ATTEMPT", std::to_string(attempt)},
            {"MAX_ATTEMPTS", std::to_string(ctx.cfg.max_retries)},
            {"ACTION", step.action},
            {"OUTCOME", feedback.executed() ? "EXECUTED" : "BLOCKED"},
            {"NARRATION", feedback.narration},
            {"BEFORE", page_summary(before)},
            {"AFTER", page_summary(after)},
            {"MEMORY", memory_text},
            {"FEEDBACK", retry_note(error)},
        };
        auto req = make_request({ContentPart::text(render_template(ctx.cfg.templates.judge.text, vars))},
                                ctx.cfg.orchestrator_model, ctx.cfg);
        auto reply = ask(backend, req, idx, who, call, trace);
        try {
            auto j = parse_judgment(reply.text);
            // Only executed feedback can be accepted.
            if (j == Judgment::Accept && !feedback.executed()) return record(Judgment::Retry, "coerced");
            return record(j, "llm");
        } catch (const GroundingError& e) {
            error = e.what();
            trace.add(idx, EventKind::Note, who, {{"parse_error", error}});
        }
    }
    return record(Judgment::Retry, "unparsable");
}

AssertorReport assert_step(const Step& step, const PageObservation& obs, Backend& backend, PinataContext& ctx) {
    constexpr const char* who = "assertor";
    auto& trace = ctx.trace;
    const auto idx = step.index;
    const std::string assertion = step.assertion.value_or("");
    trace.add(idx, EventKind::Invocation, who, {{"call", "assert"}});
    trace.add(idx, EventKind::Observation, who, {{"hash", observation_hash(obs)}, {"url", obs.url}, {"title", obs.title}});

    auto memory_text = render_memory_context(ctx.memory, idx, ctx.cfg.memory_budget);
    ctx.memory.append(idx, MemoryKind::Observation, "assertor sees page " + page_summary(obs), trace.now());

    AssertorReport report;
    std::string error;
    for (int call = 1; call <= 1 + ctx.cfg.parse_retries; ++call) {
        std::map<std::string, std::string> vars = {
            {"PROFILE", profile(ctx)}, {"STEP", std::to_string(idx)}, {"ACTION", step.action},
            {"ASSERTION", assertion},  {"MEMORY", memory_text},       {"FEEDBACK", retry_note(error)},
        };
        auto req = make_request(
            render_template_parts(ctx.cfg.templates.assertor.text, vars, screenshot_part(obs.screenshot)),
            ctx.cfg.assertor_model, ctx.cfg);
        auto reply = ask(backend, req, idx, who, call, trace);
        try {
            report.atomic = parse_assertor_reply(reply.text);
            break;
        } catch (const GroundingError& e) {
            error = e.what();
            trace.add(idx, EventKind::Note, who, {{"parse_error", error}});
        }
    }
    report.degraded = report.atomic.empty();

    if (report.degraded) {
        ctx.memory.append(idx, MemoryKind::Assertion, "unreadable assertor report: NOT VERIFIED", trace.now());
    }
    for (const auto& a : report.atomic) {
        ctx.memory.append(idx, MemoryKind::Assertion,
                          fmt::format("{}: {}{}", a.text, a.status == AssertionStatus::Verified ? "VERIFIED" : "NOT VERIFIED",
                                      a.justification.empty() ? "" : " (" + a.justification + ")"),
                          trace.now());
    }
    trace.add(idx, EventKind::Judgment, who,
              {{"overall", report.verified() ? "VERIFIED" : "NOT_VERIFIED"},
               {"atomic", std::to_string(report.atomic.size())},
               {"degraded", report.degraded ? "true" : "false"}});
    return report;
}

PinataResult orchestrate(const TestCase& tc, DriverSession& env, PinataBackends backends, const OrchestratorConfig& cfg,
                         ExecutionTrace& trace) {
    constexpr const char* who = "orchestrator";
    PinataContext ctx{cfg, trace, {}};
    PinataResult res;
    trace.add(std::nullopt, EventKind::Note, who,
              {{"agent", "pinata"},
               {"steps", std::to_string(tc.steps.size())},
               {"max_retries", std::to_string(cfg.max_retries)},
               {"memory_budget", std::to_string(cfg.memory_budget)},
               {"templates", fmt::format("{},{},{},{}", cfg.templates.profile.name, cfg.templates.actor.name,
                                         cfg.templates.judge.name, cfg.templates.assertor.name)}});

    std::optional<AgentVerdict> verdict;
    std::size_t current = tc.steps.empty() ? 1 : tc.steps.front().index;

    auto log_progress = [&](const StepProgress& sp) {
        trace.add(sp.step_index, EventKind::Note, who,
                  {{"action_status", std::string(to_string(sp.action_status))},
                   {"assertion_status", std::string(to_string(sp.assertion_status))},
                   {"attempts_action", std::to_string(sp.attempts_action)},
                   {"attempts_assert", std::to_string(sp.attempts_assert)}});
    };

    try {
        for (const auto& step : tc.steps) {
            current = step.index;
            StepProgress sp;
            sp.step_index = step.index;
            sp.assertion_status = step.assertion ? AssertionPhase::Pending : AssertionPhase::None;
            std::set<VerdictFlag> flags;

            while (sp.action_status == ActionStatus::Pending) {
                auto before = env.observe();
                ++sp.attempts_action;
                auto fb = act(step, env, backends.actor, ctx);
                if (fb.narration == kUngroundable) flags.insert(VerdictFlag::ParseDegraded);
                auto after = env.observe();
                auto j = judge_feedback(step, fb, before, after, sp.attempts_action, backends.orchestrator, ctx);
                if (j == Judgment::Accept) {
                    sp.action_status = ActionStatus::Done;
                } else if (j == Judgment::Infeasible || sp.attempts_action >= cfg.max_retries) {
                    sp.action_status = ActionStatus::Infeasible;
                }
            }
            if (sp.action_status == ActionStatus::Infeasible) {
                res.progress.push_back(sp);
                log_progress(sp);
                verdict = AgentVerdict::fail(step.index, FailureCause::Action, flags);
                break;
            }

            if (step.assertion && !text::trim(*step.assertion).empty()) {
                while (sp.assertion_status == AssertionPhase::Pending) {
                    auto obs = env.observe();  // fresh observation per attempt
                    ++sp.attempts_assert;
                    auto report = assert_step(step, obs, backends.assertor, ctx);
                    if (report.degraded) flags.insert(VerdictFlag::ParseDegraded);
                    if (report.verified()) sp.assertion_status = AssertionPhase::Verified;
                    else if (sp.attempts_assert >= cfg.max_retries) sp.assertion_status = AssertionPhase::NotVerified;
                }
            } else {
                sp.assertion_status = AssertionPhase::None;
            }
            res.progress.push_back(sp);
            log_progress(sp);
            if (sp.assertion_status == AssertionPhase::NotVerified) {
                verdict = AgentVerdict::fail(step.index, FailureCause::Assertion, flags);
                break;
            }
        }
    } catch (const ProviderError& e) {
        trace.add(current, EventKind::Note, who, {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    } catch (const TimeoutError& e) {
        trace.add(current, EventKind::Note, who, {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    } catch (const DriverError& e) {
        trace.add(current, EventKind::Note, who, {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    }

    res.verdict = verdict.value_or(AgentVerdict::pass());
    res.memory_entries = ctx.memory.size();
    trace.add(res.verdict.failed_step.value_or(current), EventKind::Verdict, who, {{"verdict", describe(res.verdict)}});
    return res;
}

}  // namespace ata
