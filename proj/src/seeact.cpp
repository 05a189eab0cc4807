#include "ata/seeact.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace ata {

std::string_view to_string(SeeActAction a) {
    switch (a) {
        case SeeActAction::Click: return "CLICK";
        case SeeActAction::Select: return "SELECT";
        case SeeActAction::Type: return "TYPE";
        case SeeActAction::PressEnter: return "PRESS ENTER";
        case SeeActAction::Terminate: return "TERMINATE";
        case SeeActAction::None: return "NONE";
    }
    return "NONE";
}

std::string_view to_string(FinalAnswerError::Code c) {
    switch (c) {
        case FinalAnswerError::Code::MissingBlock: return "MISSING_BLOCK";
        case FinalAnswerError::Code::UnknownAction: return "UNKNOWN_ACTION";
        case FinalAnswerError::Code::MissingValue: return "MISSING_VALUE";
    }
    return "MISSING_BLOCK";
}

FinalAnswerError::FinalAnswerError(Code code, std::string detail)
    : Error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

std::string_view to_string(AssertionStatus s) { return s == AssertionStatus::Verified ? "VERIFIED" : "NOT_VERIFIED"; }

bool AssertionStatuses::any_not_verified() const {
    return std::any_of(items.begin(), items.end(),
                       [](const AssertionCheck& c) { return c.status == AssertionStatus::NotVerified; });
}

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Drops markdown decoration around a line: bullets, emphasis, headings.
std::string_view strip_markup(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.front() == '*' || s.front() == '-' || s.front() == '#' || s.front() == '>' ||
                          s.front() == '`' || s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    return s;
}

std::string_view strip_value(std::string_view s) {
    s = text::trim(s);
    auto junk = [](char c) { return c == '*' || c == '`' || c == '"' || c == '\'' || c == ' ' || c == '\t'; };
    while (!s.empty() && junk(s.front())) s.remove_prefix(1);
    while (!s.empty() && (junk(s.back()) || s.back() == '.')) s.remove_suffix(1);
    return s;
}

// Value after `KEY:` when the line is a key line; nullopt otherwise.
std::optional<std::string_view> key_value(std::string_view line, std::string_view key) {
    auto body = strip_markup(line);
    if (!text::starts_with_icase(body, key)) return std::nullopt;
    auto rest = body.substr(key.size());
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    rest = text::trim(rest);
    if (rest.empty() || rest.front() != ':') return std::nullopt;
    rest.remove_prefix(1);
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    return text::trim(rest);
}

bool is_none(std::string_view v) {
    return v.empty() || text::iequals(v, "none") || text::iequals(v, "n/a") || text::iequals(v, "null");
}

std::optional<SeeActAction> parse_action(std::string_view raw) {
    std::string norm;
    for (char c : text::to_upper(strip_value(raw))) {
        char d = c == '_' ? ' ' : c;
        if (d == ' ' && (norm.empty() || norm.back() == ' ')) continue;
        norm += d;
    }
    static constexpr std::pair<std::string_view, SeeActAction> table[] = {
        {"PRESS ENTER", SeeActAction::PressEnter}, {"TERMINATE", SeeActAction::Terminate},
        {"CLICK", SeeActAction::Click},           {"SELECT", SeeActAction::Select},
        {"TYPE", SeeActAction::Type},             {"NONE", SeeActAction::None},
    };
    for (auto [word, action] : table) {
        if (!norm.starts_with(word)) continue;
        if (norm.size() == word.size() || !is_alpha(norm[word.size()])) return action;
    }
    return std::nullopt;
}

std::optional<char> parse_element(std::string_view raw) {
    auto v = strip_value(raw);
    if (v.size() >= 2 && v.front() == '(') v.remove_prefix(1);
    if (v.empty()) return std::nullopt;
    char c = v.front();
    if (c < 'A' || c > 'Z') return std::nullopt;
    if (v.size() > 1 && is_alpha(v[1])) return std::nullopt;
    return c;
}

bool is_section_header(std::string_view line) {
    auto body = strip_markup(line);
    return !body.empty() && body.front() == '[' && body.find(']') != std::string_view::npos;
}

// Lines of the last section whose header contains `marker`. The header
// line's own tail (after "]:") counts as the first body line.
std::optional<std::vector<std::string>> last_section(std::string_view response, std::string_view marker) {
    auto lines = text::split_lines(response);
    std::optional<std::size_t> header;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (text::icontains(lines[i], marker)) header = i;
    if (!header) return std::nullopt;

    std::vector<std::string> body;
    const auto& head = lines[*header];
    auto close = head.find(']');
    auto at = text::to_upper(head).find(text::to_upper(marker));
    auto tail_start = close != std::string::npos && close > at ? close + 1 : at + marker.size();
    std::string_view tail = std::string_view(head).substr(std::min(tail_start, head.size()));
    while (!tail.empty() && (tail.front() == ':' || tail.front() == '*' || tail.front() == ' ')) tail.remove_prefix(1);
    if (!tail.empty()) body.emplace_back(tail);
    for (std::size_t i = *header + 1; i < lines.size(); ++i) {
        if (is_section_header(lines[i]) || key_value(lines[i], "ELEMENT") || key_value(lines[i], "ACTION")) break;
        body.push_back(lines[i]);
    }
    return body;
}

std::optional<std::size_t> digits_at(std::string_view s, std::size_t pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '#' || s[pos] == ':' || s[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < s.size() && is_digit(s[pos]) && pos - start < 6) ++pos;
    if (pos == start) return std::nullopt;
    return std::stoul(std::string(s.substr(start, pos - start)));
}

// Position just after a whole-word, case-insensitive occurrence of `word`.
std::optional<std::size_t> find_word(std::string_view upper_line, std::string_view word, std::size_t from = 0) {
    for (auto pos = upper_line.find(word, from); pos != std::string_view::npos; pos = upper_line.find(word, pos + 1)) {
        bool left = pos == 0 || !is_alpha(upper_line[pos - 1]);
        auto end = pos + word.size();
        bool right = end >= upper_line.size() || !is_alpha(upper_line[end]);
        if (left && right) return end;
    }
    return std::nullopt;
}

std::string history_line(const SeeActTurn& t) {
    if (!t.parsed) return "Unreadable answer";
    if (!t.command) return t.parsed->action == SeeActAction::None ? "NONE" : "NONE (no offered element)";
    std::string line;
    if (t.command->kind == CommandKind::PressEnter) line = "PRESS ENTER";
    else line = fmt::format("{} -> {}", t.target_html, to_string(t.parsed->action));
    if (t.command->value) line += fmt::format(": {}", *t.command->value);
    if (t.result && !t.result->ok())
        line += fmt::format(" ({}: {})", to_string(t.result->status), t.result->note);
    return line;
}

}  // namespace

FinalAnswer parse_final_answer(std::string_view response) {
    auto lines = text::split_lines(response);
    std::optional<std::size_t> action_at;
    std::string_view action_raw;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto v = key_value(lines[i], "ACTION")) {
            action_at = i;
            action_raw = *v;
        }
    }
    if (!action_at) throw FinalAnswerError(FinalAnswerError::Code::MissingBlock, "no ACTION line");

    FinalAnswer out;
    auto action = parse_action(action_raw);
    if (!action)
        throw FinalAnswerError(FinalAnswerError::Code::UnknownAction, fmt::format("'{}'", text::trim(action_raw)));
    out.action = *action;

    for (std::size_t i = *action_at; i-- > 0;) {
        if (key_value(lines[i], "ACTION")) break;
        if (auto v = key_value(lines[i], "ELEMENT")) {
            out.element = parse_element(*v);
            break;
        }
    }
    for (std::size_t i = *action_at + 1; i < lines.size(); ++i) {
        if (key_value(lines[i], "ELEMENT") || key_value(lines[i], "ACTION")) break;
        if (auto v = key_value(lines[i], "VALUE")) {
            auto val = strip_value(*v);
            if (!is_none(val)) out.value = std::string(val);
            break;
        }
    }
    if ((out.action == SeeActAction::Type || out.action == SeeActAction::Select) && !out.value)
        throw FinalAnswerError(FinalAnswerError::Code::MissingValue, fmt::format("{} without VALUE", to_string(out.action)));
    return out;
}

AssertionStatuses extract_assertion_statuses(std::string_view response) {
    AssertionStatuses out;
    auto body = last_section(response, "TEST STEP ASSERTION CONTROL");
    if (!body) return out;
    for (const auto& raw : *body) {
        if (text::icontains(raw, "All assertions have been verified")) out.all_verified_sentence = true;
        auto line = strip_markup(raw);
        std::size_t i = 0;
        while (i < line.size() && is_digit(line[i])) ++i;
        if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
        auto content = line.substr(i + 1);
        auto upper = text::to_upper(content);

        std::optional<std::size_t> cut;
        AssertionStatus status = AssertionStatus::Verified;
        for (std::string_view neg : {"NOT VERIFIED", "NOT_VERIFIED"}) {
            if (auto end = find_word(upper, neg)) {
                auto start = *end - neg.size();
                if (!cut || start < *cut) cut = start;
                status = AssertionStatus::NotVerified;
            }
        }
        if (!cut) {
            auto end = find_word(upper, "VERIFIED");
            if (!end) continue;
            cut = *end - std::string_view("VERIFIED").size();
        }
        auto label = content.substr(0, *cut);
        auto junk = [](char c) { return c == ' ' || c == '\t' || c == ':' || c == '-' || c == '|' || c == '*' || c == '('; };
        while (!label.empty() && junk(label.front())) label.remove_prefix(1);
        while (!label.empty() && junk(label.back())) label.remove_suffix(1);
        out.items.push_back({std::string(label), status});
    }
    return out;
}

std::optional<std::size_t> extract_current_step(std::string_view response) {
    auto body = last_section(response, "TEST CASE PROGRESS");
    if (!body) return std::nullopt;
    std::optional<std::size_t> confirmed, marked;
    for (const auto& line : *body) {
        auto upper = text::to_upper(line);
        for (std::string_view phrase : {"CURRENT TEST STEP", "CURRENT STEP"}) {
            auto at = upper.find(phrase);
            if (at == std::string::npos) continue;
            auto pos = at + phrase.size();
            // "current test step is step 3", "current step: 3"
            while (pos < upper.size() && !is_digit(upper[pos])) ++pos;
            if (auto n = digits_at(upper, pos)) confirmed = n;
            break;
        }
        if (line.find("CURRENT") == std::string::npos || !find_word(line, "CURRENT")) continue;
        if (auto step_end = find_word(upper, "STEP"))
            if (auto n = digits_at(upper, *step_end)) marked = n;
    }
    return confirmed ? confirmed : marked;
}

std::size_t RunLimits::iterations_for(std::size_t step_count) const {
    if (max_iterations > 0) return max_iterations;
    return std::min<std::size_t>(4 * step_count, 40);
}

SeeActPrompt build_prompt(const TestCase& tc, const std::vector<SeeActTurn>& history, const MarkedObservation& marked,
                          const SeeActConfig& cfg) {
    SeeActPrompt out;
    const auto& elements = marked.observation.elements;
    auto offered = std::min(elements.size(), kMaxChoices);
    out.dropped = elements.size() - offered;

    std::string choices;
    for (std::size_t i = 0; i < offered; ++i) {
        char letter = static_cast<char>('A' + i);
        out.choices.emplace(letter, elements[i].mark_id);
        choices += fmt::format("{}. {}\n", letter, element_html(elements[i]));
    }
    out.none_letter = static_cast<char>('A' + offered);
    choices += fmt::format("{}. None of the other options match the correct element", out.none_letter);

    std::string previous = "None";
    if (!history.empty()) {
        previous.clear();
        for (const auto& t : history) previous += "\n" + history_line(t);
    }

    const auto& shot = marked.observation.screenshot;
    auto screenshot = shot.kind == ScreenshotArtifact::Kind::TextRender
                          ? ContentPart::text(shot.payload)
                          : ContentPart::image(shot.payload, screenshot_media_type(shot.payload));

    std::map<std::string, std::string> vars = {
        {"TEST", render_case_text(tc)},
        {"PREVIOUS_ACTIONS", previous},
        {"NONE_LETTER", std::string(1, out.none_letter)},
        {"CHOICES", choices},
    };
    ChatMessage msg{Role::User, render_template_parts(cfg.prompt.text, vars, screenshot)};
    out.request.messages.push_back(std::move(msg));
    out.request.model_id = cfg.model_id;
    out.request.temperature = cfg.temperature;
    out.request.max_tokens = cfg.max_tokens;
    return out;
}

SeeActResult run_seeact(const TestCase& tc, DriverSession& env, Backend& backend, const SeeActConfig& cfg,
                        ExecutionTrace& trace) {
    constexpr std::string_view who = "seeact";
    const std::size_t n = tc.steps.size();
    const std::size_t cap = cfg.limits.iterations_for(n);
    trace.add(std::nullopt, EventKind::Note, std::string(who),
              {{"agent", "seeact"}, {"template", cfg.prompt.name}, {"model", cfg.model_id},
               {"steps", std::to_string(n)}, {"max_iterations", std::to_string(cap)}});

    SeeActResult res;
    std::optional<AgentVerdict> verdict;
    std::size_t current = 1;
    std::optional<std::size_t> not_verified_step;
    std::size_t parse_failures = 0;

    try {
        for (std::size_t call = 1; call <= cap && !verdict; ++call) {
            auto obs = env.observe();
            auto marked = annotate_marks(obs);
            trace.add(current, EventKind::Observation, std::string(who),
                      {{"hash", observation_hash(obs)}, {"url", obs.url}, {"title", obs.title}});

            auto prompt = build_prompt(tc, res.turns, marked, cfg);
            if (prompt.dropped > 0)
                trace.add(current, EventKind::Note, std::string(who),
                          {{"warning", fmt::format("{} elements beyond the letter budget were dropped", prompt.dropped)}});
            trace.add(current, EventKind::Prompt, std::string(who),
                      {{"turn", std::to_string(call)},
                       {"fingerprint", fingerprint(prompt.request)},
                       {"canonical", canonical_request(prompt.request)}});

            auto reply = complete(backend, prompt.request);
            trace.add(current, EventKind::Response, std::string(who),
                      {{"turn", std::to_string(call)}, {"text", reply.text}});

            SeeActTurn turn;
            turn.prompt = prompt.request;
            turn.response_text = reply.text;

            auto progress = extract_current_step(reply.text);
            bool tracked = progress && *progress >= 1 && *progress <= n;
            if (tracked) current = *progress;
            turn.step = current;

            turn.assertions = extract_assertion_statuses(reply.text);
            if (turn.assertions.any_not_verified()) {
                if (not_verified_step == current) verdict = AgentVerdict::fail(current, FailureCause::Assertion);
                not_verified_step = current;
            } else {
                not_verified_step.reset();
            }

            if (!verdict) {
                try {
                    turn.parsed = parse_final_answer(reply.text);
                    parse_failures = 0;
                } catch (const FinalAnswerError& e) {
                    turn.parse_error = e.what();
                    trace.add(current, EventKind::Note, std::string(who), {{"parse_error", e.what()}});
                    if (++parse_failures > cfg.limits.parse_retries)
                        verdict = AgentVerdict::fail(current, FailureCause::Action,
                                                     {VerdictFlag::CapExceeded, VerdictFlag::ParseDegraded});
                }
            }

            if (!verdict && turn.parsed) {
                const auto& ans = *turn.parsed;
                switch (ans.action) {
                    case SeeActAction::Terminate:
                        if (current < n) verdict = AgentVerdict::fail(current, FailureCause::Action);
                        else if (turn.assertions.any_not_verified())
                            verdict = AgentVerdict::fail(n, FailureCause::Assertion);
                        else verdict = AgentVerdict::pass();
                        break;
                    case SeeActAction::None: break;
                    case SeeActAction::PressEnter: turn.command = BrowserCommand::press_enter(); break;
                    case SeeActAction::Click:
                    case SeeActAction::Type:
                    case SeeActAction::Select: {
                        auto it = ans.element ? prompt.choices.find(*ans.element) : prompt.choices.end();
                        if (it == prompt.choices.end()) {
                            trace.add(current, EventKind::Note, std::string(who),
                                      {{"warning", "answer names no offered element; nothing executed"}});
                            break;
                        }
                        auto driver = marked.driver_id(it->second).value_or(it->second);
                        turn.target_html = element_html(*marked.element(it->second));
                        if (ans.action == SeeActAction::Click) turn.command = BrowserCommand::click(driver);
                        else if (ans.action == SeeActAction::Type) turn.command = BrowserCommand::type(driver, *ans.value);
                        else turn.command = BrowserCommand::select(driver, *ans.value);
                        break;
                    }
                }
                if (turn.command) {
                    turn.result = env.execute(*turn.command);
                    trace.add(current, EventKind::Command, std::string(who),
                              {{"command", describe(*turn.command)},
                               {"element", ans.element ? std::string(1, *ans.element) : "NONE"},
                               {"status", std::string(to_string(turn.result->status))},
                               {"note", turn.result->note}});
                    // Own counter when the reply's progress section is unreadable.
                    if (turn.result->ok() && !tracked) current = std::min(current + 1, n);
                }
            }
            res.turns.push_back(std::move(turn));
        }
    } catch (const ProviderError& e) {
        trace.add(current, EventKind::Note, std::string(who), {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    } catch (const TimeoutError& e) {
        trace.add(current, EventKind::Note, std::string(who), {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    } catch (const DriverError& e) {
        trace.add(current, EventKind::Note, std::string(who), {{"error", e.what()}});
        verdict = AgentVerdict::fail(current, FailureCause::Action);
    }

    if (!verdict) verdict = AgentVerdict::fail(current, FailureCause::Action, {VerdictFlag::CapExceeded});
    res.verdict = *verdict;
    trace.add(current, EventKind::Verdict, std::string(who), {{"verdict", describe(res.verdict)}});
    return res;
}

}  // namespace ata
