#include "ata/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ata {

namespace {

constexpr int kMargin = 24;
constexpr int kHeaderHeight = 56;
constexpr int kRowHeight = 44;
constexpr int kElementHeight = 32;
constexpr int kMinPageHeight = 720;

// Splits an element line into words, keeping "quoted strings" (with \"
// escapes) and key="quoted values" intact.
std::vector<std::string> tokenize(std::string_view s, std::size_t line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        if (i >= s.size()) break;
        std::string tok;
        bool in_quote = false;
        while (i < s.size() && (in_quote || s[i] != ' ')) {
            char c = s[i++];
            if (c == '"') {
                in_quote = !in_quote;
                tok += c;
            } else if (c == '\\' && in_quote && i < s.size()) {
                tok += s[i++];
            } else {
                tok += c;
            }
        }
        if (in_quote) throw FixtureError(line, "unterminated quoted string");
        out.push_back(std::move(tok));
    }
    return out;
}

std::string unquote(std::string_view t) {
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return std::string(t.substr(1, t.size() - 2));
    return std::string(t);
}

std::string normalize_url(std::string_view u) {
    std::string s(text::trim(u));
    while (s.size() > 1 && s.back() == '/') s.pop_back();
    return s;
}

FixtureElement parse_element(std::string_view rest, std::size_t line) {
    auto toks = tokenize(rest, line);
    if (toks.size() < 3) throw FixtureError(line, "element needs: <key> <role> \"<text>\" [attrs...]");
    FixtureElement e;
    e.key = toks[0];
    try {
        e.role = role_from_string(toks[1]);
    } catch (const Error& err) {
        throw FixtureError(line, err.what());
    }
    if (toks[2].front() != '"') throw FixtureError(line, "element text must be quoted");
    e.text = unquote(toks[2]);
    for (std::size_t i = 3; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (t.front() == '@') {
            BoundingBox b;
            if (std::sscanf(t.c_str() + 1, "%d,%d,%d,%d", &b.x, &b.y, &b.width, &b.height) != 4)
                throw FixtureError(line, fmt::format("bad bbox '{}'", t));
            e.bbox = b;
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            e.attributes[t] = "true";
        } else {
            e.attributes[t.substr(0, eq)] = unquote(std::string_view(t).substr(eq + 1));
        }
    }
    e.attributes["id"] = e.key;
    return e;
}

Transition parse_transition(std::string_view rest, std::size_t line) {
    auto toks = tokenize(rest, line);
    // <from> <element> <KIND> [when <pred>] -> <to>
    auto arrow = std::find(toks.begin(), toks.end(), "->");
    if (toks.size() < 5 || arrow == toks.end() || arrow + 2 != toks.end())
        throw FixtureError(line, "transition needs: <from> <element> <KIND> [when <subject>~\"text\"] -> <to>");
    Transition t;
    t.from = toks[0];
    t.element = toks[1];
    try {
        t.kind = command_kind_from_string(toks[2]);
    } catch (const Error& err) {
        throw FixtureError(line, err.what());
    }
    t.to = *(arrow + 1);
    auto mid = arrow - toks.begin();
    if (mid == 5 && toks[3] == "when") {
        const auto& p = toks[4];
        auto op = p.find_first_of("~=");
        if (op == std::string::npos || op == 0) throw FixtureError(line, fmt::format("bad predicate '{}'", p));
        t.when = TransitionPredicate{p.substr(0, op), unquote(std::string_view(p).substr(op + 1)), p[op] == '='};
    } else if (mid != 3) {
        throw FixtureError(line, "unexpected tokens before '->'");
    }
    return t;
}

}  // namespace

FixtureError::FixtureError(std::size_t line, std::string message)
    : Error(fmt::format("fixture line {}: {}", line, message)), line_(line) {}

const FixtureElement* FixtureState::find(std::string_view key) const {
    for (const auto& e : elements)
        if (e.key == key) return &e;
    return nullptr;
}

const FixtureState* Fixture::find_state(std::string_view name) const {
    for (const auto& s : states)
        if (s.name == name) return &s;
    return nullptr;
}

Fixture parse_fixture(std::string_view raw) {
    Fixture fx;
    FixtureState* cur = nullptr;
    std::size_t n = 0;
    for (const auto& physical : text::split_lines(raw)) {
        ++n;
        auto l = text::trim(physical);
        if (l.empty() || l.front() == '#') continue;
        auto colon = l.find(':');
        if (colon == std::string_view::npos) throw FixtureError(n, fmt::format("expected 'key: value', got '{}'", l));
        auto key = text::trim(l.substr(0, colon));
        auto value = text::trim(l.substr(colon + 1));
        if (key == "fixture") {
            fx.id = std::string(value);
        } else if (key == "initial") {
            fx.initial = std::string(value);
        } else if (key == "viewport") {
            fx.viewport_width = std::atoi(std::string(value).c_str());
            if (fx.viewport_width <= 0) throw FixtureError(n, "viewport must be a positive width");
        } else if (key == "state") {
            if (fx.find_state(value)) throw FixtureError(n, fmt::format("duplicate state '{}'", value));
            fx.states.push_back({});
            cur = &fx.states.back();
            cur->name = std::string(value);
        } else if (key == "transition") {
            fx.transitions.push_back(parse_transition(value, n));
        } else if (cur == nullptr) {
            throw FixtureError(n, fmt::format("'{}' outside of a state block", key));
        } else if (key == "url") {
            cur->url = std::string(value);
        } else if (key == "title") {
            cur->title = std::string(value);
        } else if (key == "overlay") {
            cur->overlay = value == "true";
        } else if (key == "element") {
            auto e = parse_element(value, n);
            if (cur->find(e.key)) throw FixtureError(n, fmt::format("duplicate element '{}'", e.key));
            cur->elements.push_back(std::move(e));
        } else {
            throw FixtureError(n, fmt::format("unknown key '{}'", key));
        }
    }
    if (fx.id.empty()) throw FixtureError(0, "missing 'fixture:' id");
    if (!fx.find_state(fx.initial)) throw FixtureError(0, fmt::format("initial state '{}' not defined", fx.initial));
    for (const auto& t : fx.transitions) {
        const auto* from = fx.find_state(t.from);
        if (!from) throw FixtureError(0, fmt::format("transition from unknown state '{}'", t.from));
        if (!fx.find_state(t.to)) throw FixtureError(0, fmt::format("transition to unknown state '{}'", t.to));
        if (!from->find(t.element))
            throw FixtureError(0, fmt::format("transition references unknown element '{}' in '{}'", t.element, t.from));
    }
    return fx;
}

Fixture load_fixture(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open fixture '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fixture(ss.str());
}

SimulatorSession::SimulatorSession(std::shared_ptr<const Fixture> fixture, SimulatorOptions opts)
    : fixture_(std::move(fixture)), opts_(opts), state_(fixture_->initial) {}

const FixtureState& SimulatorSession::current() const { return *fixture_->find_state(state_); }

void SimulatorSession::go(const std::string& state) {
    state_ = state;
    fields_.clear();
    focus_.clear();
}

std::vector<ElementDescriptor> SimulatorSession::layout() const {
    std::vector<ElementDescriptor> out;
    const auto& st = current();
    int row = 0;
    for (const auto& fe : st.elements) {
        ElementDescriptor e;
        e.mark_id = static_cast<int>(out.size()) + 1;
        e.role = fe.role;
        e.text = fe.text;
        e.attributes = fe.attributes;
        if (auto it = fields_.find(fe.key); it != fields_.end()) {
            e.attributes[fe.role == ElementRole::Checkbox ? "checked" : "value"] = it->second;
        }
        if (fe.bbox) {
            e.bbox = *fe.bbox;
        } else {
            auto width = static_cast<int>(text_render_line(e).size()) * 9 + 24;
            e.bbox = {kMargin, kHeaderHeight + kMargin + row * kRowHeight, std::max(80, width), kElementHeight};
            ++row;
        }
        out.push_back(std::move(e));
    }
    return out;
}

PageObservation SimulatorSession::observe() {
    if (!open_) throw DriverError("driver disconnected: session is closed");
    const auto& st = current();
    PageObservation obs;
    obs.url = st.url;
    obs.title = st.title;
    obs.overlay = st.overlay;
    obs.elements = layout();
    obs.page_width = fixture_->viewport_width;
    int bottom = kMinPageHeight;
    for (const auto& e : obs.elements) bottom = std::max(bottom, e.bbox.y + e.bbox.height + kMargin);
    obs.page_height = bottom;

    obs.dom_snapshot = simplified_dom(obs, opts_.dom_token_budget);

    std::string shot = fmt::format("==== {}{} ====\nurl: {}\n", st.overlay ? "(popup) " : "", st.title, st.url);
    shot += std::string(40, '-') + "\n";
    for (const auto& e : obs.elements) shot += text_render_line(e) + "\n";
    obs.screenshot = {ScreenshotArtifact::Kind::TextRender, std::move(shot)};
    return obs;
}

bool SimulatorSession::predicate_holds(const TransitionPredicate& p, const std::optional<std::string>& value) const {
    std::string subject;
    if (p.subject == "value") {
        subject = value.value_or("");
    } else if (auto it = fields_.find(p.subject); it != fields_.end()) {
        subject = it->second;
    }
    return p.exact ? subject == p.needle : text::icontains(subject, p.needle);
}

const Transition* SimulatorSession::find_transition(std::string_view key, CommandKind kind,
                                                    const std::optional<std::string>& value) const {
    for (const auto& t : fixture_->transitions) {
        if (t.from != state_ || t.element != key || t.kind != kind) continue;
        if (t.when && !predicate_holds(*t.when, value)) continue;
        return &t;
    }
    return nullptr;
}

CommandResult SimulatorSession::execute(const BrowserCommand& cmd) {
    if (!open_) throw DriverError("driver disconnected: session is closed");
    if (auto err = check_command(cmd)) throw std::invalid_argument(*err);
    using Status = CommandResult::Status;

    if (cmd.kind == CommandKind::Navigate) {
        auto want = normalize_url(*cmd.value);
        for (const auto& s : fixture_->states) {
            if (!s.overlay && normalize_url(s.url) == want) {
                go(s.name);
                return {Status::Ok, fmt::format("navigated to {}", s.url)};
            }
        }
        return {Status::Rejected, fmt::format("unknown url {}", *cmd.value)};
    }
    if (cmd.kind == CommandKind::Scroll || cmd.kind == CommandKind::Noop) return {Status::Ok, "no effect"};
    if (cmd.kind == CommandKind::PressEnter) {
        if (const auto* t = find_transition(focus_, CommandKind::PressEnter, std::nullopt)) {
            go(t->to);
            return {Status::Ok, fmt::format("enter submitted, now at '{}'", current().title)};
        }
        return {Status::Ok, "no effect"};
    }

    const auto& st = current();
    auto elements = layout();
    const FixtureElement* target = nullptr;
    if (auto* mark = std::get_if<int>(&cmd.target)) {
        if (*mark >= 1 && static_cast<std::size_t>(*mark) <= st.elements.size()) target = &st.elements[*mark - 1];
    } else if (auto* pt = std::get_if<Point>(&cmd.target)) {
        for (std::size_t i = 0; i < elements.size(); ++i) {
            if (elements[i].bbox.contains(pt->x, pt->y)) {
                target = &st.elements[i];
                break;
            }
        }
    }
    if (!target) return {Status::TargetNotFound, "no element at the requested target"};
    if (target->attributes.contains("disabled")) return {Status::Rejected, fmt::format("'{}' is disabled", target->text)};

    switch (cmd.kind) {
        case CommandKind::Click: {
            focus_ = target->key;
            if (target->role == ElementRole::Checkbox) {
                auto& v = fields_[target->key];
                v = v == "true" ? "false" : "true";
            }
            if (const auto* t = find_transition(target->key, CommandKind::Click, std::nullopt)) {
                go(t->to);
                return {Status::Ok, fmt::format("clicked '{}', now at '{}'", target->text, current().title)};
            }
            return {Status::Ok, fmt::format("clicked '{}'", target->text)};
        }
        case CommandKind::Type: {
            if (target->role != ElementRole::Input || target->attributes.contains("readonly"))
                return {Status::Rejected, fmt::format("'{}' is not editable", target->text)};
            fields_[target->key] = *cmd.value;
            focus_ = target->key;
            if (const auto* t = find_transition(target->key, CommandKind::Type, cmd.value)) {
                go(t->to);
                return {Status::Ok, fmt::format("typed into '{}', now at '{}'", target->text, current().title)};
            }
            return {Status::Ok, fmt::format("typed into '{}'", target->text)};
        }
        case CommandKind::Select: {
            if (target->role != ElementRole::Select)
                return {Status::Rejected, fmt::format("'{}' is not a select", target->text)};
            auto it = target->attributes.find("options");
            std::string opts = it == target->attributes.end() ? "" : it->second;
            bool known = false;
            std::istringstream in(opts);
            for (std::string o; std::getline(in, o, '|');) known = known || o == *cmd.value;
            if (!known) return {Status::Rejected, fmt::format("'{}' is not an option of '{}'", *cmd.value, target->text)};
            fields_[target->key] = *cmd.value;
            focus_ = target->key;
            if (const auto* t = find_transition(target->key, CommandKind::Select, cmd.value)) {
                go(t->to);
                return {Status::Ok, fmt::format("selected '{}', now at '{}'", *cmd.value, current().title)};
            }
            return {Status::Ok, fmt::format("selected '{}'", *cmd.value)};
        }
        default: break;
    }
    return {Status::Ok, "no effect"};
}

void SimulatorDriver::add_fixture(Fixture fixture) {
    auto id = fixture.id;
    fixtures_[id] = std::make_shared<const Fixture>(std::move(fixture));
}

std::unique_ptr<DriverSession> SimulatorDriver::reset(const std::string& app_id) {
    auto it = fixtures_.find(app_id);
    if (it == fixtures_.end()) throw DriverError(fmt::format("unknown app '{}'", app_id));
    return std::make_unique<SimulatorSession>(it->second, opts_);
}

}  // namespace ata
