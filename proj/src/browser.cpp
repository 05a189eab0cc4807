#include "ata/browser.hpp"

#include <fmt/format.h>

#include <set>
#include <stdexcept>

namespace ata {

namespace {
constexpr std::pair<ElementRole, std::string_view> kRoles[] = {
    {ElementRole::Link, "link"},   {ElementRole::Button, "button"},     {ElementRole::Input, "input"},
    {ElementRole::Select, "select"}, {ElementRole::Checkbox, "checkbox"}, {ElementRole::Text, "text"},
    {ElementRole::Other, "other"},
};

constexpr std::pair<CommandKind, std::string_view> kCommands[] = {
    {CommandKind::Navigate, "NAVIGATE"}, {CommandKind::Click, "CLICK"},   {CommandKind::Type, "TYPE"},
    {CommandKind::Select, "SELECT"},     {CommandKind::PressEnter, "PRESS_ENTER"},
    {CommandKind::Scroll, "SCROLL"},     {CommandKind::Noop, "NOOP"},
};

std::string escape_attr(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"') out += "&quot;";
        else if (c == '\n') out += ' ';
        else out += c;
    }
    return out;
}
}  // namespace

std::string_view to_string(ElementRole r) {
    for (auto [role, name] : kRoles)
        if (role == r) return name;
    return "other";
}

ElementRole role_from_string(std::string_view s) {
    for (auto [role, name] : kRoles)
        if (text::iequals(name, s)) return role;
    throw Error(fmt::format("unknown element role '{}'", s));
}

std::string_view html_tag(ElementRole r) {
    switch (r) {
        case ElementRole::Link: return "a";
        case ElementRole::Button: return "button";
        case ElementRole::Input: return "input";
        case ElementRole::Select: return "select";
        case ElementRole::Checkbox: return "input";
        case ElementRole::Text: return "span";
        case ElementRole::Other: return "div";
    }
    return "div";
}

std::string element_html(const ElementDescriptor& e, bool with_mark) {
    auto tag = html_tag(e.role);
    std::string attrs;
    if (with_mark) attrs += fmt::format(" mark=\"{}\"", e.mark_id);
    if (e.role == ElementRole::Checkbox) attrs += " type=\"checkbox\"";
    for (const auto& [k, v] : e.attributes) {
        // Internal keys stay out of the prompt-facing rendering.
        if (k == "id" || k == "readonly") continue;
        attrs += fmt::format(" {}=\"{}\"", k, escape_attr(v));
    }
    if (e.role == ElementRole::Input || e.role == ElementRole::Checkbox) {
        if (!e.text.empty()) attrs += fmt::format(" aria-label=\"{}\"", escape_attr(e.text));
        return fmt::format("<{}{}>", tag, attrs);
    }
    return fmt::format("<{}{}>{}</{}>", tag, attrs, e.text, tag);
}

std::string text_render_line(const ElementDescriptor& e) {
    auto attr = [&](const char* k) -> std::string {
        auto it = e.attributes.find(k);
        return it == e.attributes.end() ? std::string() : it->second;
    };
    switch (e.role) {
        case ElementRole::Link: return fmt::format("_{}_", e.text);
        case ElementRole::Button: return fmt::format("[ {} ]", e.text);
        case ElementRole::Input: {
            auto v = attr("value");
            if (v.empty()) v = attr("placeholder").empty() ? "____" : attr("placeholder") + "...";
            return fmt::format("[{}: {}]", e.text, v);
        }
        case ElementRole::Select: {
            auto v = attr("value");
            if (v.empty()) {
                auto opts = attr("options");
                v = opts.substr(0, opts.find('|'));
            }
            return fmt::format("[{}: {} v]", e.text, v);
        }
        case ElementRole::Checkbox: return fmt::format("[{}] {}", attr("checked") == "true" ? "x" : " ", e.text);
        case ElementRole::Text:
        case ElementRole::Other: return e.text;
    }
    return e.text;
}

const ElementDescriptor* PageObservation::find_mark(int mark_id) const {
    for (const auto& e : elements)
        if (e.mark_id == mark_id) return &e;
    return nullptr;
}

std::string observation_hash(const PageObservation& obs) {
    std::string dump = fmt::format("url={}\ntitle={}\noverlay={}\nsize={}x{}\n", obs.url, obs.title, obs.overlay,
                                   obs.page_width, obs.page_height);
    for (const auto& e : obs.elements) {
        dump += fmt::format("el {} {} {}", e.mark_id, to_string(e.role), text::quote(e.text));
        for (const auto& [k, v] : e.attributes) dump += fmt::format(" {}={}", k, text::quote(v));
        dump += fmt::format(" @{},{},{},{}\n", e.bbox.x, e.bbox.y, e.bbox.width, e.bbox.height);
    }
    dump += "dom\n" + obs.dom_snapshot;
    dump += fmt::format("\nshot {} {}\n", obs.screenshot.kind == ScreenshotArtifact::Kind::Image ? "image" : "text",
                        text::sha256_hex(obs.screenshot.payload));
    return text::sha256_hex(dump);
}

std::vector<std::string> check_observation(const PageObservation& obs) {
    std::vector<std::string> out;
    std::set<int> ids;
    for (const auto& e : obs.elements)
        if (!ids.insert(e.mark_id).second) out.push_back(fmt::format("duplicate mark_id {}", e.mark_id));
    // Mark tokens in the DOM snapshot look like mark="N".
    std::string_view dom = obs.dom_snapshot;
    constexpr std::string_view key = "mark=\"";
    for (auto pos = dom.find(key); pos != std::string_view::npos; pos = dom.find(key, pos + 1)) {
        auto start = pos + key.size();
        auto end = dom.find('"', start);
        if (end == std::string_view::npos) break;
        int id = 0;
        try {
            id = std::stoi(std::string(dom.substr(start, end - start)));
        } catch (const std::exception&) {
            out.push_back("malformed mark token in dom_snapshot");
            continue;
        }
        if (!ids.contains(id)) out.push_back(fmt::format("dom_snapshot references unknown mark {}", id));
    }
    if (obs.screenshot.kind == ScreenshotArtifact::Kind::TextRender && !text::is_valid_utf8(obs.screenshot.payload))
        out.emplace_back("text screenshot is not valid UTF-8");
    return out;
}

std::string_view to_string(CommandKind k) {
    for (auto [kind, name] : kCommands)
        if (kind == k) return name;
    return "NOOP";
}

CommandKind command_kind_from_string(std::string_view s) {
    auto norm = text::to_upper(text::trim(s));
    for (auto& c : norm)
        if (c == ' ') c = '_';
    for (auto [kind, name] : kCommands)
        if (name == norm) return kind;
    throw Error(fmt::format("unknown command kind '{}'", s));
}

BrowserCommand BrowserCommand::navigate(std::string url) { return {CommandKind::Navigate, {}, std::move(url)}; }
BrowserCommand BrowserCommand::click(int mark) { return {CommandKind::Click, mark, std::nullopt}; }
BrowserCommand BrowserCommand::click_at(Point p) { return {CommandKind::Click, p, std::nullopt}; }
BrowserCommand BrowserCommand::type(int mark, std::string text) { return {CommandKind::Type, mark, std::move(text)}; }
BrowserCommand BrowserCommand::select(int mark, std::string option) {
    return {CommandKind::Select, mark, std::move(option)};
}
BrowserCommand BrowserCommand::press_enter() { return {CommandKind::PressEnter, {}, std::nullopt}; }
BrowserCommand BrowserCommand::scroll() { return {CommandKind::Scroll, {}, std::nullopt}; }
BrowserCommand BrowserCommand::noop() { return {CommandKind::Noop, {}, std::nullopt}; }

std::optional<std::string> check_command(const BrowserCommand& cmd) {
    switch (cmd.kind) {
        case CommandKind::Click:
            if (!cmd.has_target()) return "CLICK requires a target";
            break;
        case CommandKind::Type:
        case CommandKind::Select:
            if (!cmd.has_target()) return fmt::format("{} requires a target", to_string(cmd.kind));
            if (!cmd.value) return fmt::format("{} requires a value", to_string(cmd.kind));
            break;
        case CommandKind::Navigate:
            if (!cmd.value) return "NAVIGATE requires a value";
            break;
        case CommandKind::PressEnter:
        case CommandKind::Noop:
            if (cmd.has_target() || cmd.value) return fmt::format("{} takes no target or value", to_string(cmd.kind));
            break;
        case CommandKind::Scroll: break;
    }
    return std::nullopt;
}

std::string describe(const BrowserCommand& cmd) {
    std::string out(to_string(cmd.kind));
    if (auto* m = std::get_if<int>(&cmd.target)) out += fmt::format(" mark={}", *m);
    if (auto* p = std::get_if<Point>(&cmd.target)) out += fmt::format(" point=({}, {})", p->x, p->y);
    if (cmd.value) out += fmt::format(" value={}", text::quote(*cmd.value));
    return out;
}

std::string simplified_dom(const PageObservation& obs, std::size_t token_budget) {
    // Popups flagged overlay=true are not part of the page HTML.
    std::string dom = fmt::format("<html title={} url={}>\n", text::quote(obs.title), text::quote(obs.url));
    std::string tail = "</html>\n";
    std::size_t used = text::count_tokens(dom) + text::count_tokens(tail);
    if (!obs.overlay) {
        for (std::size_t i = 0; i < obs.elements.size(); ++i) {
            auto line = "  " + element_html(obs.elements[i], true) + "\n";
            auto cost = text::count_tokens(line);
            bool last = i + 1 == obs.elements.size();
            // Keep room for the truncation marker unless this is the last element.
            auto marker = fmt::format("  <!-- {} more elements truncated -->\n", obs.elements.size() - i - 1);
            auto reserve = last ? 0 : text::count_tokens(marker);
            if (used + cost + reserve > token_budget) {
                dom += fmt::format("  <!-- {} more elements truncated -->\n", obs.elements.size() - i);
                break;
            }
            used += cost;
            dom += line;
        }
    }
    return dom + tail;
}

std::string screenshot_media_type(std::string_view payload) {
    if (payload.starts_with("\x89PNG")) return "image/png";
    if (payload.starts_with("P6")) return "image/x-portable-pixmap";
    return "application/octet-stream";
}

std::string_view to_string(CommandResult::Status s) {
    switch (s) {
        case CommandResult::Status::Ok: return "OK";
        case CommandResult::Status::TargetNotFound: return "TARGET_NOT_FOUND";
        case CommandResult::Status::Rejected: return "REJECTED";
    }
    return "REJECTED";
}

}  // namespace ata
