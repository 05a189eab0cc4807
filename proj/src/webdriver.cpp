#include "ata/webdriver.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace ata {

using nlohmann::json;

namespace {

// Tags interactive elements with data-ata-mark and reports them in
// document order.
constexpr const char* kObserveScript = R"js(
const sel = 'a[href], button, input, select, textarea, [role=button], [role=link], [onclick]';
const out = [];
let n = 0;
for (const el of document.querySelectorAll(sel)) {
  const r = el.getBoundingClientRect();
  if (r.width <= 0 || r.height <= 0) { el.removeAttribute('data-ata-mark'); continue; }
  el.setAttribute('data-ata-mark', String(++n));
  const attrs = {};
  for (const k of ['name', 'placeholder', 'href', 'type', 'disabled', 'readonly']) {
    if (el.hasAttribute(k)) attrs[k] = el.getAttribute(k) || '';
  }
  if ('value' in el && el.tagName !== 'BUTTON' && el.type !== 'checkbox') attrs.value = el.value;
  if (el.type === 'checkbox' && el.checked) attrs.checked = '';
  if (el.tagName === 'SELECT') attrs.options = Array.from(el.options).map(o => o.text).join('|');
  const label = el.getAttribute('aria-label') || (el.labels && el.labels[0] && el.labels[0].innerText) || '';
  out.push({mark: n, tag: el.tagName.toLowerCase(), type: (el.type || '').toLowerCase(),
            role: el.getAttribute('role') || '', text: (label || el.innerText || el.value || '').trim().slice(0, 200),
            attrs, x: Math.round(r.left + scrollX), y: Math.round(r.top + scrollY),
            w: Math.round(r.width), h: Math.round(r.height)});
}
return {url: location.href, title: document.title,
        width: document.documentElement.scrollWidth, height: document.documentElement.scrollHeight,
        elements: out};
)js";

constexpr const char* kClickPointScript = R"js(
const el = document.elementFromPoint(arguments[0] - scrollX, arguments[1] - scrollY);
if (!el) return false;
el.click();
return true;
)js";

constexpr const char* kFindMarkScript = R"js(
return document.querySelector('[data-ata-mark="' + arguments[0] + '"]');
)js";

constexpr const char* kFocusPointScript = R"js(
const el = document.elementFromPoint(arguments[0] - scrollX, arguments[1] - scrollY);
if (!el) return null;
el.focus();
return el;
)js";

constexpr const char* kSelectScript = R"js(
const el = arguments[0];
for (const o of el.options) {
  if (o.text === arguments[1] || o.value === arguments[1]) {
    el.value = o.value;
    el.dispatchEvent(new Event('change', {bubbles: true}));
    return true;
  }
}
return false;
)js";

constexpr const char* kElementKey = "element-6066-11e4-a52e-4f735466cecf";
constexpr const char* kEnterKey = "\xee\x80\x87";  // U+E007

ElementRole role_for(const json& e) {
    auto tag = e.value("tag", "");
    auto type = e.value("type", "");
    auto role = e.value("role", "");
    if (tag == "a" || role == "link") return ElementRole::Link;
    if (tag == "select") return ElementRole::Select;
    if (tag == "textarea") return ElementRole::Input;
    if (tag == "input") {
        if (type == "checkbox" || type == "radio") return ElementRole::Checkbox;
        if (type == "submit" || type == "button" || type == "reset") return ElementRole::Button;
        return ElementRole::Input;
    }
    if (tag == "button" || role == "button") return ElementRole::Button;
    return ElementRole::Other;
}

}  // namespace

WebDriverSession::WebDriverSession(std::shared_ptr<HttpTransport> transport, WebDriverConfig cfg, std::string session_id)
    : transport_(std::move(transport)), cfg_(std::move(cfg)), id_(std::move(session_id)) {}

WebDriverSession::~WebDriverSession() {
    try {
        close();
    } catch (...) {
        // Remote end already gone; nothing left to release.
    }
}

std::string WebDriverSession::call(const std::string& method, const std::string& path, const std::string& body) {
    if (!open_) throw DriverError("driver disconnected: session is closed");
    HttpRequest req;
    req.method = method;
    req.url = fmt::format("{}/session/{}{}", cfg_.endpoint, id_, path);
    req.headers["content-type"] = "application/json";
    req.body = method == "GET" ? "" : body;
    req.timeout = cfg_.navigation_timeout;
    HttpResponse resp;
    try {
        resp = transport_->send(req);
    } catch (const LlmError& e) {
        throw DriverError(fmt::format("driver disconnected: {}", e.what()));
    }
    if (resp.status == 404 && resp.body.find("no such element") != std::string::npos) return "null";
    if (resp.status < 200 || resp.status >= 300)
        throw DriverError(fmt::format("webdriver {} {} failed with HTTP {}: {}", method, path, resp.status, resp.body));
    try {
        return json::parse(resp.body).at("value").dump();
    } catch (const json::exception& e) {
        throw DriverError(fmt::format("unreadable webdriver reply: {}", e.what()));
    }
}

std::string WebDriverSession::script(const std::string& js, const std::string& args_json) {
    json body = {{"script", js}, {"args", json::parse(args_json)}};
    return call("POST", "/execute/sync", body.dump());
}

PageObservation WebDriverSession::observe() {
    auto page = json::parse(script(kObserveScript));
    if (!page.is_object()) throw DriverError("page not loaded");
    PageObservation obs;
    obs.url = page.value("url", "");
    obs.title = page.value("title", "");
    obs.page_width = page.value("width", 0);
    obs.page_height = page.value("height", 0);
    for (const auto& e : page.value("elements", json::array())) {
        ElementDescriptor d;
        d.mark_id = e.value("mark", 0);
        d.role = role_for(e);
        d.text = e.value("text", "");
        for (const auto& [k, v] : e.value("attrs", json::object()).items())
            if (v.is_string()) d.attributes[k] = v.get<std::string>();
        d.bbox = {e.value("x", 0), e.value("y", 0), e.value("w", 0), e.value("h", 0)};
        obs.elements.push_back(std::move(d));
    }
    obs.dom_snapshot = simplified_dom(obs, cfg_.dom_token_budget);
    auto shot = json::parse(call("GET", "/screenshot"));
    obs.screenshot = {ScreenshotArtifact::Kind::Image, text::base64_decode(shot.get<std::string>())};
    return obs;
}

CommandResult WebDriverSession::execute(const BrowserCommand& cmd) {
    if (auto bad = check_command(cmd)) throw std::invalid_argument(*bad);
    using Status = CommandResult::Status;

    auto element_for = [&]() -> std::optional<std::string> {
        json found;
        if (auto* m = std::get_if<int>(&cmd.target)) found = json::parse(script(kFindMarkScript, json::array({*m}).dump()));
        else if (auto* p = std::get_if<Point>(&cmd.target))
            found = json::parse(script(kFocusPointScript, json::array({p->x, p->y}).dump()));
        if (!found.is_object() || !found.contains(kElementKey)) return std::nullopt;
        return found[kElementKey].get<std::string>();
    };

    switch (cmd.kind) {
        case CommandKind::Noop: return {Status::Ok, ""};
        case CommandKind::Navigate:
            call("POST", "/url", json{{"url", *cmd.value}}.dump());
            return {Status::Ok, ""};
        case CommandKind::Scroll:
            script("window.scrollBy(0, window.innerHeight * 0.8); return true;");
            return {Status::Ok, ""};
        case CommandKind::PressEnter: {
            json actions = {{"actions",
                             {{{"type", "key"},
                               {"id", "keyboard"},
                               {"actions", {{{"type", "keyDown"}, {"value", kEnterKey}}, {{"type", "keyUp"}, {"value", kEnterKey}}}}}}}};
            call("POST", "/actions", actions.dump());
            return {Status::Ok, ""};
        }
        case CommandKind::Click: {
            if (auto* p = std::get_if<Point>(&cmd.target)) {
                bool hit = json::parse(script(kClickPointScript, json::array({p->x, p->y}).dump())).get<bool>();
                return hit ? CommandResult{Status::Ok, ""} : CommandResult{Status::TargetNotFound, "no element at point"};
            }
            auto el = element_for();
            if (!el) return {Status::TargetNotFound, "no element with that mark"};
            call("POST", fmt::format("/element/{}/click", *el));
            return {Status::Ok, ""};
        }
        case CommandKind::Type: {
            auto el = element_for();
            if (!el) return {Status::TargetNotFound, "no element at target"};
            auto enabled = json::parse(call("GET", fmt::format("/element/{}/enabled", *el)));
            if (enabled.is_boolean() && !enabled.get<bool>()) return {Status::Rejected, "element is disabled"};
            call("POST", fmt::format("/element/{}/clear", *el));
            call("POST", fmt::format("/element/{}/value", *el), json{{"text", *cmd.value}}.dump());
            return {Status::Ok, ""};
        }
        case CommandKind::Select: {
            auto el = element_for();
            if (!el) return {Status::TargetNotFound, "no element at target"};
            json args = json::array({{{kElementKey, *el}}, *cmd.value});
            bool ok = json::parse(script(kSelectScript, args.dump())).get<bool>();
            return ok ? CommandResult{Status::Ok, ""} : CommandResult{Status::Rejected, "option not found"};
        }
    }
    return {Status::Rejected, "unsupported command"};
}

void WebDriverSession::close() {
    if (!open_) return;
    HttpRequest req;
    req.method = "DELETE";
    req.url = fmt::format("{}/session/{}", cfg_.endpoint, id_);
    open_ = false;
    transport_->send(req);
}

std::unique_ptr<DriverSession> WebDriverDriver::reset(const std::string& app_id) {
    auto app = cfg_.apps.find(app_id);
    if (app == cfg_.apps.end()) throw DriverError(fmt::format("unknown app '{}'", app_id));

    try {
        if (cfg_.reset_hook_url) {
            HttpRequest hook;
            hook.url = *cfg_.reset_hook_url;
            hook.body = json{{"app", app_id}}.dump();
            hook.headers["content-type"] = "application/json";
            auto resp = transport_->send(hook);
            if (resp.status < 200 || resp.status >= 300)
                throw DriverError(fmt::format("reset hook failure: HTTP {}", resp.status));
        }

        json args = json::array();
        if (cfg_.headless) args.push_back("--headless=new");
        json caps = {{"capabilities", {{"alwaysMatch", {{"browserName", cfg_.browser}}}}}};
        if (cfg_.browser == "chrome") caps["capabilities"]["alwaysMatch"]["goog:chromeOptions"] = {{"args", args}};
        if (cfg_.browser == "firefox" && cfg_.headless)
            caps["capabilities"]["alwaysMatch"]["moz:firefoxOptions"] = {{"args", {"-headless"}}};

        HttpRequest create;
        create.url = cfg_.endpoint + "/session";
        create.body = caps.dump();
        create.headers["content-type"] = "application/json";
        create.timeout = cfg_.navigation_timeout;
        auto resp = transport_->send(create);
        if (resp.status < 200 || resp.status >= 300)
            throw DriverError(fmt::format("cannot create webdriver session: HTTP {}: {}", resp.status, resp.body));
        auto id = json::parse(resp.body).at("value").at("sessionId").get<std::string>();

        auto session = std::make_unique<WebDriverSession>(transport_, cfg_, id);
        session->execute(BrowserCommand::navigate(app->second));
        return session;
    } catch (const LlmError& e) {
        throw DriverError(fmt::format("webdriver unreachable: {}", e.what()));
    } catch (const json::exception& e) {
        throw DriverError(fmt::format("unreadable webdriver reply: {}", e.what()));
    }
}

}  // namespace ata
