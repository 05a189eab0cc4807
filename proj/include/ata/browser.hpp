#pragma once

// Driver-neutral view of a web page and the commands an agent can send.

#include "ata/text.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ata {

enum class ElementRole { Link, Button, Input, Select, Checkbox, Text, Other };

std::string_view to_string(ElementRole r);
ElementRole role_from_string(std::string_view s);
/// Pseudo-HTML tag used in simplified-DOM lines and multichoice options.
std::string_view html_tag(ElementRole r);

struct BoundingBox {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool contains(int px, int py) const { return px >= x && py >= y && px < x + width && py < y + height; }
    bool intersects(const BoundingBox& o) const {
        return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
    }
    bool operator==(const BoundingBox&) const = default;
};

struct ElementDescriptor {
    int mark_id = 0;
    ElementRole role = ElementRole::Other;
    std::string text;
    std::map<std::string, std::string> attributes;
    BoundingBox bbox;

    bool operator==(const ElementDescriptor&) const = default;
};

/// Single-line pseudo-HTML for an element, e.g. `<button>Login</button>`.
/// With `with_mark` the element's mark id is emitted as `mark="N"`.
std::string element_html(const ElementDescriptor& e, bool with_mark = false);

/// One-line visual rendering of an element inside a TEXT_RENDER screenshot,
/// e.g. `[ Login ]` for a button or `[Email: ____]` for an empty input.
std::string text_render_line(const ElementDescriptor& e);

struct ScreenshotArtifact {
    enum class Kind { Image, TextRender };
    Kind kind = Kind::TextRender;
    /// Encoded image bytes (PNG or PPM) or a UTF-8 page rendering.
    std::string payload;

    bool operator==(const ScreenshotArtifact&) const = default;
};

/// MIME type of an IMAGE payload ("image/png", PPM, or octet-stream).
std::string screenshot_media_type(std::string_view payload);

struct PageObservation {
    std::string url;
    std::string title;
    std::string dom_snapshot;
    std::vector<ElementDescriptor> elements;
    ScreenshotArtifact screenshot;
    int page_width = 0;
    int page_height = 0;
    /// Set for simulated popups that are not part of the page's HTML.
    bool overlay = false;

    const ElementDescriptor* find_mark(int mark_id) const;
    bool operator==(const PageObservation&) const = default;
};

/// Pseudo-HTML page snapshot, one marked element per line, cut at
/// `token_budget` tokens. Overlay pages contribute no elements.
std::string simplified_dom(const PageObservation& obs, std::size_t token_budget = 4000);

/// Stable content hash of an observation (sha256 over a canonical dump).
std::string observation_hash(const PageObservation& obs);

/// Problems with an observation's internal consistency (empty when valid).
std::vector<std::string> check_observation(const PageObservation& obs);

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

enum class CommandKind { Navigate, Click, Type, Select, PressEnter, Scroll, Noop };

std::string_view to_string(CommandKind k);
CommandKind command_kind_from_string(std::string_view s);

struct BrowserCommand {
    CommandKind kind = CommandKind::Noop;
    /// Mark id or page coordinates.
    std::variant<std::monostate, int, Point> target;
    std::optional<std::string> value;

    static BrowserCommand navigate(std::string url);
    static BrowserCommand click(int mark);
    static BrowserCommand click_at(Point p);
    static BrowserCommand type(int mark, std::string text);
    static BrowserCommand select(int mark, std::string option);
    static BrowserCommand press_enter();
    static BrowserCommand scroll();
    static BrowserCommand noop();

    bool has_target() const { return !std::holds_alternative<std::monostate>(target); }
    bool operator==(const BrowserCommand&) const = default;
};

/// Empty when the command's shape is legal for its kind.
std::optional<std::string> check_command(const BrowserCommand& cmd);
std::string describe(const BrowserCommand& cmd);

struct CommandResult {
    enum class Status { Ok, TargetNotFound, Rejected };
    Status status = Status::Ok;
    std::string note;

    bool ok() const { return status == Status::Ok; }
};

std::string_view to_string(CommandResult::Status s);

/// Driver-level failures: disconnects, unknown apps, reset hook errors.
class DriverError : public Error {
public:
    using Error::Error;
};

/// One browser tab owned by a single agent run.
class DriverSession {
public:
    virtual ~DriverSession() = default;

    virtual PageObservation observe() = 0;
    /// Throws DriverError for infrastructure failures and std::invalid_argument
    /// for malformed commands; TARGET_NOT_FOUND and REJECTED are results.
    virtual CommandResult execute(const BrowserCommand& cmd) = 0;
    virtual void close() = 0;
    virtual bool is_open() const = 0;
};

/// Produces fresh sessions, one per test-case execution.
class Driver {
public:
    virtual ~Driver() = default;
    virtual std::unique_ptr<DriverSession> reset(const std::string& app_id) = 0;
};

}  // namespace ata
