#pragma once

// Deterministic simulated web application driven by a declarative fixture:
// named page states, their elements, and a transition table keyed by
// (state, element, command kind, optional predicate).

#include "ata/browser.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

struct FixtureElement {
    std::string key;
    ElementRole role = ElementRole::Other;
    std::string text;
    std::map<std::string, std::string> attributes;
    std::optional<BoundingBox> bbox;
};

struct FixtureState {
    std::string name;
    std::string url;
    std::string title;
    bool overlay = false;
    std::vector<FixtureElement> elements;

    const FixtureElement* find(std::string_view key) const;
};

/// `when <subject>~"needle"` (case-insensitive contains) or
/// `when <subject>="text"` (exact). Subject `value` is the command's value;
/// any other subject names a field on the current page.
struct TransitionPredicate {
    std::string subject;
    std::string needle;
    bool exact = false;
};

struct Transition {
    std::string from;
    std::string element;
    CommandKind kind = CommandKind::Click;
    std::optional<TransitionPredicate> when;
    std::string to;
};

struct Fixture {
    std::string id;
    std::string initial;
    int viewport_width = 1280;
    std::vector<FixtureState> states;
    std::vector<Transition> transitions;

    const FixtureState* find_state(std::string_view name) const;
};

class FixtureError : public Error {
public:
    FixtureError(std::size_t line, std::string message);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

Fixture parse_fixture(std::string_view raw);
Fixture load_fixture(const std::string& path);

struct SimulatorOptions {
    /// Token budget for the simplified-DOM snapshot.
    std::size_t dom_token_budget = 4000;
};

class SimulatorSession : public DriverSession {
public:
    SimulatorSession(std::shared_ptr<const Fixture> fixture, SimulatorOptions opts);

    PageObservation observe() override;
    CommandResult execute(const BrowserCommand& cmd) override;
    void close() override { open_ = false; }
    bool is_open() const override { return open_; }

    const std::string& state_name() const { return state_; }

private:
    const FixtureState& current() const;
    void go(const std::string& state);
    bool predicate_holds(const TransitionPredicate& p, const std::optional<std::string>& value) const;
    const Transition* find_transition(std::string_view key, CommandKind kind,
                                      const std::optional<std::string>& value) const;
    std::vector<ElementDescriptor> layout() const;

    std::shared_ptr<const Fixture> fixture_;
    SimulatorOptions opts_;
    std::string state_;
    std::map<std::string, std::string> fields_;
    std::string focus_;
    bool open_ = true;
};

class SimulatorDriver : public Driver {
public:
    explicit SimulatorDriver(SimulatorOptions opts = {}) : opts_(opts) {}

    void add_fixture(Fixture fixture);
    bool has_app(const std::string& app_id) const { return fixtures_.contains(app_id); }
    std::unique_ptr<DriverSession> reset(const std::string& app_id) override;

private:
    SimulatorOptions opts_;
    std::map<std::string, std::shared_ptr<const Fixture>> fixtures_;
};

}  // namespace ata
