#pragma once

// PinATA: an orchestrator planning with feedback, an actor grounding one
// browser command per attempt, and an assertor judging expected results,
// all over one shared memory.

#include "ata/browser.hpp"
#include "ata/llm.hpp"
#include "ata/marks.hpp"
#include "ata/memory.hpp"
#include "ata/prompts.hpp"
#include "ata/seeact.hpp"
#include "ata/testcase.hpp"
#include "ata/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ata {

enum class ActionStatus { Pending, Done, Infeasible };
enum class AssertionPhase { Pending, Verified, NotVerified, None };

std::string_view to_string(ActionStatus s);
std::string_view to_string(AssertionPhase s);

struct StepProgress {
    std::size_t step_index = 0;
    ActionStatus action_status = ActionStatus::Pending;
    AssertionPhase assertion_status = AssertionPhase::Pending;
    int attempts_action = 0;
    int attempts_assert = 0;
};

struct ActorFeedback {
    enum class Outcome { Executed, Blocked };
    Outcome outcome = Outcome::Blocked;
    std::optional<BrowserCommand> command;
    std::optional<CommandResult> result;
    std::string narration;
    bool executed() const { return outcome == Outcome::Executed; }
};

class GroundingError : public Error {
public:
    using Error::Error;
};

/// Structured actor reply. Keys may share one comma-separated line.
struct GroundingIntent {
    bool blocked = false;
    std::optional<int> mark;
    std::optional<Point> point;
    std::optional<CommandKind> kind;
    std::optional<std::string> value;
    std::string reason;
};

/// Throws GroundingError when the reply lacks a usable ACTION.
GroundingIntent parse_grounding_reply(std::string_view reply);

struct GroundedCommand {
    /// Targets use the driver's ids.
    BrowserCommand command;
    /// "mark", "bbox", "point" or "none".
    std::string path;
};

/// Mark id first, then the element whose bbox holds the point, then the raw
/// point. Throws GroundingError for unknown marks or off-page points.
GroundedCommand ground(const GroundingIntent& intent, const MarkedObservation& marked);

enum class Judgment { Accept, Retry, Infeasible };

std::string_view to_string(Judgment j);
/// Reads the last "DECISION: X" line. Throws GroundingError when absent.
Judgment parse_judgment(std::string_view reply);

struct AtomicAssertion {
    std::string text;
    AssertionStatus status = AssertionStatus::Verified;
    std::string justification;
};

struct AssertorReport {
    std::vector<AtomicAssertion> atomic;
    /// No usable report after the retries.
    bool degraded = false;
    bool verified() const;
};

/// Numbered "text | STATUS | justification" lines. Throws GroundingError
/// when none is usable.
std::vector<AtomicAssertion> parse_assertor_reply(std::string_view reply);

struct PinataTemplates {
    PromptTemplate profile = builtin_template("pinata-profile.v1");
    PromptTemplate actor = builtin_template("pinata-actor.v1");
    PromptTemplate judge = builtin_template("pinata-judge.v1");
    PromptTemplate assertor = builtin_template("pinata-assertor.v1");
};

struct OrchestratorConfig {
    int max_retries = 3;
    std::size_t memory_budget = kDefaultMemoryBudget;
    /// Extra prompts per LLM call when a reply cannot be parsed.
    int parse_retries = 2;
    std::string orchestrator_model = "gpt-4o";
    std::string actor_model = "gpt-4o";
    std::string assertor_model = "gpt-4o";
    double temperature = 0.0;
    int max_tokens = 1024;
    PinataTemplates templates;
};

/// One backend per component so each can be recorded separately.
struct PinataBackends {
    Backend& orchestrator;
    Backend& actor;
    Backend& assertor;
};

/// Shared state of one run.
struct PinataContext {
    const OrchestratorConfig& cfg;
    ExecutionTrace& trace;
    MemoryStore memory;
};

ActorFeedback act(const Step& step, DriverSession& env, Backend& backend, PinataContext& ctx);

Judgment judge_feedback(const Step& step, const ActorFeedback& feedback, const PageObservation& before,
                        const PageObservation& after, int attempt, Backend& backend, PinataContext& ctx);

AssertorReport assert_step(const Step& step, const PageObservation& obs, Backend& backend, PinataContext& ctx);

struct PinataResult {
    AgentVerdict verdict;
    std::vector<StepProgress> progress;
    std::size_t memory_entries = 0;
};

/// Cassette errors propagate; provider and driver failures mid-run become
/// FAIL with cause=ACTION.
PinataResult orchestrate(const TestCase& tc, DriverSession& env, PinataBackends backends, const OrchestratorConfig& cfg,
                         ExecutionTrace& trace);

}  // namespace ata
