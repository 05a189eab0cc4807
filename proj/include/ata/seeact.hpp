#pragma once

// SeeAct-ATA: a single iterative prompt carrying the tester profile, the
// test case, the action history, the screenshot, the guidance sections and
// a lettered multichoice over page elements.

#include "ata/browser.hpp"
#include "ata/llm.hpp"
#include "ata/marks.hpp"
#include "ata/prompts.hpp"
#include "ata/testcase.hpp"
#include "ata/trace.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ata {

enum class SeeActAction { Click, Select, Type, PressEnter, Terminate, None };

std::string_view to_string(SeeActAction a);

struct FinalAnswer {
    /// Uppercase choice letter; nullopt = NONE_MATCH.
    std::optional<char> element;
    SeeActAction action = SeeActAction::None;
    std::optional<std::string> value;
    bool operator==(const FinalAnswer&) const = default;
};

class FinalAnswerError : public Error {
public:
    enum class Code { MissingBlock, UnknownAction, MissingValue };
    FinalAnswerError(Code code, std::string detail);
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view to_string(FinalAnswerError::Code c);

/// Reads the last ELEMENT/ACTION/VALUE block of a reply.
FinalAnswer parse_final_answer(std::string_view response);

enum class AssertionStatus { Verified, NotVerified };

std::string_view to_string(AssertionStatus s);

struct AssertionCheck {
    std::string text;
    AssertionStatus status = AssertionStatus::Verified;
    bool operator==(const AssertionCheck&) const = default;
};

struct AssertionStatuses {
    std::vector<AssertionCheck> items;
    /// "All assertions have been verified" appeared in the section.
    bool all_verified_sentence = false;

    bool any_not_verified() const;
};

/// Numbered status lines under the last TEST STEP ASSERTION CONTROL header;
/// empty when the section is absent.
AssertionStatuses extract_assertion_statuses(std::string_view response);

/// Current step named in the TEST CASE PROGRESS section, if readable.
std::optional<std::size_t> extract_current_step(std::string_view response);

struct RunLimits {
    /// 0 = 4 x step count, capped at 40.
    std::size_t max_iterations = 0;
    std::size_t parse_retries = 2;

    std::size_t iterations_for(std::size_t step_count) const;
};

struct SeeActConfig {
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    int max_tokens = 1024;
    RunLimits limits;
    PromptTemplate prompt = builtin_template("seeact.v1");
};

/// Letters A..Y for choices; the none-option takes the following letter.
inline constexpr std::size_t kMaxChoices = 25;

struct SeeActTurn {
    std::size_t step = 0;
    ChatRequest prompt;
    std::string response_text;
    std::optional<FinalAnswer> parsed;
    std::string parse_error;
    AssertionStatuses assertions;
    std::optional<BrowserCommand> command;
    std::optional<CommandResult> result;
    /// Pseudo-HTML of the chosen element, for the action history.
    std::string target_html;
};

struct SeeActPrompt {
    ChatRequest request;
    /// Offered letter -> dense mark id.
    std::map<char, int> choices;
    char none_letter = 'A';
    std::size_t dropped = 0;
};

/// Deterministic prompt for one turn.
SeeActPrompt build_prompt(const TestCase& tc, const std::vector<SeeActTurn>& history, const MarkedObservation& marked,
                          const SeeActConfig& cfg = {});

struct SeeActResult {
    AgentVerdict verdict;
    std::vector<SeeActTurn> turns;
};

/// Drives one test case to a verdict. Cassette errors propagate; provider
/// and driver failures mid-run become FAIL with cause=ACTION.
SeeActResult run_seeact(const TestCase& tc, DriverSession& env, Backend& backend, const SeeActConfig& cfg,
                        ExecutionTrace& trace);

}  // namespace ata
