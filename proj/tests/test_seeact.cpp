#include "support.hpp"

#include "ata/seeact.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace ata;
using namespace ata::testing;

namespace {

/// Forwards to a simulator session and keeps every executed command.
class CountingSession : public DriverSession {
public:
    CountingSession() : inner_(classified(), {}) {}
    PageObservation observe() override { return inner_.observe(); }
    CommandResult execute(const BrowserCommand& cmd) override {
        executed.push_back(cmd);
        return inner_.execute(cmd);
    }
    void close() override { inner_.close(); }
    bool is_open() const override { return inner_.is_open(); }

    std::vector<BrowserCommand> executed;

private:
    SimulatorSession inner_;
};

std::string answer(std::string element, std::string action, std::string value = "None") {
    return "[FINAL ANSWER]\nELEMENT: " + element + "\nACTION: " + action + "\nVALUE: " + value + "\n";
}

std::string reply(std::size_t step, std::string body, std::string assertions = "No assertion to check.") {
    return "[TEST CASE PROGRESS]\nCurrent test step: " + std::to_string(step) + "\n\n[TEST STEP ASSERTION CONTROL]\n" +
           assertions + "\n\n" + body;
}

SeeActResult run(const TestCase& tc, DriverSession& env, ScriptedBackend& b, SeeActConfig cfg = {}) {
    LogicalClock clock;
    ExecutionTrace trace(tc.id, clock);
    return run_seeact(tc, env, b, cfg, trace);
}

std::string random_reply(std::mt19937& rng, std::size_t steps) {
    static const char* letters[] = {"A", "B", "C", "F", "G", "Z", "(b)", "none", ""};
    static const char* actions[] = {"CLICK", "TYPE", "SELECT", "PRESS ENTER", "TERMINATE", "NONE", "JUMP", "click"};
    static const char* values[] = {"None", "bike", "Vehicles", "blake.sullivan@gmail.com", ""};
    std::uniform_int_distribution<std::size_t> l(0, std::size(letters) - 1), a(0, std::size(actions) - 1),
        v(0, std::size(values) - 1), s(0, steps + 1), kind(0, 9);
    std::string assertions = "1. The page is shown: VERIFIED";
    auto k = kind(rng);
    if (k == 0) assertions = "1. The page is shown: NOT VERIFIED";
    if (k == 1) return "I am not sure what to do.";
    return reply(s(rng), answer(letters[l(rng)], actions[a(rng)], values[v(rng)]), assertions);
}

}  // namespace

TEST_SUITE("seeact_agent") {
    TEST_CASE("parse_final_answer") {
        CHECK(parse_final_answer("ELEMENT: B\nACTION: CLICK\nVALUE: None") == FinalAnswer{'B', SeeActAction::Click, {}});
        CHECK(parse_final_answer("**ELEMENT:** C\n**ACTION:** TYPE\n**VALUE:** \"bike\"") ==
              FinalAnswer{'C', SeeActAction::Type, "bike"});
        CHECK(parse_final_answer("ELEMENT: none\nACTION: PRESS ENTER") == FinalAnswer{{}, SeeActAction::PressEnter, {}});
        CHECK(parse_final_answer("ACTION: TERMINATE\nVALUE: None").action == SeeActAction::Terminate);
        CHECK(parse_final_answer("ELEMENT: (D)\naction: press_enter").action == SeeActAction::PressEnter);

        // The last block wins.
        auto two = parse_final_answer("ELEMENT: A\nACTION: CLICK\n...\nELEMENT: E\nACTION: SELECT\nVALUE: Vehicles");
        CHECK(two == FinalAnswer{'E', SeeActAction::Select, "Vehicles"});

        auto code = [](std::string_view s) {
            try {
                parse_final_answer(s);
            } catch (const FinalAnswerError& e) {
                return e.code();
            }
            FAIL("parsed: " << s);
            return FinalAnswerError::Code::MissingBlock;
        };
        CHECK(code("I think I should click") == FinalAnswerError::Code::MissingBlock);
        CHECK(code("ELEMENT: A\nACTION: HOVER") == FinalAnswerError::Code::UnknownAction);
        CHECK(code("ELEMENT: A\nACTION: TYPE\nVALUE: None") == FinalAnswerError::Code::MissingValue);
        CHECK(code("ELEMENT: A\nACTION: SELECT") == FinalAnswerError::Code::MissingValue);
    }

    TEST_CASE("extract_assertion_statuses") {
        auto s = extract_assertion_statuses(
            "[TEST STEP ASSERTION CONTROL]:\n1. The search bar is visible: VERIFIED\n2. The map is shown - NOT "
            "VERIFIED\n\n[NEXT ACTION]\n3. ignored: NOT VERIFIED");
        REQUIRE(s.items.size() == 2);
        CHECK(s.items[0] == AssertionCheck{"The search bar is visible", AssertionStatus::Verified});
        CHECK(s.items[1] == AssertionCheck{"The map is shown", AssertionStatus::NotVerified});
        CHECK(s.any_not_verified());
        CHECK_FALSE(s.all_verified_sentence);

        auto ok = extract_assertion_statuses("[TEST STEP ASSERTION CONTROL] 1) page: verified\nAll assertions have been verified");
        CHECK(ok.all_verified_sentence);
        CHECK_FALSE(ok.any_not_verified());

        CHECK(extract_assertion_statuses("no section").items.empty());
        CHECK(extract_assertion_statuses("[TEST STEP ASSERTION CONTROL]\n1. x: NOT_VERIFIED").any_not_verified());
    }

    TEST_CASE("extract_current_step") {
        CHECK(extract_current_step("[TEST CASE PROGRESS]\nCurrent test step: 3") == 3u);
        CHECK(extract_current_step("[TEST CASE PROGRESS]\nStep 1: DONE\nStep 2: CURRENT\nStep 3: TODO") == 2u);
        CHECK_FALSE(extract_current_step("nothing here"));
    }

    TEST_CASE("iteration cap") {
        CHECK(RunLimits{}.iterations_for(2) == 8);
        CHECK(RunLimits{}.iterations_for(30) == 40);
        CHECK(RunLimits{5}.iterations_for(30) == 5);
    }

    TEST_CASE("prompt layout") {
        auto tc = sample_case("classified-05");
        auto s = home_session();
        auto marked = annotate_marks(s.observe());
        auto p = build_prompt(tc, {}, marked);
        auto text = canonical_request(p.request);

        CHECK(p.choices.size() == marked.observation.elements.size());
        CHECK(p.none_letter == static_cast<char>('A' + p.choices.size()));
        CHECK(text.find(std::string("| ") + p.none_letter + ". None of the other options match the correct element") !=
              std::string::npos);
        CHECK(text.find("Previous Actions: None") != std::string::npos);
        CHECK(text.find(render_case_text(tc).substr(0, 20)) != std::string::npos);

        std::size_t at = 0;
        for (auto marker : {"[CURRENT WEBPAGE IDENTIFICATION]", "[PREVIOUS ACTION ANALYSIS]", "[TEST CASE PROGRESS]",
                            "[Screenshot Details Analysis]", "[TEST STEP ASSERTION CONTROL]",
                            "[NEXT ACTION BASED ON WEBPAGE AND ANALYSIS]", "[MULTICHOICE QUESTION]", "[FINAL ANSWER]"}) {
            auto pos = text.find(marker, at);
            REQUIRE_MESSAGE(pos != std::string::npos, marker);
            at = pos;
        }
        CHECK(build_prompt(tc, {}, marked).request == p.request);
    }

    TEST_CASE("prompt matches the reviewed golden file") {
        auto tc = sample_case("classified-05");
        auto s = home_session();
        auto text = canonical_request(build_prompt(tc, {}, annotate_marks(s.observe())).request);
        auto golden = test_data_dir() / "golden" / "seeact_home_prompt.txt";
        if (std::getenv("ATA_UPDATE_GOLDEN")) {
            std::ofstream(golden, std::ios::binary) << text;
        }
        REQUIRE(std::filesystem::exists(golden));
        CHECK(slurp(golden) == text);
    }

    TEST_CASE("more than 25 elements: the excess is dropped") {
        PageObservation obs;
        obs.title = "Long";
        for (int i = 1; i <= 30; ++i)
            obs.elements.push_back({i, ElementRole::Link, "Item " + std::to_string(i), {}, {0, i * 20, 50, 10}});
        auto p = build_prompt(sample_case("classified-05"), {}, annotate_marks(obs));
        CHECK(p.choices.size() == kMaxChoices);
        CHECK(p.dropped == 5);
        CHECK(p.none_letter == 'Z');
        CHECK(p.choices.at('Y') == 25);
    }

    TEST_CASE("history lines follow the actions taken") {
        auto tc = sample_case("classified-05");
        CountingSession env;
        ScriptedBackend b({reply(1, answer("A", "TYPE", "bike")), reply(2, answer("C", "CLICK")),
                           reply(2, answer("", "TERMINATE"))});
        auto res = run(tc, env, b);
        CHECK(res.verdict == AgentVerdict::pass());
        REQUIRE(b.requests().size() == 3);
        auto third = canonical_request(b.requests()[2]);
        CHECK(third.find("-> TYPE: bike") != std::string::npos);
        CHECK(third.find("-> CLICK") != std::string::npos);
    }

    TEST_CASE("TERMINATE before the last step fails on the current step") {
        auto tc = sample_case("classified-05");
        CountingSession env;
        ScriptedBackend b({reply(1, answer("", "TERMINATE"))});
        auto res = run(tc, env, b);
        CHECK(res.verdict == AgentVerdict::fail(1, FailureCause::Action));
        CHECK(env.executed.empty());
    }

    TEST_CASE("a repeated NOT VERIFIED on one step is an assertion failure") {
        auto tc = sample_case("classified-05");
        CountingSession env;
        std::string bad = "1. Results are shown: NOT VERIFIED";
        ScriptedBackend b({reply(1, answer("G", "NONE"), bad), reply(1, answer("G", "NONE"), bad)});
        auto res = run(tc, env, b);
        CHECK(res.verdict == AgentVerdict::fail(1, FailureCause::Assertion));
        CHECK(res.turns.size() == 2);
    }

    TEST_CASE("NONE forever reaches the cap") {
        auto tc = sample_case("classified-05");
        CountingSession env;
        std::vector<std::string> script(20, reply(1, answer("G", "NONE")));
        ScriptedBackend b(script);
        auto res = run(tc, env, b);
        CHECK(res.verdict.outcome == Verdict::Fail);
        CHECK(res.verdict.flags.contains(VerdictFlag::CapExceeded));
        CHECK(b.calls() == RunLimits{}.iterations_for(tc.steps.size()));
        CHECK(env.executed.empty());
    }

    TEST_CASE("unparsable replies degrade after the retry budget") {
        auto tc = sample_case("classified-05");
        CountingSession env;
        ScriptedBackend b({"?", "?", "?", "?"});
        auto res = run(tc, env, b);
        CHECK(res.verdict.flags.contains(VerdictFlag::ParseDegraded));
        CHECK(b.calls() == 3);
    }

    TEST_CASE("property: only offered elements reach the driver") {
        std::mt19937 rng(2024);
        for (int round = 0; round < 150; ++round) {
            const auto& tc = sample_suite().cases[static_cast<std::size_t>(round) % sample_suite().cases.size()];
            std::vector<std::string> script;
            for (int i = 0; i < 45; ++i) script.push_back(random_reply(rng, tc.steps.size()));
            CountingSession env;
            ScriptedBackend b(script);
            auto res = run(tc, env, b);

            REQUIRE(res.verdict.consistent());
            if (res.verdict.failed_step) CHECK((*res.verdict.failed_step >= 1 && *res.verdict.failed_step <= tc.steps.size()));
            CHECK(res.turns.size() == b.calls());
            CHECK(res.turns.size() <= RunLimits{}.iterations_for(tc.steps.size()));

            std::size_t executed = 0;
            for (const auto& t : res.turns) {
                if (!t.command) continue;
                REQUIRE(t.parsed);
                CHECK(t.parsed->action != SeeActAction::None);
                CHECK(t.parsed->action != SeeActAction::Terminate);
                if (t.command->kind != CommandKind::PressEnter) {
                    REQUIRE(t.parsed->element);
                    // Letter must have been offered in that turn's prompt.
                    auto letter = std::string("| ") + *t.parsed->element + ". ";
                    CHECK(canonical_request(t.prompt).find(letter) != std::string::npos);
                    CHECK(canonical_request(t.prompt).find(letter + "None of the other") == std::string::npos);
                }
                REQUIRE(executed < env.executed.size());
                CHECK(env.executed[executed++] == *t.command);
            }
            CHECK(executed == env.executed.size());
        }
    }
}
