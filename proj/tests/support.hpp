#pragma once

// Shared fixtures and generators for the unit, property and acceptance tests.

#include "ata/harness.hpp"
#include "ata/simulator.hpp"
#include "ata/testcase.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace ata::testing {

inline std::filesystem::path data_dir() { return ATA_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return ATA_TEST_DATA_DIR; }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::path(ATA_SCRATCH_DIR) / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path fixture_path() { return data_dir() / "fixtures" / "classified.fixture"; }
inline std::shared_ptr<const Fixture> classified() {
    static auto fx = std::make_shared<const Fixture>(load_fixture(fixture_path().string()));
    return fx;
}
inline SimulatorSession home_session() { return SimulatorSession(classified(), {}); }

inline const Suite& sample_suite() {
    static Suite s = load_suite((data_dir() / "suites" / "sample.suite").string());
    return s;
}
inline const TestCase& sample_case(const std::string& id) { return *sample_suite().find(id); }

inline RunConfig replay_config(AgentKind agent, const std::string& suite, const std::filesystem::path& out) {
    RunConfig cfg;
    cfg.suite_path = data_dir() / "suites" / suite;
    cfg.agent = agent;
    cfg.backend.mode = CassetteMode::Replay;
    cfg.backend.cassette_dir = data_dir() / "cassettes" / (agent == AgentKind::SeeAct ? "seeact" : "pinata");
    cfg.fixtures = {fixture_path()};
    cfg.out_dir = out;
    return cfg;
}

inline std::string random_word(std::mt19937& rng) {
    static const char* words[] = {"Click", "the", "Login", "button", "Type", "bike", "search", "field", "Open",
                                  "listing", "cart", "\"Post\"", "page", "is", "shown", "comment", "é", "#7"};
    std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
    return words[pick(rng)];
}

inline std::string random_sentence(std::mt19937& rng, int min_words = 1, int max_words = 8) {
    std::uniform_int_distribution<int> len(min_words, max_words);
    std::string s;
    for (int i = len(rng); i > 0; --i) s += (s.empty() ? "" : " ") + random_word(rng);
    return s;
}

/// Valid case with random steps and labels.
inline TestCase random_case(std::mt19937& rng, const std::string& id, const std::string& app) {
    TestCase tc;
    tc.id = id;
    tc.app_id = app;
    tc.title = random_sentence(rng);
    std::uniform_int_distribution<int> nsteps(1, 9), coin(0, 1);
    int n = nsteps(rng);
    for (int i = 1; i <= n; ++i) {
        Step s{static_cast<std::size_t>(i), random_sentence(rng), std::nullopt};
        if (coin(rng)) s.assertion = random_sentence(rng);
        tc.steps.push_back(std::move(s));
    }
    if (coin(rng)) {
        tc.ground_truth = Verdict::Fail;
        tc.expected_failure_step = std::uniform_int_distribution<int>(1, n)(rng);
    }
    return tc;
}

inline Suite random_suite(std::mt19937& rng, int max_cases = 12) {
    Suite s;
    s.name = "generated";
    std::uniform_int_distribution<int> ncases(0, max_cases), app(0, 2);
    const char* apps[] = {"classified", "postmill", "onestopshop"};
    int n = ncases(rng);
    for (int i = 0; i < n; ++i) s.cases.push_back(random_case(rng, "case-" + std::to_string(i), apps[app(rng)]));
    s.manifest = tally(s.cases);
    return s;
}

}  // namespace ata::testing
