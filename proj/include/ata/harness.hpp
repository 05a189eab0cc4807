#pragma once

// Suite runner: per-case reset, agent execution, trace and cassette
// persistence, scoring and report emission.

#include "ata/cassette.hpp"
#include "ata/metrics.hpp"
#include "ata/pinata.hpp"
#include "ata/seeact.hpp"
#include "ata/simulator.hpp"
#include "ata/testcase.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ata {

enum class AgentKind { SeeAct, Pinata };
enum class EnvKind { Simulator, Real };

std::string_view to_string(AgentKind a);
AgentKind agent_kind_from_string(std::string_view s);
std::string_view to_string(EnvKind e);
EnvKind env_kind_from_string(std::string_view s);

/// Infrastructure failures: missing cassettes, unreachable apps, bad config.
class InfraError : public Error {
public:
    using Error::Error;
};

struct BackendSpec {
    /// openai | anthropic | gemini | scripted
    std::string provider = "openai";
    std::string model_id = "gpt-4o";
    CassetteMode mode = CassetteMode::Replay;
    std::filesystem::path cassette_dir;
    /// Response scripts for the scripted provider:
    /// <dir>/<case>.<component>.script
    std::filesystem::path script_dir;
};

struct RunConfig {
    std::filesystem::path suite_path;
    AgentKind agent = AgentKind::Pinata;
    BackendSpec backend;
    EnvKind env = EnvKind::Simulator;
    std::vector<std::filesystem::path> fixtures;
    /// Real environment: app start URLs ("app=url", or one URL for all apps).
    std::vector<std::string> base_urls;
    std::string webdriver_endpoint = "http://localhost:4444";
    std::optional<std::string> reset_hook_url;
    RunLimits limits;
    int max_retries = 3;
    std::size_t memory_budget = kDefaultMemoryBudget;
    std::filesystem::path out_dir = "out";
    int parallel = 1;
    AverageMode average = AverageMode::Pooled;
    /// Not part of the snapshot. Null means the default HTTPS transport
    /// (or a network-denying one when built without it).
    std::shared_ptr<HttpTransport> transport;
};

/// Empty when the configuration is runnable.
std::vector<std::string> validate_config(const RunConfig& cfg);

/// Canonical key=value text of every result-affecting setting.
std::string config_snapshot(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

std::filesystem::path cassette_path(const std::filesystem::path& dir, std::string_view case_id,
                                    std::string_view component);

struct CaseRecord {
    std::string case_id;
    std::string app_id;
    GroundTruth ground;
    /// Absent when the case hit an infrastructure error.
    std::optional<AgentVerdict> agent;
    std::string infra_error;
    /// Relative to the output directory.
    std::string trace_file;
    std::string initial_observation_hash;
    std::int64_t wall_ms = 0;

    bool scored() const { return agent.has_value(); }
};

struct RunReport {
    std::string config_snapshot;
    std::string config_hash;
    std::vector<CaseRecord> cases;
    ScoreTable table;
    std::int64_t wall_ms = 0;

    std::vector<const CaseRecord*> infra_errors() const;
    bool ok() const { return infra_errors().empty(); }
};

/// Runs every case of the suite. Per-case failures are isolated as
/// INFRA_ERROR records; configuration problems throw InfraError.
RunReport run_suite(const RunConfig& cfg);
/// Same, on an already parsed suite.
RunReport run_suite(const RunConfig& cfg, const Suite& suite);

enum class ReportFormat { Text, Records };

/// TEXT writes report.txt; RECORDS writes records/<case>.json,
/// results.jsonl and summary.json. Throws InfraError when unwritable.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& out_dir);

std::string render_text_report(const RunReport& report);
std::string result_line(const CaseRecord& rec, std::string_view config_hash);
CaseRecord parse_result_line(std::string_view line);

/// Rescores stored results.jsonl against the suite's ground truth.
ScoreTable score_results(const Suite& ground, const std::filesystem::path& results,
                         AverageMode mode = AverageMode::Pooled);

std::vector<ResultPair> result_pairs(const std::vector<CaseRecord>& records);

}  // namespace ata
