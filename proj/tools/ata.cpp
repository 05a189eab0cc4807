// ata: run autonomous test agents over natural-language E2E suites, replay
// recorded LLM exchanges and score verdicts against human ground truth.
//
// API keys come from the environment (OPENAI_API_KEY, ANTHROPIC_API_KEY,
// GEMINI_API_KEY); there is deliberately no flag for them.

#include "ata/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

struct RunFlags {
    std::string suite;
    std::string agent = "pinata";
    std::string provider = "openai";
    std::string model = "gpt-4o";
    std::string mode = "replay";
    std::string cassettes;
    std::string scripts;
    std::string env = "simulator";
    std::vector<std::string> fixtures;
    std::vector<std::string> base_urls;
    std::string webdriver = "http://localhost:4444";
    std::string reset_hook;
    int max_retries = 3;
    std::size_t max_iterations = 0;
    std::size_t memory_budget = ata::kDefaultMemoryBudget;
    std::string out = "out";
    int parallel = 1;
    bool macro = false;
    std::string format = "both";
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
    cmd->add_option("--suite", f.suite, "Suite file")->required();
    cmd->add_option("--agent", f.agent, "seeact | pinata")->capture_default_str();
    cmd->add_option("--provider", f.provider, "openai | anthropic | gemini | scripted")->capture_default_str();
    cmd->add_option("--model", f.model, "Model id")->capture_default_str();
    if (with_mode) cmd->add_option("--mode", f.mode, "live | record | replay")->capture_default_str();
    cmd->add_option("--cassettes", f.cassettes, "Cassette directory (<case>.<component>.cassette.json)");
    cmd->add_option("--scripts", f.scripts, "Response scripts for the scripted provider");
    cmd->add_option("--env", f.env, "simulator | real")->capture_default_str();
    cmd->add_option("--fixture", f.fixtures, "Simulator fixture file (repeatable)");
    cmd->add_option("--base-url", f.base_urls, "Real app start URL, app=url or one URL for all (repeatable)");
    cmd->add_option("--webdriver", f.webdriver, "WebDriver remote end")->capture_default_str();
    cmd->add_option("--reset-hook", f.reset_hook, "URL POSTed before each real-app reset");
    cmd->add_option("--max-retries", f.max_retries, "PinATA retries per step")->capture_default_str();
    cmd->add_option("--max-iterations", f.max_iterations, "SeeAct iteration cap (0 = 4 x steps, at most 40)")
        ->capture_default_str();
    cmd->add_option("--memory-budget", f.memory_budget, "PinATA memory token budget")->capture_default_str();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
    cmd->add_option("--parallel", f.parallel, "Concurrent cases (simulator only)")->capture_default_str();
    cmd->add_flag("--macro", f.macro, "Average row as the mean of per-app metrics instead of pooled counts");
    cmd->add_option("--format", f.format, "text | records | both")->capture_default_str();
}

ata::RunConfig to_config(const RunFlags& f) {
    ata::RunConfig cfg;
    cfg.suite_path = f.suite;
    cfg.agent = ata::agent_kind_from_string(f.agent);
    cfg.backend.provider = ata::text::to_lower(f.provider);
    cfg.backend.model_id = f.model;
    cfg.backend.mode = ata::cassette_mode_from_string(f.mode);
    cfg.backend.cassette_dir = f.cassettes;
    cfg.backend.script_dir = f.scripts;
    cfg.env = ata::env_kind_from_string(f.env);
    for (const auto& p : f.fixtures) cfg.fixtures.emplace_back(p);
    cfg.base_urls = f.base_urls;
    cfg.webdriver_endpoint = f.webdriver;
    if (!f.reset_hook.empty()) cfg.reset_hook_url = f.reset_hook;
    cfg.max_retries = f.max_retries;
    cfg.limits.max_iterations = f.max_iterations;
    cfg.memory_budget = f.memory_budget;
    cfg.out_dir = f.out;
    cfg.parallel = f.parallel;
    cfg.average = f.macro ? ata::AverageMode::Macro : ata::AverageMode::Pooled;
    return cfg;
}

int do_run(const RunFlags& f) {
    auto cfg = to_config(f);
    if (auto errs = ata::validate_config(cfg); !errs.empty()) {
        for (const auto& e : errs) std::cerr << "error: " << e << '\n';
        return 2;
    }
    auto report = ata::run_suite(cfg);
    if (f.format == "text" || f.format == "both") ata::emit_report(report, ata::ReportFormat::Text, cfg.out_dir);
    if (f.format == "records" || f.format == "both") ata::emit_report(report, ata::ReportFormat::Records, cfg.out_dir);

    std::cout << ata::render_table(report.table);
    std::cout << fmt::format("{} cases, {} infrastructure errors, config {}\n", report.cases.size(),
                             report.infra_errors().size(), report.config_hash.substr(0, 12));
    for (const auto* c : report.infra_errors()) std::cerr << "INFRA_ERROR " << c->case_id << ": " << c->infra_error << '\n';
    return report.ok() ? 0 : 1;
}

int do_validate(const std::string& path) {
    try {
        auto suite = ata::load_suite(path);
        std::size_t pass = 0, fail = 0;
        for (const auto& [app, m] : suite.manifest) {
            std::cout << fmt::format("{:<16} pass={:<4} fail={:<4}\n", app, m.pass_count, m.fail_count);
            pass += m.pass_count;
            fail += m.fail_count;
        }
        std::cout << fmt::format("{}: {} cases ({} passing, {} failing)\n", path, suite.cases.size(), pass, fail);
        return 0;
    } catch (const ata::SuiteError& e) {
        std::cerr << fmt::format("{}:{}:{}: {}\n", path, e.line(), e.column(), e.message());
        return 1;
    }
}

int do_score(const std::string& suite_path, const std::string& results, bool macro) {
    auto suite = ata::load_suite(suite_path);
    auto table = ata::score_results(suite, results, macro ? ata::AverageMode::Macro : ata::AverageMode::Pooled);
    std::cout << ata::render_table(table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autonomous test agents for natural-language E2E test cases"};
    app.set_config("--config", "", "Config file (TOML/INI); command-line flags take precedence");
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run a suite and emit the report");
    add_run_flags(run, run_flags, true);

    RunFlags rec_flags;
    rec_flags.provider = "openai";
    auto* record = app.add_subcommand("record-cassettes", "Run a suite live and record one cassette per case and component");
    add_run_flags(record, rec_flags, false);

    std::string score_suite, score_results;
    bool score_macro = false;
    auto* score = app.add_subcommand("score", "Rescore stored results against a suite");
    score->add_option("--suite", score_suite, "Suite with the ground truth")->required();
    score->add_option("--results", score_results, "results.jsonl from a run")->required();
    score->add_flag("--macro", score_macro, "Macro-average the Average row");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-suite", "Parse a suite and check its manifest");
    validate->add_option("--suite", validate_path, "Suite file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return do_run(run_flags);
        if (*record) {
            rec_flags.mode = "record";
            if (rec_flags.cassettes.empty()) {
                std::cerr << "error: --cassettes is required\n";
                return 2;
            }
            return do_run(rec_flags);
        }
        if (*score) return do_score(score_suite, score_results, score_macro);
        if (*validate) return do_validate(validate_path);
    } catch (const ata::SuiteError& e) {
        std::cerr << fmt::format("suite error at {}:{}: {}\n", e.line(), e.column(), e.message());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
