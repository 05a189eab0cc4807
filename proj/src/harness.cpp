#include "ata/harness.hpp"

#include "ata/providers.hpp"
#ifdef ATA_HAVE_WEBDRIVER
#include "ata/webdriver.hpp"
#endif

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace ata {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(AgentKind a) { return a == AgentKind::SeeAct ? "seeact" : "pinata"; }

AgentKind agent_kind_from_string(std::string_view s) {
    if (text::iequals(s, "seeact")) return AgentKind::SeeAct;
    if (text::iequals(s, "pinata")) return AgentKind::Pinata;
    throw Error(fmt::format("unknown agent '{}' (expected seeact or pinata)", s));
}

std::string_view to_string(EnvKind e) { return e == EnvKind::Simulator ? "simulator" : "real"; }

EnvKind env_kind_from_string(std::string_view s) {
    if (text::iequals(s, "simulator")) return EnvKind::Simulator;
    if (text::iequals(s, "real")) return EnvKind::Real;
    throw Error(fmt::format("unknown environment '{}' (expected simulator or real)", s));
}

namespace {

std::vector<std::string> components_for(AgentKind a) {
    if (a == AgentKind::SeeAct) return {"seeact"};
    return {"orchestrator", "actor", "assertor"};
}

bool webdriver_built() {
#ifdef ATA_HAVE_WEBDRIVER
    return true;
#else
    return false;
#endif
}

std::shared_ptr<HttpTransport> default_transport() {
#ifdef ATA_HAVE_HTTP
    return make_http_transport();
#else
    return std::make_shared<DenyNetworkTransport>();
#endif
}

// "app=url" pairs, or one bare URL used for every app of the suite.
std::map<std::string, std::string> app_urls(const std::vector<std::string>& specs, const Suite& suite) {
    std::map<std::string, std::string> out;
    for (const auto& s : specs) {
        auto eq = s.find('=');
        auto scheme = s.find("://");
        if (eq != std::string::npos && (scheme == std::string::npos || eq < scheme)) {
            out[s.substr(0, eq)] = s.substr(eq + 1);
        } else {
            for (const auto& tc : suite.cases) out.try_emplace(tc.app_id, s);
        }
    }
    return out;
}

std::shared_ptr<Driver> make_driver(const RunConfig& cfg, const Suite& suite,
                                    const std::shared_ptr<HttpTransport>& transport) {
    if (cfg.env == EnvKind::Simulator) {
        auto sim = std::make_shared<SimulatorDriver>();
        for (const auto& p : cfg.fixtures) {
            try {
                sim->add_fixture(load_fixture(p.string()));
            } catch (const Error& e) {
                throw InfraError(e.what());
            }
        }
        return sim;
    }
#ifdef ATA_HAVE_WEBDRIVER
    WebDriverConfig wd;
    wd.endpoint = cfg.webdriver_endpoint;
    wd.apps = app_urls(cfg.base_urls, suite);
    wd.reset_hook_url = cfg.reset_hook_url;
    return std::make_shared<WebDriverDriver>(transport, std::move(wd));
#else
    (void)suite;
    (void)transport;
    throw InfraError("real environment requested but the WebDriver backend is not built");
#endif
}

struct CaseBackends {
    std::map<std::string, std::shared_ptr<Backend>> by_component;
    std::map<std::string, std::shared_ptr<Cassette>> recordings;
};

std::shared_ptr<Backend> provider_backend(const RunConfig& cfg, const std::string& case_id,
                                          const std::string& component,
                                          const std::shared_ptr<HttpTransport>& transport) {
    if (cfg.backend.provider == "scripted") {
        auto path = cfg.backend.script_dir / fmt::format("{}.{}.script", case_id, component);
        std::ifstream in(path);
        if (!in) throw InfraError(fmt::format("missing response script {}", path.string()));
        std::stringstream ss;
        ss << in.rdbuf();
        return std::make_shared<ScriptedBackend>(parse_response_script(ss.str()));
    }
    auto pc = provider_config_from_env(provider_from_string(cfg.backend.provider));
    return make_live_backend(std::move(pc), transport);
}

CaseBackends make_backends(const RunConfig& cfg, const std::string& case_id,
                           const std::shared_ptr<HttpTransport>& transport) {
    CaseBackends out;
    for (const auto& comp : components_for(cfg.agent)) {
        switch (cfg.backend.mode) {
            case CassetteMode::Replay: {
                auto path = cassette_path(cfg.backend.cassette_dir, case_id, comp);
                if (!fs::exists(path)) throw InfraError(fmt::format("missing cassette {}", path.string()));
                try {
                    out.by_component[comp] = std::make_shared<ReplayBackend>(std::make_shared<Cassette>(Cassette::load(path)));
                } catch (const InfraError&) {
                    throw;
                } catch (const Error& e) {
                    throw InfraError(fmt::format("unreadable cassette {}: {}", path.string(), e.what()));
                }
                break;
            }
            case CassetteMode::Record: {
                auto cassette = std::make_shared<Cassette>();
                out.recordings[comp] = cassette;
                out.by_component[comp] =
                    std::make_shared<RecordingBackend>(provider_backend(cfg, case_id, comp, transport), cassette);
                break;
            }
            case CassetteMode::Live:
                out.by_component[comp] = provider_backend(cfg, case_id, comp, transport);
                break;
        }
    }
    return out;
}

CaseRecord run_case(const RunConfig& cfg, const TestCase& tc, Driver& driver,
                    const std::shared_ptr<HttpTransport>& transport) {
    CaseRecord rec;
    rec.case_id = tc.id;
    rec.app_id = tc.app_id;
    rec.ground = {tc.ground_truth, tc.expected_failure_step};
    rec.trace_file = (fs::path("traces") / (tc.id + ".trace.jsonl")).generic_string();

    auto started = std::chrono::steady_clock::now();
    auto finish = [&] {
        rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                          .count();
    };

    auto trace_path = cfg.out_dir / rec.trace_file;
    std::ofstream sink;
    std::unique_ptr<Clock> clock;
    if (cfg.backend.mode == CassetteMode::Replay) clock = std::make_unique<LogicalClock>();
    else clock = std::make_unique<SteadyClock>();

    try {
        fs::create_directories(trace_path.parent_path());
        sink.open(trace_path, std::ios::binary | std::ios::trunc);
        if (!sink) throw InfraError(fmt::format("cannot write trace {}", trace_path.string()));
        ExecutionTrace trace(tc.id, *clock, &sink);

        auto backends = make_backends(cfg, tc.id, transport);
        auto session = driver.reset(tc.app_id);
        rec.initial_observation_hash = observation_hash(session->observe());
        trace.add(std::nullopt, EventKind::Note, "harness",
                  {{"event", "reset"}, {"app", tc.app_id}, {"observation_hash", rec.initial_observation_hash}});

        if (cfg.agent == AgentKind::SeeAct) {
            SeeActConfig sc;
            sc.model_id = cfg.backend.model_id;
            sc.limits = cfg.limits;
            rec.agent = run_seeact(tc, *session, *backends.by_component.at("seeact"), sc, trace).verdict;
        } else {
            OrchestratorConfig oc;
            oc.max_retries = cfg.max_retries;
            oc.memory_budget = cfg.memory_budget;
            oc.parse_retries = static_cast<int>(cfg.limits.parse_retries);
            oc.orchestrator_model = oc.actor_model = oc.assertor_model = cfg.backend.model_id;
            PinataBackends pb{*backends.by_component.at("orchestrator"), *backends.by_component.at("actor"),
                              *backends.by_component.at("assertor")};
            rec.agent = orchestrate(tc, *session, pb, oc, trace).verdict;
        }
        session->close();

        for (const auto& [comp, cassette] : backends.recordings) {
            fs::create_directories(cfg.backend.cassette_dir);
            cassette->save(cassette_path(cfg.backend.cassette_dir, tc.id, comp));
        }
    } catch (const std::exception& e) {
        // Cassette mismatches, unreachable apps and unwritable outputs abort
        // only this case.
        rec.agent.reset();
        rec.infra_error = e.what();
        if (sink) {
            sink << to_json_line(TraceEvent{0, 0, std::nullopt, EventKind::Note, "harness", {{"infra_error", e.what()}}},
                                 tc.id)
                 << '\n';
            sink.flush();
        }
    }
    finish();
    return rec;
}

ordered_json ground_json(const GroundTruth& g) {
    ordered_json j;
    j["verdict"] = std::string(to_string(g.verdict));
    j["step"] = g.failure_step ? ordered_json(*g.failure_step) : ordered_json(nullptr);
    return j;
}

ordered_json verdict_json(const AgentVerdict& v) {
    ordered_json j;
    j["verdict"] = std::string(to_string(v.outcome));
    j["step"] = v.failed_step ? ordered_json(*v.failed_step) : ordered_json(nullptr);
    j["cause"] = v.cause ? ordered_json(std::string(to_string(*v.cause))) : ordered_json(nullptr);
    j["flags"] = ordered_json::array();
    for (auto f : v.flags) j["flags"].push_back(std::string(to_string(f)));
    return j;
}

ordered_json record_json(const CaseRecord& rec, std::string_view hash) {
    ordered_json j;
    j["case_id"] = rec.case_id;
    j["app_id"] = rec.app_id;
    j["ground"] = ground_json(rec.ground);
    j["status"] = rec.scored() ? "OK" : "INFRA_ERROR";
    j["agent"] = rec.agent ? verdict_json(*rec.agent) : ordered_json(nullptr);
    j["error"] = rec.infra_error;
    j["trace"] = rec.trace_file;
    j["initial_observation_hash"] = rec.initial_observation_hash;
    j["config_hash"] = std::string(hash);
    return j;
}

ordered_json metrics_json(const MetricsReport& m) {
    ordered_json j;
    auto values = metric_values(m);
    for (std::size_t i = 0; i < values.size(); ++i) {
        ordered_json v;
        if (values[i]) {
            v["value"] = values[i]->fixed2();
            v["exact"] = values[i]->str();
        } else {
            v["value"] = "n/a";
            v["exact"] = nullptr;
        }
        j[std::string(kMetricColumns[i])] = v;
    }
    const auto& c = m.counts;
    j["counts"] = {{"TP", c.tp}, {"TN", c.tn}, {"FP", c.fp}, {"FN", c.fn},
                   {"AFB", c.afb}, {"AFA", c.afa}, {"AFC", c.afc}};
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InfraError(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out.flush()) throw InfraError(fmt::format("cannot write {}", path.string()));
}

std::string verdict_cell(const GroundTruth& g) {
    if (g.verdict == Verdict::Pass) return "PASS";
    return g.failure_step ? fmt::format("FAIL@{}", *g.failure_step) : "FAIL";
}

}  // namespace

fs::path cassette_path(const fs::path& dir, std::string_view case_id, std::string_view component) {
    return dir / fmt::format("{}.{}.cassette.json", case_id, component);
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
    std::vector<std::string> errs;
    if (cfg.suite_path.empty()) errs.push_back("no suite given");
    if (cfg.parallel < 1) errs.push_back("parallelism must be a positive integer");
    if (cfg.parallel > 1 && cfg.env != EnvKind::Simulator)
        errs.push_back("parallel runs are only allowed in the simulator (real apps are shared between cases)");
    if (cfg.max_retries < 1) errs.push_back("max retries must be at least 1");
    if (cfg.memory_budget == 0) errs.push_back("memory budget must be positive");
    if (cfg.backend.model_id.empty()) errs.push_back("no model id given");

    const auto mode = cfg.backend.mode;
    if (mode == CassetteMode::Replay) {
        if (cfg.backend.cassette_dir.empty()) errs.push_back("replay mode requires a cassette directory");
        else if (!fs::is_directory(cfg.backend.cassette_dir))
            errs.push_back(fmt::format("cassette directory {} does not exist", cfg.backend.cassette_dir.string()));
    }
    if (mode == CassetteMode::Record && cfg.backend.cassette_dir.empty())
        errs.push_back("record mode requires a cassette directory");
    if (mode != CassetteMode::Replay) {
        if (cfg.backend.provider == "scripted") {
            if (!fs::is_directory(cfg.backend.script_dir))
                errs.push_back("the scripted provider requires an existing script directory");
        } else {
            try {
                (void)provider_from_string(cfg.backend.provider);
            } catch (const Error& e) {
                errs.push_back(e.what());
            }
        }
    }

    if (cfg.env == EnvKind::Simulator && cfg.fixtures.empty()) errs.push_back("the simulator requires at least one fixture");
    if (cfg.env == EnvKind::Real) {
        if (cfg.base_urls.empty()) errs.push_back("the real environment requires a base URL");
        if (!webdriver_built()) errs.push_back("the real environment requires the WebDriver backend (ATA_WITH_WEBDRIVER)");
    }
    return errs;
}

std::string config_snapshot(const RunConfig& cfg) {
    // Parallelism, output location and transport do not change results.
    std::vector<std::string> fixtures;
    for (const auto& f : cfg.fixtures) fixtures.push_back(f.generic_string());
    std::vector<std::pair<std::string, std::string>> kv = {
        {"agent", std::string(to_string(cfg.agent))},
        {"average", cfg.average == AverageMode::Pooled ? "pooled" : "macro"},
        {"base_urls", text::join(cfg.base_urls, ",")},
        {"cassettes", cfg.backend.cassette_dir.generic_string()},
        {"env", std::string(to_string(cfg.env))},
        {"fixtures", text::join(fixtures, ",")},
        {"max_iterations", std::to_string(cfg.limits.max_iterations)},
        {"max_retries", std::to_string(cfg.max_retries)},
        {"memory_budget", std::to_string(cfg.memory_budget)},
        {"mode", std::string(to_string(cfg.backend.mode))},
        {"model", cfg.backend.model_id},
        {"parse_retries", std::to_string(cfg.limits.parse_retries)},
        {"provider", cfg.backend.provider},
        {"reset_hook", cfg.reset_hook_url.value_or("")},
        {"scripts", cfg.backend.script_dir.generic_string()},
        {"suite", cfg.suite_path.generic_string()},
        {"webdriver", cfg.env == EnvKind::Real ? cfg.webdriver_endpoint : ""},
    };
    std::string out;
    for (const auto& [k, v] : kv) out += fmt::format("{}={}\n", k, v);
    return out;
}

std::string config_hash(const RunConfig& cfg) { return text::sha256_hex(config_snapshot(cfg)); }

std::vector<const CaseRecord*> RunReport::infra_errors() const {
    std::vector<const CaseRecord*> out;
    for (const auto& c : cases)
        if (!c.scored()) out.push_back(&c);
    return out;
}

std::vector<ResultPair> result_pairs(const std::vector<CaseRecord>& records) {
    std::vector<ResultPair> pairs;
    for (const auto& r : records)
        if (r.agent) pairs.push_back({r.case_id, r.app_id, r.ground, *r.agent});
    return pairs;
}

RunReport run_suite(const RunConfig& cfg) {
    if (cfg.suite_path.empty()) throw InfraError("no suite given");
    return run_suite(cfg, load_suite(cfg.suite_path.string()));
}

RunReport run_suite(const RunConfig& cfg, const Suite& suite) {
    if (auto errs = validate_config(cfg); !errs.empty()) throw InfraError("invalid configuration: " + text::join(errs, "; "));

    // Against real apps a case that cannot replay must not even be reset,
    // so every cassette is checked before anything runs.
    if (cfg.env == EnvKind::Real && cfg.backend.mode == CassetteMode::Replay) {
        std::vector<std::string> missing;
        for (const auto& tc : suite.cases)
            for (const auto& comp : components_for(cfg.agent))
                if (auto p = cassette_path(cfg.backend.cassette_dir, tc.id, comp); !fs::exists(p))
                    missing.push_back(p.string());
        if (!missing.empty()) throw InfraError("missing cassettes for a real-environment replay: " + text::join(missing, ", "));
    }

    auto started = std::chrono::steady_clock::now();
    RunReport report;
    report.config_snapshot = config_snapshot(cfg);
    report.config_hash = config_hash(cfg);

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw InfraError(fmt::format("cannot create output directory {}: {}", cfg.out_dir.string(), ec.message()));

    // Replay never needs a transport; keep it that way so no socket can open.
    std::shared_ptr<HttpTransport> transport = cfg.transport;
    if (!transport) {
        if (cfg.backend.mode == CassetteMode::Replay && cfg.env == EnvKind::Simulator)
            transport = std::make_shared<DenyNetworkTransport>();
        else
            transport = default_transport();
    }
    auto driver = make_driver(cfg, suite, transport);

    report.cases.resize(suite.cases.size());
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallel), suite.cases.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < suite.cases.size(); ++i)
            report.cases[i] = run_case(cfg, suite.cases[i], *driver, transport);
    } else {
        // Simulator only: every session owns its own page state.
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (auto i = next++; i < suite.cases.size(); i = next++)
                    report.cases[i] = run_case(cfg, suite.cases[i], *driver, transport);
            });
    }

    report.table = score_by_app(result_pairs(report.cases), cfg.average);
    report.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string result_line(const CaseRecord& rec, std::string_view hash) { return record_json(rec, hash).dump(); }

CaseRecord parse_result_line(std::string_view line) {
    try {
        auto j = ordered_json::parse(line);
        CaseRecord rec;
        rec.case_id = j.at("case_id").get<std::string>();
        rec.app_id = j.value("app_id", "");
        if (j.contains("ground") && j["ground"].is_object()) {
            const auto& g = j["ground"];
            rec.ground.verdict = verdict_from_string(g.at("verdict").get<std::string>());
            if (g.contains("step") && !g["step"].is_null()) rec.ground.failure_step = g["step"].get<std::size_t>();
        }
        if (j.contains("agent") && j["agent"].is_object()) {
            const auto& a = j["agent"];
            AgentVerdict v;
            v.outcome = verdict_from_string(a.at("verdict").get<std::string>());
            if (a.contains("step") && !a["step"].is_null()) v.failed_step = a["step"].get<std::size_t>();
            if (a.contains("cause") && !a["cause"].is_null())
                v.cause = failure_cause_from_string(a["cause"].get<std::string>());
            for (const auto& f : a.value("flags", ordered_json::array())) v.flags.insert(verdict_flag_from_string(f.get<std::string>()));
            if (!v.consistent()) throw ScoringError(fmt::format("case {}: FAIL needs a step and a cause", rec.case_id));
            rec.agent = v;
        }
        rec.infra_error = j.value("error", "");
        rec.trace_file = j.value("trace", "");
        rec.initial_observation_hash = j.value("initial_observation_hash", "");
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw ScoringError(fmt::format("unreadable result record: {}", e.what()));
    }
}

std::string render_text_report(const RunReport& report) {
    std::string out = fmt::format("config {}\n", report.config_hash);
    out += report.config_snapshot;
    out += '\n';
    out += render_table(report.table);

    auto pairs = result_pairs(report.cases);
    std::map<std::string, Classification> classes;
    for (const auto& p : pairs) classes[p.case_id] = classify(p);

    out += fmt::format("\nCases ({})\n", report.cases.size());
    for (const auto& c : report.cases) {
        if (!c.agent) {
            out += fmt::format("  {:<24} {:<12} ground={:<8} INFRA_ERROR\n", c.case_id, c.app_id, verdict_cell(c.ground));
            continue;
        }
        const auto& cl = classes.at(c.case_id);
        std::string tag(to_string(cl.outcome));
        if (cl.alignment) tag += fmt::format(" {}", to_string(*cl.alignment));
        out += fmt::format("  {:<24} {:<12} ground={:<8} agent={:<40} {}\n", c.case_id, c.app_id,
                           verdict_cell(c.ground), describe(*c.agent), tag);
    }

    auto infra = report.infra_errors();
    out += fmt::format("\nInfrastructure errors ({})\n", infra.size());
    for (const auto* c : infra) out += fmt::format("  {}: {}\n", c->case_id, c->infra_error);
    return out;
}

void emit_report(const RunReport& report, ReportFormat format, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw InfraError(fmt::format("unwritable output directory {}", out_dir.string()));

    if (format == ReportFormat::Text) {
        write_file(out_dir / "report.txt", render_text_report(report));
        return;
    }

    fs::create_directories(out_dir / "records", ec);
    if (ec) throw InfraError(fmt::format("unwritable output directory {}", (out_dir / "records").string()));
    std::string lines;
    for (const auto& c : report.cases) {
        write_file(out_dir / "records" / (c.case_id + ".json"), record_json(c, report.config_hash).dump(2) + "\n");
        lines += result_line(c, report.config_hash) + "\n";
    }
    write_file(out_dir / "results.jsonl", lines);

    ordered_json summary;
    summary["config_hash"] = report.config_hash;
    summary["config"] = report.config_snapshot;
    summary["cases"] = report.cases.size();
    summary["scored"] = report.cases.size() - report.infra_errors().size();
    summary["metrics"] = ordered_json::object();
    for (const auto& row : report.table.apps) summary["metrics"][row.label] = metrics_json(row.metrics);
    if (!report.table.apps.empty()) summary["metrics"][report.table.average.label] = metrics_json(report.table.average.metrics);
    summary["infra_errors"] = ordered_json::array();
    for (const auto* c : report.infra_errors()) summary["infra_errors"].push_back({{"case_id", c->case_id}, {"error", c->infra_error}});
    summary["wall_ms"] = {{"total", report.wall_ms}, {"cases", ordered_json::object()}};
    for (const auto& c : report.cases) summary["wall_ms"]["cases"][c.case_id] = c.wall_ms;
    write_file(out_dir / "summary.json", summary.dump(2) + "\n");
}

ScoreTable score_results(const Suite& ground, const fs::path& results, AverageMode mode) {
    std::ifstream in(results);
    if (!in) throw ScoringError(fmt::format("cannot read results {}", results.string()));

    std::vector<CaseRecord> records;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        CaseRecord rec;
        try {
            rec = parse_result_line(line);
        } catch (const ScoringError& e) {
            throw ScoringError(fmt::format("{}:{}: {}", results.string(), lineno, e.what()));
        }
        const auto* tc = ground.find(rec.case_id);
        if (!tc) throw ScoringError(fmt::format("unknown case id '{}' in results", rec.case_id));
        if (!seen.insert(rec.case_id).second) throw ScoringError(fmt::format("duplicate result for case '{}'", rec.case_id));
        // Ground truth always comes from the suite, never from the record.
        rec.app_id = tc->app_id;
        rec.ground = {tc->ground_truth, tc->expected_failure_step};
        records.push_back(std::move(rec));
    }

    std::vector<std::string> missing;
    for (const auto& tc : ground.cases)
        if (!seen.contains(tc.id)) missing.push_back(tc.id);
    if (!missing.empty()) throw ScoringError("missing results for cases: " + text::join(missing, ", "));

    return score_by_app(result_pairs(records), mode);
}

}  // namespace ata
