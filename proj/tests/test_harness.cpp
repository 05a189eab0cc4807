#include "support.hpp"

#include "ata/webdriver.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace ata;
using namespace ata::testing;
namespace fs = std::filesystem;

namespace {

std::map<std::string, AgentVerdict> verdicts(const RunReport& r) {
    std::map<std::string, AgentVerdict> out;
    for (const auto& c : r.cases)
        if (c.agent) out[c.case_id] = *c.agent;
    return out;
}

std::string tree_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "summary.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, dir).generic_string() + "\n" + slurp(f) + "\n";
    return text::sha256_hex(all);
}

/// Minimal WebDriver remote end serving one static page.
class FakeWebDriver : public HttpTransport {
public:
    std::vector<HttpRequest> seen;
    bool fail_create = false;
    HttpResponse send(const HttpRequest& r) override {
        seen.push_back(r);
        using nlohmann::json;
        auto ends = [&](std::string_view s) { return r.url.ends_with(s); };
        if (ends("/hook")) return {200, "{}"};
        if (ends("/session")) {
            if (fail_create) return {500, "boom"};
            return {200, R"({"value":{"sessionId":"S1","capabilities":{}}})"};
        }
        if (ends("/url")) return {200, R"({"value":null})"};
        if (ends("/screenshot")) return {200, json{{"value", text::base64_encode("\x89PNG fake")}}.dump()};
        if (ends("/execute/sync")) {
            auto body = json::parse(r.body);
            auto js = body["script"].get<std::string>();
            if (body["args"].empty() && js.find("elements") != std::string::npos) {
                json page = {{"url", "http://app/"}, {"title", "Home"}, {"width", 800}, {"height", 600},
                             {"elements", json::array({{{"mark", 1}, {"tag", "a"}, {"text", "Login"}, {"x", 10}, {"y", 10}, {"w", 50}, {"h", 20}}})}};
                return {200, json{{"value", page}}.dump()};
            }
            if (body["args"] == json::array({1})) return {200, R"({"value":{"element-6066-11e4-a52e-4f735466cecf":"E1"}})"};
            return {200, R"({"value":null})"};
        }
        if (ends("/element/E1/click")) return {200, R"({"value":null})"};
        if (r.method == "DELETE") return {200, R"({"value":null})"};
        return {404, R"({"value":{"error":"no such element"}})"};
    }
};

}  // namespace

TEST_SUITE("harness_cli") {
    TEST_CASE("config validation") {
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", scratch("cfg"));
        CHECK(validate_config(cfg).empty());

        auto bad = cfg;
        bad.backend.cassette_dir = "/nonexistent/cassettes";
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.backend.cassette_dir.clear();
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.fixtures.clear();
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.max_retries = 0;
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.parallel = 0;
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.env = EnvKind::Real;
        bad.parallel = 2;
        bad.base_urls = {"http://localhost:3000"};
        CHECK_FALSE(validate_config(bad).empty());
        bad = cfg;
        bad.backend.mode = CassetteMode::Live;
        bad.backend.provider = "acme";
        CHECK_FALSE(validate_config(bad).empty());
        bad.backend.provider = "scripted";
        CHECK_FALSE(validate_config(bad).empty());
        bad.backend.script_dir = data_dir() / "scripts";
        CHECK(validate_config(bad).empty());

        CHECK_THROWS_AS(run_suite(RunConfig{}), InfraError);
    }

    TEST_CASE("config hash covers results, not scheduling") {
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", "a");
        auto other = cfg;
        other.out_dir = "b";
        other.parallel = 4;
        CHECK(config_hash(cfg) == config_hash(other));
        other.max_retries = 5;
        CHECK(config_hash(cfg) != config_hash(other));
        CHECK(config_hash(cfg).size() == 64);
        auto snap = config_snapshot(cfg);
        CHECK(snap.find("max_retries=3") != std::string::npos);
        CHECK(snap.find("parallel") == std::string::npos);
    }

    TEST_CASE("sample suite replays to the recorded verdicts") {
        auto out = scratch("harness-pinata");
        auto report = run_suite(replay_config(AgentKind::Pinata, "sample.suite", out));
        CHECK(report.ok());
        auto v = verdicts(report);
        CHECK(v.at("classified-01") == AgentVerdict::pass());
        CHECK(v.at("classified-02") == AgentVerdict::fail(9, FailureCause::Action));
        CHECK(v.at("classified-03") == AgentVerdict::pass());
        CHECK(v.at("classified-04") == AgentVerdict::fail(2, FailureCause::Action));
        CHECK(v.at("classified-05") == AgentVerdict::pass());
        CHECK(v.at("classified-06") == AgentVerdict::fail(2, FailureCause::Assertion));

        // Every case starts from a pristine page.
        auto fresh = observation_hash(home_session().observe());
        for (const auto& c : report.cases) CHECK(c.initial_observation_hash == fresh);
        for (const auto& c : report.cases) CHECK(fs::exists(out / c.trace_file));
    }

    TEST_CASE("replay is deterministic, sequential or parallel") {
        auto a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
        for (auto agent : {AgentKind::Pinata, AgentKind::SeeAct}) {
            auto cfg = replay_config(agent, "sample.suite", a);
            auto r1 = run_suite(cfg);
            emit_report(r1, ReportFormat::Text, a);
            emit_report(r1, ReportFormat::Records, a);
            cfg.out_dir = b;
            auto r2 = run_suite(cfg);
            emit_report(r2, ReportFormat::Text, b);
            emit_report(r2, ReportFormat::Records, b);
            cfg.out_dir = c;
            cfg.parallel = 3;
            auto r3 = run_suite(cfg);
            emit_report(r3, ReportFormat::Text, c);
            emit_report(r3, ReportFormat::Records, c);
            CHECK(tree_digest(a) == tree_digest(b));
            CHECK(tree_digest(a) == tree_digest(c));
        }
    }

    TEST_CASE("SeeAct replay verdicts") {
        auto report = run_suite(replay_config(AgentKind::SeeAct, "sample.suite", scratch("harness-seeact")));
        auto v = verdicts(report);
        CHECK(v.at("classified-02") == AgentVerdict::fail(9, FailureCause::Assertion));
        CHECK(v.at("classified-06") == AgentVerdict::fail(2, FailureCause::Assertion));
        CHECK(v.at("classified-05") == AgentVerdict::pass());
    }

    TEST_CASE("empty suite gives an empty table") {
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", scratch("empty"));
        auto report = run_suite(cfg, parse_suite("suite: none\nmanifest:\n"));
        CHECK(report.cases.empty());
        CHECK(report.table.apps.empty());
        CHECK(report.ok());
    }

    TEST_CASE("a missing cassette isolates one case") {
        auto dir = scratch("partial-cassettes");
        for (const auto& e : fs::directory_iterator(data_dir() / "cassettes" / "pinata"))
            if (e.path().filename().string().rfind("classified-03.", 0) != 0) fs::copy(e.path(), dir / e.path().filename());
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", scratch("partial-out"));
        cfg.backend.cassette_dir = dir;
        auto report = run_suite(cfg);
        REQUIRE(report.infra_errors().size() == 1);
        CHECK(report.infra_errors().front()->case_id == "classified-03");
        CHECK(report.infra_errors().front()->infra_error.find("missing cassette") != std::string::npos);
        CHECK(verdicts(report).size() == 5);
        // Infra errors are not scored.
        CHECK(report.table.apps.at(0).metrics.counts.total() == 5);
    }

    TEST_CASE("reports: byte-identical emission, text header, rescoring") {
        auto out = scratch("emit");
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", out);
        auto report = run_suite(cfg);
        emit_report(report, ReportFormat::Text, out);
        emit_report(report, ReportFormat::Records, out);
        auto first_text = slurp(out / "report.txt");
        auto first_results = slurp(out / "results.jsonl");
        emit_report(report, ReportFormat::Text, out);
        emit_report(report, ReportFormat::Records, out);
        CHECK(slurp(out / "report.txt") == first_text);
        CHECK(slurp(out / "results.jsonl") == first_results);
        CHECK(first_text.starts_with("config " + report.config_hash + "\n"));
        CHECK(first_text.find(render_table(report.table)) != std::string::npos);
        CHECK(fs::exists(out / "records" / "classified-01.json"));
        auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
        CHECK(summary["config_hash"] == report.config_hash);

        for (const auto& line : text::split_lines(first_results)) {
            if (line.empty()) continue;
            auto rec = parse_result_line(line);
            CHECK(result_line(rec, report.config_hash) == line);
        }

        auto rescored = score_results(sample_suite(), out / "results.jsonl");
        CHECK(render_table(rescored) == render_table(report.table));

        // Unknown, duplicate and missing cases are errors.
        auto lines = text::split_lines(first_results);
        auto write = [&](const std::string& name, const std::string& body) {
            std::ofstream(out / name) << body;
            return out / name;
        };
        CHECK_THROWS_AS(score_results(sample_suite(), write("dup.jsonl", first_results + lines[0] + "\n")), ScoringError);
        CHECK_THROWS_AS(score_results(sample_suite(), write("short.jsonl", lines[0] + "\n")), ScoringError);
        auto foreign = lines[0];
        foreign.replace(foreign.find("classified-01"), 13, "classified-99");
        CHECK_THROWS_AS(score_results(sample_suite(), write("foreign.jsonl", first_results + foreign + "\n")), ScoringError);
    }

    TEST_CASE("unwritable output directory") {
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", "/proc/ata-cannot-write");
        CHECK_THROWS_AS(run_suite(cfg), InfraError);
        cfg.out_dir = scratch("writable");
        auto report = run_suite(cfg, parse_suite("suite: none\nmanifest:\n"));
        CHECK_THROWS_AS(emit_report(report, ReportFormat::Text, "/proc/ata-cannot-write"), InfraError);
    }

#ifdef ATA_HAVE_WEBDRIVER
    TEST_CASE("real environment replay preflights every cassette") {
        auto dir = scratch("real-preflight");
        auto cfg = replay_config(AgentKind::Pinata, "sample.suite", scratch("real-out"));
        cfg.env = EnvKind::Real;
        cfg.base_urls = {"http://localhost:3000"};
        cfg.backend.cassette_dir = dir;
        auto fake = std::make_shared<FakeWebDriver>();
        cfg.transport = fake;
        CHECK_THROWS_AS(run_suite(cfg), InfraError);
        CHECK(fake->seen.empty());
    }

    TEST_CASE("WebDriver client speaks the wire protocol") {
        auto fake = std::make_shared<FakeWebDriver>();
        WebDriverConfig wc;
        wc.endpoint = "http://wd";
        wc.apps = {{"classified", "http://app/"}};
        wc.reset_hook_url = "http://app/hook";
        WebDriverDriver driver(fake, wc);
        CHECK_THROWS_AS(driver.reset("unknown"), DriverError);

        auto session = driver.reset("classified");
        REQUIRE(fake->seen.size() >= 3);
        CHECK(fake->seen[0].url == "http://app/hook");
        CHECK(fake->seen[1].url == "http://wd/session");
        CHECK(fake->seen[1].body.find("browserName") != std::string::npos);

        auto obs = session->observe();
        CHECK(obs.title == "Home");
        REQUIRE(obs.elements.size() == 1);
        CHECK(obs.elements[0].text == "Login");
        CHECK(obs.screenshot.kind == ScreenshotArtifact::Kind::Image);
        CHECK(obs.screenshot.payload == "\x89PNG fake");

        CHECK(session->execute(BrowserCommand::click(1)).ok());
        CHECK(session->execute(BrowserCommand::click(7)).status == CommandResult::Status::TargetNotFound);
        session->close();
        CHECK_FALSE(session->is_open());
        CHECK_THROWS_AS(session->observe(), DriverError);

        fake->fail_create = true;
        CHECK_THROWS_AS(driver.reset("classified"), DriverError);
    }
#endif
}
