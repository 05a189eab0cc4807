#include "ata/testcase.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace ata {

std::string_view to_string(Verdict v) { return v == Verdict::Pass ? "PASS" : "FAIL"; }

Verdict verdict_from_string(std::string_view s) {
    auto t = text::trim(s);
    if (text::iequals(t, "PASS")) return Verdict::Pass;
    if (text::iequals(t, "FAIL")) return Verdict::Fail;
    throw Error(fmt::format("unknown verdict '{}'", t));
}

const TestCase* Suite::find(std::string_view id) const {
    for (const auto& c : cases)
        if (c.id == id) return &c;
    return nullptr;
}

SuiteError::SuiteError(std::size_t line, std::size_t column, std::string message)
    : Error(line ? fmt::format("line {}:{}: {}", line, column, message) : message),
      line_(line),
      column_(column),
      message_(std::move(message)) {}

std::vector<std::string> validate_case(const TestCase& tc) {
    std::vector<std::string> out;
    if (text::trim(tc.id).empty()) out.emplace_back("id must be non-empty");
    if (tc.steps.empty()) out.emplace_back("steps must contain at least one step");
    for (std::size_t i = 0; i < tc.steps.size(); ++i) {
        if (tc.steps[i].index != i + 1) {
            out.push_back(fmt::format("non-contiguous step index at position {}", i + 1));
            break;
        }
    }
    for (std::size_t i = 0; i < tc.steps.size(); ++i) {
        if (text::trim(tc.steps[i].action).empty())
            out.push_back(fmt::format("empty action at position {}", i + 1));
    }
    if (tc.ground_truth == Verdict::Pass && tc.expected_failure_step)
        out.emplace_back("expected_failure_step forbidden for PASS");
    if (tc.ground_truth == Verdict::Fail && !tc.expected_failure_step)
        out.emplace_back("expected_failure_step required for FAIL");
    if (tc.expected_failure_step && (*tc.expected_failure_step == 0 || *tc.expected_failure_step > tc.steps.size()))
        out.emplace_back("failure step out of range");
    return out;
}

std::map<std::string, ManifestEntry> tally(const std::vector<TestCase>& cases) {
    std::map<std::string, ManifestEntry> out;
    for (const auto& c : cases) {
        auto& e = out[c.app_id];
        (c.ground_truth == Verdict::Pass ? e.pass_count : e.fail_count)++;
    }
    return out;
}

namespace {

struct Line {
    std::size_t number;
    std::size_t column;  // first non-blank character
    std::string_view content;
};

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

class SuiteParser {
public:
    explicit SuiteParser(std::string_view raw) {
        if (!text::is_valid_utf8(raw)) throw SuiteError(0, 0, "suite file is not valid UTF-8");
        std::size_t n = 0;
        for (const auto& l : text::split_lines(raw)) {
            ++n;
            storage_.push_back(l);
        }
        for (std::size_t i = 0; i < storage_.size(); ++i) {
            std::string_view v = storage_[i];
            auto t = text::trim(v);
            if (t.empty() || t.front() == '#') continue;
            lines_.push_back({i + 1, static_cast<std::size_t>(t.data() - v.data()) + 1, t});
        }
    }

    Suite parse() {
        Suite suite;
        std::size_t manifest_line = 0;
        bool have_manifest = false;
        std::vector<std::size_t> case_lines;
        while (pos_ < lines_.size()) {
            const auto& l = lines_[pos_];
            auto [key, value] = split_key(l);
            if (key == "suite") {
                if (!suite.name.empty()) fail(l, "duplicate suite header");
                suite.name = std::string(value);
                ++pos_;
            } else if (key == "manifest") {
                if (have_manifest) fail(l, "duplicate manifest block");
                if (!value.empty()) fail(l, "manifest: takes no inline value");
                have_manifest = true;
                manifest_line = l.number;
                ++pos_;
                parse_manifest(suite);
            } else if (key == "case") {
                if (!value.empty()) fail(l, "case: takes no inline value");
                case_lines.push_back(l.number);
                ++pos_;
                suite.cases.push_back(parse_case(l));
            } else {
                fail(l, fmt::format("unexpected '{}' at top level", l.content));
            }
        }

        std::set<std::string> ids;
        for (std::size_t i = 0; i < suite.cases.size(); ++i) {
            if (!ids.insert(suite.cases[i].id).second)
                throw SuiteError(case_lines[i], 1, fmt::format("duplicate case id '{}'", suite.cases[i].id));
        }

        auto actual = tally(suite.cases);
        for (const auto& [app, declared] : suite.manifest) {
            auto it = actual.find(app);
            ManifestEntry found = it == actual.end() ? ManifestEntry{} : it->second;
            if (found != declared)
                throw SuiteError(manifest_line, 1,
                                 fmt::format("manifest mismatch for '{}': declared {} pass / {} fail, found {} / {}", app,
                                             declared.pass_count, declared.fail_count, found.pass_count,
                                             found.fail_count));
        }
        for (const auto& [app, found] : actual) {
            if (!suite.manifest.contains(app))
                throw SuiteError(manifest_line, 1,
                                 fmt::format("manifest mismatch: application '{}' has {} pass / {} fail cases but no "
                                             "manifest entry",
                                             app, found.pass_count, found.fail_count));
        }
        return suite;
    }

private:
    [[noreturn]] static void fail(const Line& l, std::string msg) { throw SuiteError(l.number, l.column, std::move(msg)); }

    // "key: value" → {key, value}; a line without ':' yields an empty key.
    static std::pair<std::string_view, std::string_view> split_key(const Line& l) {
        auto colon = l.content.find(':');
        if (colon == std::string_view::npos) return {{}, l.content};
        auto key = text::trim(l.content.substr(0, colon));
        for (char c : key)
            if (c == ' ') return {{}, l.content};
        return {key, text::trim(l.content.substr(colon + 1))};
    }

    static bool is_block_start(std::string_view key) {
        return key == "suite" || key == "manifest" || key == "case";
    }

    void parse_manifest(Suite& suite) {
        while (pos_ < lines_.size()) {
            const auto& l = lines_[pos_];
            auto [key, value] = split_key(l);
            if (is_block_start(key)) return;
            std::istringstream in{std::string(l.content)};
            std::string app, p, f, extra;
            in >> app >> p >> f;
            if (app.empty() || f.empty() || (in >> extra))
                fail(l, "manifest entry must be 'app_id pass_count fail_count'");
            auto pc = parse_count(p);
            auto fc = parse_count(f);
            if (!pc || !fc) fail(l, "manifest counts must be non-negative integers");
            if (!suite.manifest.emplace(app, ManifestEntry{*pc, *fc}).second)
                fail(l, fmt::format("duplicate manifest entry '{}'", app));
            ++pos_;
        }
    }

    // Appends "| text" continuation lines to `target`.
    void continuation(std::string& target) {
        while (pos_ < lines_.size() && lines_[pos_].content.front() == '|') {
            auto rest = lines_[pos_].content.substr(1);
            if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
            target += '\n';
            target += rest;
            ++pos_;
        }
    }

    TestCase parse_case(const Line& head) {
        TestCase tc;
        std::set<std::string, std::less<>> seen;
        bool have_truth = false;
        while (pos_ < lines_.size()) {
            const auto& l = lines_[pos_];
            auto [key, value] = split_key(l);
            if (is_block_start(key)) break;
            if (key.empty()) {
                // "step N:" has a space in the key, handled here.
                parse_step(l, tc);
                continue;
            }
            if (!seen.insert(std::string(key)).second) fail(l, fmt::format("duplicate field '{}'", key));
            ++pos_;
            if (key == "id") {
                tc.id = std::string(value);
            } else if (key == "app") {
                tc.app_id = std::string(value);
            } else if (key == "title") {
                tc.title = std::string(value);
                continuation(tc.title);
            } else if (key == "ground_truth") {
                if (value == "PASS") tc.ground_truth = Verdict::Pass;
                else if (value == "FAIL") tc.ground_truth = Verdict::Fail;
                else fail(l, fmt::format("ground_truth must be PASS or FAIL, got '{}'", value));
                have_truth = true;
            } else if (key == "expected_failure_step") {
                auto v = parse_count(value);
                if (!v) fail(l, "expected_failure_step must be a positive integer");
                tc.expected_failure_step = *v;
            } else {
                fail(l, fmt::format("unknown case field '{}'", key));
            }
        }
        if (tc.id.empty()) fail(head, "case is missing 'id'");
        if (tc.app_id.empty()) fail(head, fmt::format("case '{}' is missing 'app'", tc.id));
        if (!have_truth) fail(head, fmt::format("case '{}' is missing 'ground_truth'", tc.id));
        auto violations = validate_case(tc);
        if (!violations.empty()) fail(head, fmt::format("case '{}': {}", tc.id, violations.front()));
        return tc;
    }

    void parse_step(const Line& l, TestCase& tc) {
        auto c = l.content;
        if (!c.starts_with("step ") || c.back() != ':') fail(l, fmt::format("unexpected '{}' in case block", c));
        auto idx = parse_count(text::trim(c.substr(5, c.size() - 6)));
        if (!idx || *idx == 0) fail(l, "step index must be a positive integer");
        ++pos_;
        Step step;
        step.index = *idx;
        bool have_action = false;
        while (pos_ < lines_.size()) {
            const auto& sl = lines_[pos_];
            auto [key, value] = split_key(sl);
            if (key == "action") {
                if (have_action) fail(sl, "duplicate 'action' in step");
                have_action = true;
                ++pos_;
                step.action = std::string(value);
                continuation(step.action);
            } else if (key == "expect") {
                if (step.assertion) fail(sl, "duplicate 'expect' in step");
                ++pos_;
                step.assertion = std::string(value);
                continuation(*step.assertion);
            } else {
                break;
            }
        }
        if (!have_action) fail(l, fmt::format("step {} has no 'action'", *idx));
        tc.steps.push_back(std::move(step));
    }

    std::vector<std::string> storage_;
    std::vector<Line> lines_;
    std::size_t pos_ = 0;
};

void emit_value(std::string& out, std::string_view indent, std::string_view key, std::string_view value) {
    auto lines = text::split_lines(value);
    out += fmt::format("{}{}: {}\n", indent, key, lines.empty() ? std::string() : lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) out += fmt::format("{}  | {}\n", indent, lines[i]);
    // split_lines swallows a trailing newline; keep it representable.
    if (!value.empty() && value.back() == '\n') out += fmt::format("{}  |\n", indent);
}

}  // namespace

Suite parse_suite(std::string_view raw) { return SuiteParser(raw).parse(); }

Suite load_suite(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open suite file '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_suite(ss.str());
}

std::string serialize_suite(const Suite& suite) {
    std::string out;
    if (!suite.name.empty()) out += fmt::format("suite: {}\n", suite.name);
    out += "manifest:\n";
    for (const auto& [app, e] : suite.manifest) out += fmt::format("  {} {} {}\n", app, e.pass_count, e.fail_count);
    for (const auto& tc : suite.cases) {
        out += "\ncase:\n";
        out += fmt::format("  id: {}\n", tc.id);
        out += fmt::format("  app: {}\n", tc.app_id);
        emit_value(out, "  ", "title", tc.title);
        out += fmt::format("  ground_truth: {}\n", to_string(tc.ground_truth));
        if (tc.expected_failure_step) out += fmt::format("  expected_failure_step: {}\n", *tc.expected_failure_step);
        for (const auto& s : tc.steps) {
            out += fmt::format("  step {}:\n", s.index);
            emit_value(out, "    ", "action", s.action);
            if (s.assertion) emit_value(out, "    ", "expect", *s.assertion);
        }
    }
    return out;
}

std::string render_case_text(const TestCase& tc) {
    // Multi-line texts are indented under their step so the table shape
    // survives prompt embedding.
    auto flat = [](std::string_view s) {
        auto lines = text::split_lines(s);
        return text::join(lines, "\n    ");
    };
    std::string out;
    if (!tc.title.empty()) out += fmt::format("Test case: {}\n", flat(tc.title));
    for (const auto& s : tc.steps) {
        out += fmt::format("Step {} — Action: {}", s.index, flat(s.action));
        if (s.assertion && !text::trim(*s.assertion).empty()) out += fmt::format(" | Expected: {}", flat(*s.assertion));
        out += '\n';
    }
    return out;
}

}  // namespace ata
