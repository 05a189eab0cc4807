#pragma once

// Natural-language end-to-end test cases, suites and their text format.

#include "ata/text.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

enum class Verdict { Pass, Fail };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct Step {
    std::size_t index = 0;  // 1-based
    std::string action;
    std::optional<std::string> assertion;

    bool operator==(const Step&) const = default;
};

struct TestCase {
    std::string id;
    std::string app_id;
    std::string title;
    std::vector<Step> steps;
    Verdict ground_truth = Verdict::Pass;
    std::optional<std::size_t> expected_failure_step;

    bool operator==(const TestCase&) const = default;
};

struct ManifestEntry {
    std::size_t pass_count = 0;
    std::size_t fail_count = 0;

    bool operator==(const ManifestEntry&) const = default;
};

struct Suite {
    std::string name;
    std::map<std::string, ManifestEntry> manifest;
    std::vector<TestCase> cases;

    const TestCase* find(std::string_view id) const;
    bool operator==(const Suite&) const = default;
};

/// Thrown by parse_suite. line/column are 1-based; 0 means "whole document".
class SuiteError : public Error {
public:
    SuiteError(std::size_t line, std::size_t column, std::string message);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// Returns one human-readable entry per broken invariant; empty when valid.
std::vector<std::string> validate_case(const TestCase& tc);

Suite parse_suite(std::string_view raw);
Suite load_suite(const std::string& path);
std::string serialize_suite(const Suite& suite);

/// Prompt-facing rendering of a case. Never includes ground-truth labels.
std::string render_case_text(const TestCase& tc);

/// Per-application counts derived from the cases themselves.
std::map<std::string, ManifestEntry> tally(const std::vector<TestCase>& cases);

}  // namespace ata
