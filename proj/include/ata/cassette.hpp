#pragma once

// Record/replay of chat completions keyed by request fingerprint.

#include "ata/llm.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace ata {

enum class CassetteMode { Live, Record, Replay };

std::string_view to_string(CassetteMode m);
CassetteMode cassette_mode_from_string(std::string_view s);

struct CassetteEntry {
    std::string fingerprint;
    std::string canonical_request;
    ChatResponse response;
};

/// Ordered list of exchanges. Replay consumes entries strictly in order.
class Cassette {
public:
    Cassette() = default;
    explicit Cassette(std::vector<CassetteEntry> entries) : entries_(std::move(entries)) {}

    static Cassette load(const std::filesystem::path& path);
    static Cassette parse(std::string_view json);
    void save(const std::filesystem::path& path) const;
    std::string serialize() const;

    const std::vector<CassetteEntry>& entries() const { return entries_; }
    void append(CassetteEntry e) { entries_.push_back(std::move(e)); }

    std::size_t cursor() const { return cursor_; }
    bool exhausted() const { return cursor_ >= entries_.size(); }
    const CassetteEntry& next() const { return entries_.at(cursor_); }
    void advance() { ++cursor_; }
    void rewind() { cursor_ = 0; }

private:
    std::vector<CassetteEntry> entries_;
    std::size_t cursor_ = 0;
};

class CassetteExhausted : public LlmError {
public:
    using LlmError::LlmError;
};

class FingerprintMismatch : public LlmError {
public:
    FingerprintMismatch(std::size_t entry, std::size_t first_line, std::string expected_line, std::string actual_line,
                        std::string diff);

    std::size_t entry() const { return entry_; }
    /// 1-based line of the canonical request where the two first differ.
    std::size_t first_differing_line() const { return first_line_; }
    const std::string& diff() const { return diff_; }

private:
    std::size_t entry_;
    std::size_t first_line_;
    std::string diff_;
};

/// Line-based unified diff (3 lines of context).
std::string unified_diff(std::string_view expected, std::string_view actual, std::string_view expected_name = "recorded",
                         std::string_view actual_name = "actual");

/// Serves responses from a cassette; never touches the network.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<Cassette> cassette) : cassette_(std::move(cassette)) {}
    ChatResponse complete(const ChatRequest& req) override;
    const Cassette& cassette() const { return *cassette_; }

private:
    std::shared_ptr<Cassette> cassette_;
};

/// Forwards to `inner` and appends every exchange to the cassette.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<Cassette> cassette)
        : inner_(std::move(inner)), cassette_(std::move(cassette)) {}
    ChatResponse complete(const ChatRequest& req) override;
    const Cassette& cassette() const { return *cassette_; }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<Cassette> cassette_;
};

}  // namespace ata
