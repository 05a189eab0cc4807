#pragma once

// Long-term memory shared by the orchestrator, actor and assertor of one
// run.

#include "ata/text.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

enum class MemoryKind { Observation, Action, Assertion, Judgment };

std::string_view to_string(MemoryKind k);

struct MemoryEntry {
    std::size_t step = 0;
    MemoryKind kind = MemoryKind::Observation;
    std::string content;
    std::int64_t timestamp_ms = 0;
};

/// Append-only; entries are never rewritten.
class MemoryStore {
public:
    const MemoryEntry& append(std::size_t step, MemoryKind kind, std::string content, std::int64_t timestamp_ms);
    const std::vector<MemoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<MemoryEntry> entries_;
};

inline constexpr std::size_t kDefaultMemoryBudget = 3000;

/// Chronological digest for prompts, at most `budget` tokens
/// (text::count_tokens). Newest entries stay verbatim; older ones degrade to
/// one-line summaries, then bare tags, then a list of step indices, so every
/// step index survives as long as the budget allows.
std::string render_memory_context(const MemoryStore& memory, std::size_t current_step,
                                  std::size_t budget = kDefaultMemoryBudget);

}  // namespace ata
