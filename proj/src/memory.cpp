#include "ata/memory.hpp"

#include <fmt/format.h>

#include <set>

namespace ata {

std::string_view to_string(MemoryKind k) {
    switch (k) {
        case MemoryKind::Observation: return "OBSERVATION";
        case MemoryKind::Action: return "ACTION";
        case MemoryKind::Assertion: return "ASSERTION";
        case MemoryKind::Judgment: return "JUDGMENT";
    }
    return "OBSERVATION";
}

const MemoryEntry& MemoryStore::append(std::size_t step, MemoryKind kind, std::string content,
                                       std::int64_t timestamp_ms) {
    entries_.push_back({step, kind, std::move(content), timestamp_ms});
    return entries_.back();
}

namespace {

constexpr std::size_t kSummaryTokens = 12;

std::string one_line(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : text::trim(s)) {
        if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string verbatim(const MemoryEntry& e) {
    return fmt::format("[step {}] {}: {}", e.step, to_string(e.kind), one_line(e.content));
}

std::string summary(const MemoryEntry& e) {
    auto body = one_line(e.content);
    auto cut = text::truncate_tokens(body, kSummaryTokens);
    if (cut.size() < body.size()) cut = std::string(text::trim_right(cut)) + " ...";
    return fmt::format("[step {}] {}: {}", e.step, to_string(e.kind), cut);
}

std::string tag(const MemoryEntry& e) { return fmt::format("[step {}] {}", e.step, to_string(e.kind)); }

enum class Older { Summary, Tag, Indices };

std::string render(const std::vector<MemoryEntry>& entries, std::size_t keep, Older mode) {
    std::size_t split = entries.size() - keep;
    std::string out;
    if (mode == Older::Indices && split > 0) {
        std::set<std::size_t> steps;
        for (std::size_t i = 0; i < split; ++i) steps.insert(entries[i].step);
        out += "Earlier steps:";
        for (auto s : steps) out += fmt::format(" {}", s);
        out += "\n";
    } else {
        for (std::size_t i = 0; i < split; ++i) out += (mode == Older::Summary ? summary(entries[i]) : tag(entries[i])) + "\n";
    }
    for (std::size_t i = split; i < entries.size(); ++i) out += verbatim(entries[i]) + "\n";
    if (!out.empty()) out.pop_back();
    return out;
}

}  // namespace

// Entries are chronological and the newest are kept first, so the current
// step's retries always win over older steps; the index itself is not needed.
std::string render_memory_context(const MemoryStore& memory, std::size_t /*current_step*/, std::size_t budget) {
    const auto& entries = memory.entries();
    if (entries.empty()) return "No prior steps.";

    for (auto mode : {Older::Summary, Older::Tag, Older::Indices}) {
        for (std::size_t keep = entries.size() + 1; keep-- > 0;) {
            if (mode != Older::Summary && keep == entries.size()) continue;
            auto out = render(entries, keep, mode);
            if (text::count_tokens(out) <= budget) return out;
        }
    }
    return text::truncate_tokens(render(entries, 0, Older::Indices), budget);
}

}  // namespace ata
