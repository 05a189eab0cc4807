#include "ata/cassette.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ata {

using nlohmann::json;

std::string_view to_string(CassetteMode m) {
    switch (m) {
        case CassetteMode::Live: return "live";
        case CassetteMode::Record: return "record";
        case CassetteMode::Replay: return "replay";
    }
    return "live";
}

CassetteMode cassette_mode_from_string(std::string_view s) {
    if (text::iequals(s, "live")) return CassetteMode::Live;
    if (text::iequals(s, "record")) return CassetteMode::Record;
    if (text::iequals(s, "replay")) return CassetteMode::Replay;
    throw Error(fmt::format("unknown cassette mode '{}'", s));
}

Cassette Cassette::parse(std::string_view raw) {
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::exception& e) {
        throw LlmError(fmt::format("malformed cassette: {}", e.what()));
    }
    if (doc.value("format", "") != "ata-cassette/1") throw LlmError("malformed cassette: unknown format tag");
    std::vector<CassetteEntry> entries;
    try {
        for (const auto& e : doc.at("entries")) {
            CassetteEntry ce;
            ce.fingerprint = e.at("fingerprint").get<std::string>();
            ce.canonical_request = e.at("request").get<std::string>();
            ce.response.text = e.at("response").get<std::string>();
            ce.response.usage.prompt_tokens = e.at("usage").at("prompt_tokens").get<std::int64_t>();
            ce.response.usage.completion_tokens = e.at("usage").at("completion_tokens").get<std::int64_t>();
            ce.response.latency_ms = e.value("latency_ms", std::int64_t{0});
            ce.response.truncated = e.value("truncated", false);
            entries.push_back(std::move(ce));
        }
    } catch (const json::exception& e) {
        throw LlmError(fmt::format("malformed cassette entry: {}", e.what()));
    }
    return Cassette(std::move(entries));
}

Cassette Cassette::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LlmError(fmt::format("cannot open cassette '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Cassette::serialize() const {
    json entries = json::array();
    for (const auto& e : entries_) {
        entries.push_back({
            {"fingerprint", e.fingerprint},
            {"request", e.canonical_request},
            {"response", e.response.text},
            {"usage",
             {{"prompt_tokens", e.response.usage.prompt_tokens},
              {"completion_tokens", e.response.usage.completion_tokens}}},
            {"latency_ms", e.response.latency_ms},
            {"truncated", e.response.truncated},
        });
    }
    json doc = {{"format", "ata-cassette/1"}, {"entries", entries}};
    return doc.dump(1) + "\n";
}

void Cassette::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LlmError(fmt::format("cannot write cassette '{}'", path.string()));
    out << serialize();
}

FingerprintMismatch::FingerprintMismatch(std::size_t entry, std::size_t first_line, std::string expected_line,
                                         std::string actual_line, std::string diff)
    : LlmError(fmt::format("fingerprint mismatch at cassette entry {}: first difference at line {}\n  recorded: {}\n  "
                           "actual:   {}\n{}",
                           entry + 1, first_line, expected_line, actual_line, diff)),
      entry_(entry),
      first_line_(first_line),
      diff_(std::move(diff)) {}

std::string unified_diff(std::string_view expected, std::string_view actual, std::string_view expected_name,
                         std::string_view actual_name) {
    auto a = text::split_lines(expected);
    auto b = text::split_lines(actual);
    const std::size_t n = a.size(), m = b.size();
    // LCS table, suffix form.
    std::vector<std::vector<std::uint32_t>> lcs(n + 1, std::vector<std::uint32_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);

    struct Op {
        char tag;
        std::size_t ai, bi;
    };
    std::vector<Op> ops;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            ops.push_back({' ', i++, j++});
        } else if (j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j])) {
            ops.push_back({'+', i, j++});
        } else {
            ops.push_back({'-', i++, j});
        }
    }

    if (std::ranges::all_of(ops, [](const Op& op) { return op.tag == ' '; })) return {};
    std::string out = fmt::format("--- {}\n+++ {}\n", expected_name, actual_name);
    constexpr std::size_t ctx = 3;
    std::size_t k = 0;
    while (k < ops.size()) {
        while (k < ops.size() && ops[k].tag == ' ') ++k;
        if (k == ops.size()) break;
        std::size_t start = k >= ctx ? k - ctx : 0;
        std::size_t end = k;
        // Extend the hunk while changes are within 2*ctx of each other.
        while (end < ops.size()) {
            if (ops[end].tag != ' ') {
                ++end;
                continue;
            }
            std::size_t run = end;
            while (run < ops.size() && ops[run].tag == ' ') ++run;
            if (run == ops.size() || run - end > 2 * ctx) {
                end = std::min(ops.size(), end + ctx);
                break;
            }
            end = run;
        }
        std::size_t a_start = ops[start].ai, b_start = ops[start].bi, a_len = 0, b_len = 0;
        std::string body;
        for (std::size_t x = start; x < end; ++x) {
            const auto& op = ops[x];
            if (op.tag == ' ') {
                body += " " + a[op.ai] + "\n";
                ++a_len;
                ++b_len;
            } else if (op.tag == '-') {
                body += "-" + a[op.ai] + "\n";
                ++a_len;
            } else {
                body += "+" + b[op.bi] + "\n";
                ++b_len;
            }
        }
        out += fmt::format("@@ -{},{} +{},{} @@\n", a_len ? a_start + 1 : a_start, a_len, b_len ? b_start + 1 : b_start,
                           b_len);
        out += body;
        k = end;
    }
    return out;
}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
    if (cassette_->exhausted())
        throw CassetteExhausted(fmt::format("cassette exhausted after {} entries", cassette_->entries().size()));
    const auto& entry = cassette_->next();
    auto canonical = canonical_request(req);
    auto fp = text::sha256_hex(canonical);
    if (fp != entry.fingerprint) {
        auto want = text::split_lines(entry.canonical_request);
        auto got = text::split_lines(canonical);
        std::size_t line = 0;
        while (line < want.size() && line < got.size() && want[line] == got[line]) ++line;
        throw FingerprintMismatch(cassette_->cursor(), line + 1, line < want.size() ? want[line] : "<end of request>",
                                  line < got.size() ? got[line] : "<end of request>",
                                  unified_diff(entry.canonical_request, canonical));
    }
    cassette_->advance();
    return entry.response;
}

ChatResponse RecordingBackend::complete(const ChatRequest& req) {
    auto resp = inner_->complete(req);
    auto canonical = canonical_request(req);
    cassette_->append({text::sha256_hex(canonical), canonical, resp});
    return resp;
}

}  // namespace ata
