#include "ata/llm.hpp"

#include <fmt/format.h>

#include <thread>

namespace ata {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_name(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw LlmError(fmt::format("unknown message role '{}'", s));
}

ChatRequest ChatRequest::user(std::vector<ContentPart> parts, std::string model_id) {
    ChatRequest r;
    r.messages.push_back({Role::User, std::move(parts)});
    r.model_id = std::move(model_id);
    return r;
}

ProviderError::ProviderError(int status, std::string body)
    : LlmError(fmt::format("provider returned HTTP {}: {}", status, text::truncate_tokens(body, 60))),
      status_(status),
      body_(std::move(body)) {}

namespace {

// CRLF → LF, trailing whitespace stripped per line, leading/trailing blank
// lines dropped.
std::vector<std::string> normalize_text(std::string_view s) {
    std::vector<std::string> lines;
    for (auto& l : text::split_lines(s)) lines.emplace_back(text::trim_right(l));
    std::size_t b = 0, e = lines.size();
    while (b < e && lines[b].empty()) ++b;
    while (e > b && lines[e - 1].empty()) --e;
    return {lines.begin() + static_cast<std::ptrdiff_t>(b), lines.begin() + static_cast<std::ptrdiff_t>(e)};
}

}  // namespace

std::string canonical_request(const ChatRequest& req) {
    std::string out;
    out += fmt::format("model_id: {}\n", text::quote(req.model_id));
    out += fmt::format("temperature: {}\n", text::format_number(req.temperature));
    for (std::size_t m = 0; m < req.messages.size(); ++m) {
        const auto& msg = req.messages[m];
        out += fmt::format("message {} role={}\n", m + 1, to_string(msg.role));
        for (std::size_t p = 0; p < msg.parts.size(); ++p) {
            const auto& part = msg.parts[p];
            if (part.kind == ContentPart::Kind::Text) {
                out += fmt::format("part {} text\n", p + 1);
                for (const auto& line : normalize_text(part.data)) out += "| " + line + "\n";
            } else {
                out += fmt::format("part {} image {} sha256={}\n", p + 1, text::quote(part.media_type),
                                   text::sha256_hex(part.data));
            }
        }
    }
    return out;
}

std::string fingerprint(const ChatRequest& req) { return text::sha256_hex(canonical_request(req)); }

std::optional<std::string> check_request(const ChatRequest& req) {
    if (req.messages.empty()) return "request needs at least one message";
    if (!(req.temperature >= 0.0)) return "temperature must be >= 0";
    if (req.max_tokens <= 0) return "max_tokens must be positive";
    return std::nullopt;
}

ChatResponse complete(Backend& backend, const ChatRequest& req) {
    if (auto err = check_request(req)) throw InvalidRequestError(*err);
    return backend.complete(req);
}

RetryingBackend::RetryingBackend(std::shared_ptr<Backend> inner, int attempts, std::chrono::milliseconds first_delay,
                                 Sleeper sleep)
    : inner_(std::move(inner)), attempts_(std::max(1, attempts)), first_delay_(first_delay), sleep_(std::move(sleep)) {
    if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatResponse RetryingBackend::complete(const ChatRequest& req) {
    auto delay = first_delay_;
    for (int attempt = 1;; ++attempt) {
        try {
            return inner_->complete(req);
        } catch (const ProviderError& e) {
            if (!e.transient() || attempt >= attempts_) throw;
        } catch (const TimeoutError&) {
            if (attempt >= attempts_) throw;
        }
        sleep_(delay);
        delay *= 2;
    }
}

ChatResponse ScriptedBackend::complete(const ChatRequest& req) {
    seen_.push_back(req);
    if (next_ >= replies_.size()) throw LlmError(fmt::format("response script exhausted after {} replies", next_));
    ChatResponse r;
    r.text = replies_[next_++];
    r.usage.prompt_tokens = static_cast<std::int64_t>(text::count_tokens(canonical_request(req)));
    r.usage.completion_tokens = static_cast<std::int64_t>(text::count_tokens(r.text));
    return r;
}

std::vector<std::string> parse_response_script(std::string_view raw) {
    std::vector<std::string> out;
    std::vector<std::string> cur;
    bool any = false;
    auto flush = [&] {
        std::size_t b = 0, e = cur.size();
        while (b < e && text::trim(cur[b]).empty()) ++b;
        while (e > b && text::trim(cur[e - 1]).empty()) --e;
        std::vector<std::string> body(cur.begin() + static_cast<std::ptrdiff_t>(b),
                                      cur.begin() + static_cast<std::ptrdiff_t>(e));
        out.push_back(text::join(body, "\n"));
        cur.clear();
    };
    for (const auto& line : text::split_lines(raw)) {
        if (line.starts_with("#:")) continue;
        if (text::trim_right(line) == "---") {
            flush();
            any = false;
            continue;
        }
        any = any || !text::trim(line).empty();
        cur.push_back(line);
    }
    if (any) flush();
    return out;
}

HttpResponse DenyNetworkTransport::send(const HttpRequest& req) {
    ++attempts_;
    throw LlmError(fmt::format("network access denied: {} {}", req.method, req.url));
}

}  // namespace ata
