#pragma once

// Provider-agnostic chat completion: requests, responses, canonical
// fingerprints and the Backend interface every agent talks to.

#include "ata/text.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ata {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);
Role role_from_name(std::string_view s);

struct ContentPart {
    enum class Kind { Text, Image };
    Kind kind = Kind::Text;
    /// UTF-8 text, or encoded image bytes.
    std::string data;
    /// MIME type for images ("image/png").
    std::string media_type;

    static ContentPart text(std::string s) { return {Kind::Text, std::move(s), {}}; }
    static ContentPart image(std::string bytes, std::string media_type = "image/png") {
        return {Kind::Image, std::move(bytes), std::move(media_type)};
    }
    bool operator==(const ContentPart&) const = default;
};

struct ChatMessage {
    Role role = Role::User;
    std::vector<ContentPart> parts;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 1024;

    /// Convenience: one user message built from `parts`.
    static ChatRequest user(std::vector<ContentPart> parts, std::string model_id = {});
    bool operator==(const ChatRequest&) const = default;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool operator==(const TokenUsage&) const = default;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
    std::int64_t latency_ms = 0;
    /// Provider stopped on the token limit.
    bool truncated = false;
    bool operator==(const ChatResponse&) const = default;
};

class LlmError : public Error {
public:
    using Error::Error;
};

/// Non-2xx reply from a provider.
class ProviderError : public LlmError {
public:
    ProviderError(int status, std::string body);
    int status() const { return status_; }
    const std::string& body() const { return body_; }
    bool transient() const { return status_ == 408 || status_ == 429 || status_ >= 500; }

private:
    int status_;
    std::string body_;
};

class TimeoutError : public LlmError {
public:
    using LlmError::LlmError;
};

class InvalidRequestError : public LlmError {
public:
    using LlmError::LlmError;
};

/// Canonical line-oriented text of a request: whitespace-normalised text
/// parts, content hashes for images, model id and temperature. max_tokens
/// and wall-clock data are excluded.
std::string canonical_request(const ChatRequest& req);
/// sha256 of canonical_request().
std::string fingerprint(const ChatRequest& req);

/// Empty when the request satisfies its invariants.
std::optional<std::string> check_request(const ChatRequest& req);

class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

/// Validates `req`, then forwards to the backend.
ChatResponse complete(Backend& backend, const ChatRequest& req);

/// Retries transient provider failures (HTTP 408/429/5xx, timeouts) with
/// exponential backoff.
class RetryingBackend : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RetryingBackend(std::shared_ptr<Backend> inner, int attempts = 3,
                    std::chrono::milliseconds first_delay = std::chrono::seconds(1), Sleeper sleep = {});
    ChatResponse complete(const ChatRequest& req) override;

private:
    std::shared_ptr<Backend> inner_;
    int attempts_;
    std::chrono::milliseconds first_delay_;
    Sleeper sleep_;
};

/// Returns canned replies in order; used to author cassettes and in tests.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    ChatResponse complete(const ChatRequest& req) override;

    std::size_t calls() const { return next_; }
    std::size_t remaining() const { return replies_.size() - next_; }
    const std::vector<ChatRequest>& requests() const { return seen_; }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
    std::vector<ChatRequest> seen_;
};

/// Reads a response script: replies separated by lines consisting of `---`.
/// Lines starting with `#` before a reply body are comments.
std::vector<std::string> parse_response_script(std::string_view raw);

// ---------------------------------------------------------------------------
// HTTP transport seam. Live providers and the WebDriver client only see this
// interface; tests substitute fakes or a network-denying transport.

struct HttpRequest {
    std::string method = "POST";
    std::string url;
    std::map<std::string, std::string> headers;
    std::string body;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Throws TimeoutError on timeout, LlmError on connection failure.
    virtual HttpResponse send(const HttpRequest& req) = 0;
};

/// Fails every call; counts attempts.
class DenyNetworkTransport : public HttpTransport {
public:
    HttpResponse send(const HttpRequest& req) override;
    std::size_t attempts() const { return attempts_; }

private:
    std::size_t attempts_ = 0;
};

#ifdef ATA_HAVE_HTTP
/// cpp-httplib backed transport (HTTP and HTTPS).
std::shared_ptr<HttpTransport> make_http_transport();
#endif

}  // namespace ata
