#pragma once

// Chat-completion adapters for commercial providers. Each adapter only
// builds/parses JSON; bytes move through an HttpTransport.

#include "ata/llm.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace ata {

enum class Provider { OpenAI, Anthropic, Gemini };

std::string_view to_string(Provider p);
Provider provider_from_string(std::string_view s);
/// Environment variable holding the provider's API key.
std::string_view credential_env_var(Provider p);

struct ProviderConfig {
    Provider provider = Provider::OpenAI;
    std::string api_key;
    /// Overrides the public endpoint (tests, proxies).
    std::string base_url;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);
};

/// Reads the API key from the provider's environment variable.
ProviderConfig provider_config_from_env(Provider p);

class ProviderBackend : public Backend {
public:
    ProviderBackend(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport);
    ChatResponse complete(const ChatRequest& req) override;

    /// Exposed for tests.
    HttpRequest build_http_request(const ChatRequest& req) const;
    ChatResponse parse_http_response(const HttpResponse& resp) const;

private:
    ProviderConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
};

/// Provider backend wrapped in the default retry policy (3 attempts,
/// exponential backoff from 1 s).
std::shared_ptr<Backend> make_live_backend(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport);

}  // namespace ata
