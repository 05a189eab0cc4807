#include "ata/providers.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cstdlib>

namespace ata {

using nlohmann::json;

namespace {

std::string default_base(Provider p) {
    switch (p) {
        case Provider::OpenAI: return "https://api.openai.com";
        case Provider::Anthropic: return "https://api.anthropic.com";
        case Provider::Gemini: return "https://generativelanguage.googleapis.com";
    }
    return {};
}

// System text is hoisted for providers that take it out-of-band.
std::string system_text(const ChatRequest& req) {
    std::string out;
    for (const auto& m : req.messages) {
        if (m.role != Role::System) continue;
        for (const auto& p : m.parts)
            if (p.kind == ContentPart::Kind::Text) out += (out.empty() ? "" : "\n") + p.data;
    }
    return out;
}

json openai_body(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        json content = json::array();
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) {
                content.push_back({{"type", "text"}, {"text", p.data}});
            } else {
                content.push_back({{"type", "image_url"},
                                   {"image_url", {{"url", fmt::format("data:{};base64,{}", p.media_type, text::base64_encode(p.data))}}}});
            }
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", content}});
    }
    return {{"model", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
}

json anthropic_body(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        if (m.role == Role::System) continue;
        json content = json::array();
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) {
                content.push_back({{"type", "text"}, {"text", p.data}});
            } else {
                content.push_back(
                    {{"type", "image"},
                     {"source", {{"type", "base64"}, {"media_type", p.media_type}, {"data", text::base64_encode(p.data)}}}});
            }
        }
        messages.push_back({{"role", to_string(m.role)}, {"content", content}});
    }
    json body = {{"model", req.model_id},
                 {"messages", messages},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens}};
    if (auto sys = system_text(req); !sys.empty()) body["system"] = sys;
    return body;
}

json gemini_body(const ChatRequest& req) {
    json contents = json::array();
    for (const auto& m : req.messages) {
        if (m.role == Role::System) continue;
        json parts = json::array();
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) {
                parts.push_back({{"text", p.data}});
            } else {
                parts.push_back({{"inline_data", {{"mime_type", p.media_type}, {"data", text::base64_encode(p.data)}}}});
            }
        }
        contents.push_back({{"role", m.role == Role::Assistant ? "model" : "user"}, {"parts", parts}});
    }
    json body = {{"contents", contents},
                 {"generationConfig", {{"temperature", req.temperature}, {"maxOutputTokens", req.max_tokens}}}};
    if (auto sys = system_text(req); !sys.empty()) body["systemInstruction"] = {{"parts", {{{"text", sys}}}}};
    return body;
}

}  // namespace

std::string_view to_string(Provider p) {
    switch (p) {
        case Provider::OpenAI: return "openai";
        case Provider::Anthropic: return "anthropic";
        case Provider::Gemini: return "gemini";
    }
    return "openai";
}

Provider provider_from_string(std::string_view s) {
    if (text::iequals(s, "openai")) return Provider::OpenAI;
    if (text::iequals(s, "anthropic")) return Provider::Anthropic;
    if (text::iequals(s, "gemini")) return Provider::Gemini;
    throw Error(fmt::format("unknown provider '{}'", s));
}

std::string_view credential_env_var(Provider p) {
    switch (p) {
        case Provider::OpenAI: return "OPENAI_API_KEY";
        case Provider::Anthropic: return "ANTHROPIC_API_KEY";
        case Provider::Gemini: return "GEMINI_API_KEY";
    }
    return {};
}

ProviderConfig provider_config_from_env(Provider p) {
    ProviderConfig cfg;
    cfg.provider = p;
    auto var = std::string(credential_env_var(p));
    const char* key = std::getenv(var.c_str());
    if (!key || !*key) throw LlmError(fmt::format("missing credentials: set {}", var));
    cfg.api_key = key;
    return cfg;
}

ProviderBackend::ProviderBackend(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
    if (cfg_.base_url.empty()) cfg_.base_url = default_base(cfg_.provider);
}

HttpRequest ProviderBackend::build_http_request(const ChatRequest& req) const {
    HttpRequest http;
    http.timeout = cfg_.timeout;
    http.headers["content-type"] = "application/json";
    json body;
    switch (cfg_.provider) {
        case Provider::OpenAI:
            http.url = cfg_.base_url + "/v1/chat/completions";
            http.headers["authorization"] = "Bearer " + cfg_.api_key;
            body = openai_body(req);
            break;
        case Provider::Anthropic:
            http.url = cfg_.base_url + "/v1/messages";
            http.headers["x-api-key"] = cfg_.api_key;
            http.headers["anthropic-version"] = "2023-06-01";
            body = anthropic_body(req);
            break;
        case Provider::Gemini:
            http.url = fmt::format("{}/v1beta/models/{}:generateContent", cfg_.base_url, req.model_id);
            http.headers["x-goog-api-key"] = cfg_.api_key;
            body = gemini_body(req);
            break;
    }
    http.body = body.dump();
    return http;
}

ChatResponse ProviderBackend::parse_http_response(const HttpResponse& resp) const {
    if (resp.status < 200 || resp.status >= 300) throw ProviderError(resp.status, resp.body);
    ChatResponse out;
    try {
        auto doc = json::parse(resp.body);
        switch (cfg_.provider) {
            case Provider::OpenAI: {
                const auto& choice = doc.at("choices").at(0);
                const auto& content = choice.at("message").at("content");
                out.text = content.is_string() ? content.get<std::string>() : std::string();
                out.truncated = choice.value("finish_reason", "") == "length";
                if (doc.contains("usage")) {
                    out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
                    out.usage.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
                }
                break;
            }
            case Provider::Anthropic: {
                for (const auto& block : doc.at("content"))
                    if (block.value("type", "") == "text") out.text += block.value("text", "");
                out.truncated = doc.value("stop_reason", "") == "max_tokens";
                if (doc.contains("usage")) {
                    out.usage.prompt_tokens = doc["usage"].value("input_tokens", std::int64_t{0});
                    out.usage.completion_tokens = doc["usage"].value("output_tokens", std::int64_t{0});
                }
                break;
            }
            case Provider::Gemini: {
                const auto& cand = doc.at("candidates").at(0);
                if (cand.contains("content"))
                    for (const auto& part : cand["content"].value("parts", json::array()))
                        out.text += part.value("text", "");
                out.truncated = cand.value("finishReason", "") == "MAX_TOKENS";
                if (doc.contains("usageMetadata")) {
                    out.usage.prompt_tokens = doc["usageMetadata"].value("promptTokenCount", std::int64_t{0});
                    out.usage.completion_tokens = doc["usageMetadata"].value("candidatesTokenCount", std::int64_t{0});
                }
                break;
            }
        }
    } catch (const json::exception& e) {
        throw LlmError(fmt::format("unparsable {} response: {}", to_string(cfg_.provider), e.what()));
    }
    if (out.text.empty() && !out.truncated) throw LlmError("provider returned an empty completion");
    return out;
}

ChatResponse ProviderBackend::complete(const ChatRequest& req) {
    auto started = std::chrono::steady_clock::now();
    auto resp = parse_http_response(transport_->send(build_http_request(req)));
    resp.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return resp;
}

std::shared_ptr<Backend> make_live_backend(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport) {
    return std::make_shared<RetryingBackend>(std::make_shared<ProviderBackend>(std::move(cfg), std::move(transport)));
}

}  // namespace ata
