#include "support.hpp"

#include "ata/cassette.hpp"
#include "ata/providers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>

using namespace ata;
using namespace ata::testing;

namespace {

ChatRequest req(std::string text, double temperature = 0.0, std::string model = "gpt-4o") {
    auto r = ChatRequest::user({ContentPart::text(std::move(text))}, std::move(model));
    r.temperature = temperature;
    return r;
}

/// Answers from a queue and remembers every request.
class FakeTransport : public HttpTransport {
public:
    std::vector<HttpResponse> replies;
    std::vector<HttpRequest> seen;
    HttpResponse send(const HttpRequest& r) override {
        seen.push_back(r);
        if (replies.empty()) throw LlmError("no reply queued");
        auto out = replies.front();
        replies.erase(replies.begin());
        return out;
    }
};

class FlakyBackend : public Backend {
public:
    std::vector<int> statuses;  // 0 = success
    int calls = 0;
    ChatResponse complete(const ChatRequest&) override {
        int s = statuses.at(static_cast<std::size_t>(calls++));
        if (s == -1) throw TimeoutError("slow");
        if (s != 0) throw ProviderError(s, "busy");
        return {"ok", {}, 0, false};
    }
};

ChatRequest random_request(std::mt19937& rng) {
    std::uniform_int_distribution<int> coin(0, 1), nparts(1, 3);
    ChatRequest r;
    r.model_id = coin(rng) ? "gpt-4o" : "claude";
    r.temperature = coin(rng) ? 0.0 : 0.5;
    r.max_tokens = coin(rng) ? 512 : 1024;  // excluded from the fingerprint
    ChatMessage m;
    for (int i = nparts(rng); i > 0; --i) {
        if (coin(rng) && coin(rng)) {
            m.parts.push_back(ContentPart::image(coin(rng) ? "\x89PNG-a" : "\x89PNG-b"));
        } else {
            std::string t = coin(rng) ? "Click  the Login" : "Click the Login";
            if (coin(rng)) t += "   ";
            if (coin(rng)) t += "\nbutton";
            m.parts.push_back(ContentPart::text(t));
        }
    }
    r.messages.push_back(std::move(m));
    return r;
}

}  // namespace

TEST_SUITE("llm_gateway") {
    TEST_CASE("fingerprint canonicalization") {
        CHECK(fingerprint(req("Click the button")) == fingerprint(req("Click the button   ")));
        CHECK(fingerprint(req("a\r\nb")) == fingerprint(req("a\nb")));
        CHECK(fingerprint(req("x", 0.0)) != fingerprint(req("x", 0.5)));
        CHECK(fingerprint(req("x", 0.0, "a")) != fingerprint(req("x", 0.0, "b")));
        auto a = req("x");
        auto b = a;
        b.max_tokens = 7;
        CHECK(fingerprint(a) == fingerprint(b));
        CHECK(fingerprint(a).size() == 64);

        auto img1 = ChatRequest::user({ContentPart::image("PNGDATA1")});
        auto img2 = ChatRequest::user({ContentPart::image("PNGDATA2")});
        CHECK(fingerprint(img1) != fingerprint(img2));
        CHECK(canonical_request(img1).find("PNGDATA1") == std::string::npos);
    }

    TEST_CASE("property: fingerprint equality iff canonical equality") {
        std::mt19937 rng(99);
        int equal = 0;
        for (int i = 0; i < 1000; ++i) {
            auto a = random_request(rng);
            auto b = random_request(rng);
            bool same = canonical_request(a) == canonical_request(b);
            equal += same;
            REQUIRE((fingerprint(a) == fingerprint(b)) == same);
            CHECK(fingerprint(a) == fingerprint(a));
        }
        CHECK(equal > 0);
    }

    TEST_CASE("request invariants") {
        CHECK(check_request(ChatRequest{}));
        auto r = req("x");
        r.temperature = -1;
        CHECK(check_request(r));
        r.temperature = 0;
        r.max_tokens = 0;
        CHECK(check_request(r));
        ScriptedBackend b({"x"});
        CHECK_THROWS_AS(complete(b, ChatRequest{}), InvalidRequestError);
        CHECK(b.calls() == 0);
        CHECK(ChatRequest{}.temperature == 0.0);
    }

    TEST_CASE("replay hit, miss and exhaustion") {
        auto cassette = std::make_shared<Cassette>();
        auto inner = std::make_shared<ScriptedBackend>(std::vector<std::string>{"first", "second"});
        RecordingBackend rec(inner, cassette);
        auto r1 = rec.complete(req("one\ntwo\nthree"));
        auto r2 = rec.complete(req("four"));
        REQUIRE(cassette->entries().size() == 2);

        auto reloaded = std::make_shared<Cassette>(Cassette::parse(cassette->serialize()));
        ReplayBackend replay(reloaded);
        CHECK(replay.complete(req("one\ntwo\nthree")) == r1);
        CHECK(replay.complete(req("four")) == r2);
        CHECK_THROWS_AS(replay.complete(req("four")), CassetteExhausted);

        reloaded->rewind();
        try {
            replay.complete(req("one\nTWO\nthree"));
            FAIL("mismatch not detected");
        } catch (const FingerprintMismatch& e) {
            CHECK(e.entry() == 0);
            CHECK(e.first_differing_line() == 6);
            CHECK(e.diff().find("-| two") != std::string::npos);
            CHECK(e.diff().find("+| TWO") != std::string::npos);
            CHECK(std::string(e.what()).find("first difference at line 6") != std::string::npos);
        }
        CHECK(reloaded->cursor() == 0);  // a miss does not consume the entry
    }

    TEST_CASE("cassette files roundtrip") {
        Cassette c;
        c.append({fingerprint(req("a")), canonical_request(req("a")), {"reply", {12, 3}, 40, false}});
        c.append({fingerprint(req("b")), canonical_request(req("b")), {"", {1, 1024}, 9, true}});
        auto dir = scratch("cassette-roundtrip");
        c.save(dir / "c.json");
        auto back = Cassette::load(dir / "c.json");
        REQUIRE(back.entries().size() == 2);
        CHECK(back.entries()[0].response == c.entries()[0].response);
        CHECK(back.entries()[1].response.truncated);
        CHECK(back.serialize() == c.serialize());
        CHECK_THROWS_AS(Cassette::parse("{not json"), Error);
        CHECK_THROWS_AS(Cassette::load(dir / "missing.json"), Error);
    }

    TEST_CASE("unified diff") {
        auto d = unified_diff("a\nb\nc\n", "a\nx\nc\n");
        CHECK(d.find("--- recorded") != std::string::npos);
        CHECK(d.find("+++ actual") != std::string::npos);
        CHECK(d.find("-b") != std::string::npos);
        CHECK(d.find("+x") != std::string::npos);
        CHECK(unified_diff("same\n", "same\n").empty());
    }

    TEST_CASE("response scripts") {
        auto replies = parse_response_script("#: comment\nfirst\nline\n---\n\n#: c2\nsecond\n---\nthird\n");
        REQUIRE(replies.size() == 3);
        CHECK(replies[0] == "first\nline");
        CHECK(replies[1] == "second");
        CHECK(replies[2] == "third");
        ScriptedBackend b(replies);
        CHECK(b.complete(req("x")).text == "first\nline");
        CHECK(b.remaining() == 2);
        CHECK(parse_response_script("").empty());
    }

    TEST_CASE("retries: transient errors back off, permanent ones surface") {
        auto flaky = std::make_shared<FlakyBackend>();
        flaky->statuses = {429, -1, 0};
        std::vector<long> delays;
        RetryingBackend r(flaky, 3, std::chrono::seconds(1), [&](auto d) { delays.push_back(d.count()); });
        CHECK(r.complete(req("x")).text == "ok");
        CHECK(delays == std::vector<long>{1000, 2000});

        flaky->calls = 0;
        flaky->statuses = {400};
        CHECK_THROWS_AS(r.complete(req("x")), ProviderError);
        CHECK(flaky->calls == 1);

        flaky->calls = 0;
        flaky->statuses = {503, 503, 503, 0};
        try {
            r.complete(req("x"));
            FAIL("should give up");
        } catch (const ProviderError& e) {
            CHECK(e.status() == 503);
            CHECK(e.transient());
        }
        CHECK(flaky->calls == 3);
    }

    TEST_CASE("provider adapters build and parse HTTP exchanges") {
        auto transport = std::make_shared<FakeTransport>();
        auto r = ChatRequest::user({ContentPart::text("hello"), ContentPart::image("\x89PNG\r\n\x1a\nxx")}, "m-1");

        SUBCASE("openai") {
            ProviderBackend b({Provider::OpenAI, "sk-test", "http://fake", std::chrono::seconds(5)}, transport);
            auto http = b.build_http_request(r);
            CHECK(http.url == "http://fake/v1/chat/completions");
            CHECK(http.headers.at("authorization") == "Bearer sk-test");
            auto body = nlohmann::json::parse(http.body);
            CHECK(body["model"] == "m-1");
            CHECK(body["temperature"] == 0.0);
            CHECK(http.body.find("data:image/png;base64,") != std::string::npos);
            transport->replies.push_back(
                {200, R"({"choices":[{"message":{"content":"hi"},"finish_reason":"stop"}],"usage":{"prompt_tokens":5,"completion_tokens":1}})"});
            auto resp = b.complete(r);
            CHECK(resp.text == "hi");
            CHECK(resp.usage.prompt_tokens == 5);
            transport->replies.push_back({500, "oops"});
            CHECK_THROWS_AS(b.complete(r), ProviderError);
            transport->replies.push_back({200, R"({"choices":[{"message":{"content":""},"finish_reason":"stop"}]})"});
            CHECK_THROWS_AS(b.complete(r), LlmError);
            transport->replies.push_back({200, R"({"choices":[{"message":{"content":""},"finish_reason":"length"}]})"});
            CHECK(b.complete(r).truncated);
        }
        SUBCASE("anthropic") {
            ProviderBackend b({Provider::Anthropic, "ak", "http://fake", std::chrono::seconds(5)}, transport);
            auto http = b.build_http_request(r);
            CHECK(http.url == "http://fake/v1/messages");
            CHECK(http.headers.at("x-api-key") == "ak");
            transport->replies.push_back({200, R"({"content":[{"type":"text","text":"yo"}],"stop_reason":"end_turn"})"});
            CHECK(b.complete(r).text == "yo");
        }
        SUBCASE("gemini") {
            ProviderBackend b({Provider::Gemini, "gk", "http://fake", std::chrono::seconds(5)}, transport);
            auto http = b.build_http_request(r);
            CHECK(http.url == "http://fake/v1beta/models/m-1:generateContent");
            CHECK(http.headers.at("x-goog-api-key") == "gk");
            transport->replies.push_back({200, R"({"candidates":[{"content":{"parts":[{"text":"g"}]}}]})"});
            CHECK(b.complete(r).text == "g");
        }
    }

    TEST_CASE("credentials come from the environment only") {
        CHECK(credential_env_var(Provider::OpenAI) == "OPENAI_API_KEY");
        ::setenv("ANTHROPIC_API_KEY", "from-env", 1);
        CHECK(provider_config_from_env(Provider::Anthropic).api_key == "from-env");
        ::unsetenv("GEMINI_API_KEY");
        CHECK_THROWS_AS(provider_config_from_env(Provider::Gemini), Error);
        CHECK(provider_from_string("OpenAI") == Provider::OpenAI);
        CHECK_THROWS_AS(provider_from_string("acme"), Error);
    }

    TEST_CASE("network-denying transport") {
        DenyNetworkTransport t;
        CHECK_THROWS_AS(t.send({}), LlmError);
        CHECK(t.attempts() == 1);
    }

    TEST_CASE("base64 and hashing helpers") {
        std::mt19937 rng(3);
        for (int i = 0; i < 100; ++i) {
            std::string bytes(static_cast<std::size_t>(i), '\0');
            for (auto& c : bytes) c = static_cast<char>(rng());
            CHECK(text::base64_decode(text::base64_encode(bytes)) == bytes);
        }
        CHECK(text::base64_encode("hi") == "aGk=");
        CHECK_THROWS_AS(text::base64_decode("a$=="), Error);
        CHECK(text::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
