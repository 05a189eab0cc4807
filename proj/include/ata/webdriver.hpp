#pragma once

// Real-browser driver speaking the W3C WebDriver wire protocol to a remote
// end (chromedriver, geckodriver, Selenium grid).

#include "ata/browser.hpp"
#include "ata/llm.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace ata {

struct WebDriverConfig {
    /// Remote end, e.g. "http://localhost:4444".
    std::string endpoint = "http://localhost:4444";
    /// app id -> start URL. Unknown ids are rejected by reset().
    std::map<std::string, std::string> apps;
    /// POSTed before each reset when set (restores the application state).
    std::optional<std::string> reset_hook_url;
    std::chrono::milliseconds navigation_timeout = std::chrono::seconds(30);
    std::string browser = "chrome";
    bool headless = true;
    std::size_t dom_token_budget = 4000;
};

class WebDriverSession : public DriverSession {
public:
    WebDriverSession(std::shared_ptr<HttpTransport> transport, WebDriverConfig cfg, std::string session_id);
    ~WebDriverSession() override;

    PageObservation observe() override;
    CommandResult execute(const BrowserCommand& cmd) override;
    void close() override;
    bool is_open() const override { return open_; }
    const std::string& session_id() const { return id_; }

private:
    std::string call(const std::string& method, const std::string& path, const std::string& body = "{}");
    std::string script(const std::string& js, const std::string& args_json = "[]");

    std::shared_ptr<HttpTransport> transport_;
    WebDriverConfig cfg_;
    std::string id_;
    bool open_ = true;
};

class WebDriverDriver : public Driver {
public:
    WebDriverDriver(std::shared_ptr<HttpTransport> transport, WebDriverConfig cfg)
        : transport_(std::move(transport)), cfg_(std::move(cfg)) {}
    std::unique_ptr<DriverSession> reset(const std::string& app_id) override;

private:
    std::shared_ptr<HttpTransport> transport_;
    WebDriverConfig cfg_;
};

}  // namespace ata
