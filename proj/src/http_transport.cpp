#include "ata/llm.hpp"

#include <fmt/format.h>
#include <httplib.h>

namespace ata {

namespace {

class HttplibTransport : public HttpTransport {
public:
    HttpResponse send(const HttpRequest& req) override {
        auto scheme_end = req.url.find("://");
        if (scheme_end == std::string::npos) throw LlmError(fmt::format("bad url '{}'", req.url));
        auto path_start = req.url.find('/', scheme_end + 3);
        std::string origin = req.url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : req.url.substr(path_start);

        httplib::Client cli(origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout).count();
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout).count() % 1000000;
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto& [k, v] : req.headers) {
            if (text::iequals(k, "content-type")) content_type = v;
            else headers.emplace(k, v);
        }

        httplib::Result res;
        if (req.method == "GET") res = cli.Get(path, headers);
        else if (req.method == "DELETE") res = cli.Delete(path, headers, req.body, content_type);
        else res = cli.Post(path, headers, req.body, content_type);

        if (!res) {
            if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
                res.error() == httplib::Error::ConnectionTimeout)
                throw TimeoutError(fmt::format("{} {} timed out", req.method, req.url));
            throw LlmError(fmt::format("{} {} failed: {}", req.method, req.url, httplib::to_string(res.error())));
        }
        return {res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace ata
