#include "legalrank/http_json.hpp"

#include <thread>

#include <httplib.h>

#include "legalrank/errors.hpp"

namespace legalrank {

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host:port
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ParameterError("endpoint URL needs a scheme: '" + url + "'");
    }
    auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") {
        throw ParameterError("unsupported URL scheme '" + scheme + "' (only http is built in)");
    }
    auto path_begin = url.find('/', scheme_end + 3);
    ParsedUrl parsed;
    parsed.base = url.substr(0, path_begin);
    parsed.path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
    if (parsed.base.size() <= scheme_end + 3) {
        throw ParameterError("endpoint URL has no host: '" + url + "'");
    }
    return parsed;
}

}  // namespace

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
    auto url = parse_url(endpoint.url);
    httplib::Client client(url.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const std::string payload = body.dump();
    const std::size_t attempts = std::max<std::size_t>(1, endpoint.max_attempts);
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(url.path, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status >= 400) {
            throw ProtocolError(endpoint.url + " rejected the request with HTTP " +
                                std::to_string(res->status));
        } else {
            auto parsed = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
            if (parsed.is_discarded()) {
                throw ProtocolError(endpoint.url + " returned a body that is not JSON");
            }
            return parsed;
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50) * static_cast<int>(attempt));
        }
    }
    throw ScorerError(endpoint.url + " failed after " + std::to_string(attempts) +
                      " attempts: " + last_error);
}

}  // namespace legalrank
