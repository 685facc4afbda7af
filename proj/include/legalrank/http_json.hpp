#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include <json.hpp>

namespace legalrank {

/// A JSON-over-HTTP POST endpoint.
struct HttpEndpoint {
    std::string url;  // http://host[:port]/path
    std::chrono::milliseconds timeout{30000};
    std::size_t max_attempts = 3;  // bounded retries on transport errors and 5xx
};

/// POSTs `body` and returns the parsed response. Throws ScorerError once the
/// attempts are exhausted, ProtocolError on a non-JSON reply or a 4xx status.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

}  // namespace legalrank
