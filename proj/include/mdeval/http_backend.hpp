#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace mdeval {

// Completion endpoint: POST {"system", "user", "temperature"} as JSON, reply
// {"text": "..."}. `api_key` goes out as a bearer token when set.
struct HttpEndpoint {
    std::string url;  // http://host:port/path
    std::string api_key;
    std::chrono::milliseconds timeout{30000};

    // DIGEST_LLM_URL / DIGEST_LLM_KEY; nullopt when the URL is unset.
    static std::optional<HttpEndpoint> from_environment();
};

// One request. Throws Error(BackendTimeout) on connect/read timeouts and
// Error(BackendFailure) on transport errors, non-2xx status or a malformed body.
std::string post_completion(const HttpEndpoint& endpoint, const std::string& system_text,
                            const std::string& user_text, double temperature = 0.0);

}  // namespace mdeval
