#include "mdeval/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "mdeval/error.hpp"
#include "mdeval/io.hpp"

namespace mdeval {

std::optional<HttpEndpoint> HttpEndpoint::from_environment() {
    const char* url = std::getenv("DIGEST_LLM_URL");
    if (!url || !*url) return std::nullopt;
    HttpEndpoint ep;
    ep.url = url;
    if (const char* key = std::getenv("DIGEST_LLM_KEY")) ep.api_key = key;
    return ep;
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::InvalidConfig, "endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string post_completion(const HttpEndpoint& endpoint, const std::string& system_text,
                            const std::string& user_text, double temperature) {
    const auto [origin, path] = split_url(endpoint.url);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    const json body = {{"system", system_text}, {"user", user_text}, {"temperature", temperature}};

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
            throw Error(Errc::BackendTimeout, endpoint.url);
        throw Error(Errc::BackendFailure, endpoint.url + ": " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
        throw Error(Errc::BackendFailure, endpoint.url + ": HTTP " + std::to_string(res->status));
    try {
        const json reply = json::parse(res->body);
        if (reply.contains("text")) return reply.at("text").get<std::string>();
        if (reply.contains("completion")) return reply.at("completion").get<std::string>();
    } catch (const json::exception&) {
    }
    throw Error(Errc::BackendFailure, endpoint.url + ": reply lacks a text field");
}

}  // namespace mdeval
