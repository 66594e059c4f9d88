#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

// Minimal HTTP message model shared by the in-process link, the server
// adapter and the agent's transports.
namespace motionpi {

struct HttpRequest {
    std::string method;
    std::string target;  // path plus optional ?query
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;

    [[nodiscard]] std::optional<std::string> header(std::string_view name) const;
};

struct HttpResponse {
    int status = 200;
    std::string body;
};

enum class TransportFailure {
    None,
    ConnectionRefused,  // nothing reached the server
    Timeout,            // the server may have processed the request
    ConnectionReset,    // cut while sending the body
};

[[nodiscard]] const char* to_string(TransportFailure f);

struct TransportResult {
    std::optional<HttpResponse> response;
    TransportFailure failure = TransportFailure::None;

    [[nodiscard]] bool ok() const { return response.has_value(); }
    static TransportResult of(HttpResponse r) { return {std::move(r), TransportFailure::None}; }
    static TransportResult fail(TransportFailure f) { return {std::nullopt, f}; }
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportResult send(const HttpRequest& request) = 0;
};

/// Splits "a=1&b=x%20y" into decoded pairs. Returns nullopt on bad escapes.
[[nodiscard]] std::optional<std::map<std::string, std::string>> parse_query(std::string_view query);
[[nodiscard]] std::string url_encode(std::string_view text);

}  // namespace motionpi
