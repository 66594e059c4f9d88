#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "motionpi/backend/service.hpp"

namespace motionpi::backend {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token_secret;
    double token_expiry_s = 30.0 * 86400.0;
    std::string store_path;  // empty keeps records in memory only
    std::size_t threads = 8;

    /// Throws std::invalid_argument naming the offending field.
    static ServerConfig from_json(const Json& doc);
    static ServerConfig load(const std::filesystem::path& path);
};

/// Serves a BackendService over HTTP/1.1.
class HttpServer {
public:
    HttpServer(BackendService& service, std::size_t threads = 8);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Loads the config, opens the store and blocks serving requests.
int run_server(const ServerConfig& cfg, const std::function<void(int port)>& on_ready = {});

/// Transport speaking to a real server, for tools and end-to-end tests.
class HttpClientTransport final : public Transport {
public:
    HttpClientTransport(std::string host, int port, double timeout_s = 10.0);
    ~HttpClientTransport() override;
    TransportResult send(const HttpRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace motionpi::backend
