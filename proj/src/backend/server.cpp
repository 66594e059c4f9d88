#include "motionpi/backend/server.hpp"

#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "motionpi/common/clock.hpp"
#include "motionpi/common/random.hpp"

namespace motionpi::backend {

ServerConfig ServerConfig::from_json(const Json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config: must be an object");
    ServerConfig c;
    for (const auto& [key, v] : doc.items()) {
        const std::string where = "config." + key;
        if (key == "host") {
            if (!v.is_string()) throw std::invalid_argument(where + ": must be a string");
            c.host = v;
        } else if (key == "port") {
            if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 65535)
                throw std::invalid_argument(where + ": must be an integer in [0, 65535]");
            c.port = v;
        } else if (key == "token_secret") {
            if (!v.is_string() || v.get<std::string>().size() < 16)
                throw std::invalid_argument(where + ": must be a string of at least 16 bytes");
            c.token_secret = v;
        } else if (key == "token_expiry_s") {
            if (!v.is_number() || v.get<double>() <= 0) throw std::invalid_argument(where + ": must be positive");
            c.token_expiry_s = v;
        } else if (key == "store_path") {
            if (!v.is_string()) throw std::invalid_argument(where + ": must be a string");
            c.store_path = v;
        } else if (key == "threads") {
            if (!v.is_number_integer() || v.get<int>() < 1) throw std::invalid_argument(where + ": must be >= 1");
            c.threads = v.get<std::size_t>();
        } else {
            throw std::invalid_argument(where + ": unknown field");
        }
    }
    if (c.token_secret.empty()) throw std::invalid_argument("config.token_secret: required");
    return c;
}

ServerConfig ServerConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument(path.string() + ": not valid JSON");
    return from_json(doc);
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(BackendService& service, std::size_t threads) : impl_(std::make_unique<Impl>()) {
    impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    const auto route = [&service](const httplib::Request& in, httplib::Response& out) {
        HttpRequest req;
        req.method = in.method;
        req.target = in.target;
        for (const auto& [name, value] : in.headers) {
            std::string lower = name;
            for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            req.headers[lower] = value;
        }
        req.body = in.body;
        const auto resp = service.handle(req);
        out.status = resp.status;
        if (!resp.body.empty()) out.set_content(resp.body, "application/json");
    };
    // The service does its own routing.
    impl_->server.Get(".*", route);
    impl_->server.Post(".*", route);
    impl_->server.Put(".*", route);
    impl_->server.Delete(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int run_server(const ServerConfig& cfg, const std::function<void(int)>& on_ready) {
    std::unique_ptr<MemoryStore> store =
        cfg.store_path.empty() ? std::make_unique<MemoryStore>() : std::make_unique<MemoryStore>(cfg.store_path);
    SystemClock clock;
    SecureRandom nonces;
    BackendService service({cfg.token_secret, cfg.token_expiry_s}, *store, clock, nonces);
    HttpServer server(service, cfg.threads);
    const int port = server.bind(cfg.host, cfg.port);
    if (port < 0) return 1;
    if (on_ready) on_ready(port);
    server.listen();
    return 0;
}

struct HttpClientTransport::Impl {
    httplib::Client client;
    Impl(const std::string& host, int port) : client(host, port) {}
};

HttpClientTransport::HttpClientTransport(std::string host, int port, double timeout_s)
    : impl_(std::make_unique<Impl>(host, port)) {
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    impl_->client.set_connection_timeout(secs, usecs);
    impl_->client.set_read_timeout(secs, usecs);
    impl_->client.set_write_timeout(secs, usecs);
}

HttpClientTransport::~HttpClientTransport() = default;

TransportResult HttpClientTransport::send(const HttpRequest& request) {
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    httplib::Result res;
    if (request.method == "GET") {
        res = impl_->client.Get(request.target, headers);
    } else if (request.method == "POST") {
        res = impl_->client.Post(request.target, headers, request.body, "application/json");
    } else {
        return TransportResult::fail(TransportFailure::ConnectionRefused);
    }
    if (!res) {
        switch (res.error()) {
            case httplib::Error::Connection:
                return TransportResult::fail(TransportFailure::ConnectionRefused);
            case httplib::Error::Read:
            case httplib::Error::ConnectionTimeout:
                return TransportResult::fail(TransportFailure::Timeout);
            default:
                return TransportResult::fail(TransportFailure::ConnectionReset);
        }
    }
    return TransportResult::of({res->status, res->body});
}

}  // namespace motionpi::backend
