#pragma once

#include <optional>
#include <string>
#include <vector>

#include "motionpi/common/clock.hpp"
#include "motionpi/common/http.hpp"
#include "motionpi/record/record.hpp"

namespace motionpi::netsim {

using record::Json;

enum class DropMode {
    RefuseConnection,  // nothing reaches the server
    Timeout,           // the server handles the request, the answer is lost
    MidBodyCut,        // the server receives a truncated body, the client a reset
};

[[nodiscard]] const char* to_string(DropMode m);
[[nodiscard]] std::optional<DropMode> parse_drop_mode(std::string_view s);

struct OutageInterval {
    double start_t;
    double end_t;  // exclusive
    std::optional<DropMode> mode;  // overrides the schedule default
};

struct OutageSchedule {
    std::vector<OutageInterval> intervals;  // sorted, disjoint
    DropMode drop_mode = DropMode::RefuseConnection;

    /// Throws std::invalid_argument unless intervals are sorted, disjoint and non-empty.
    void validate(const std::string& path = "outages") const;
    /// The failure mode at t, or nullopt when the link is up.
    [[nodiscard]] std::optional<DropMode> mode_at(double t) const;
    [[nodiscard]] double total_seconds() const;
};

struct LinkOptions {
    // Each request occupies the link for this long; requests issued at the
    // same clock instant queue behind each other for outage checks.
    double latency_s = 0.05;
    // Deliver every request that reaches the server twice.
    bool duplicate_delivery = false;
    bool capture = false;
};

struct CaptureEntry {
    double t = 0.0;
    std::string method;
    std::string target;
    std::string request_body;   // as sent by the client
    std::string delivered_body; // as received by the server (empty if nothing arrived)
    std::optional<int> status;  // as seen by the client
    std::string response_body;
    TransportFailure failure = TransportFailure::None;
    bool authorized = false;    // carried an Authorization header
    std::string authorization;  // header value, for replays
};

struct LinkStats {
    std::uint64_t requests = 0;
    std::uint64_t delivered = 0;
    std::uint64_t refused = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t resets = 0;
    std::uint64_t duplicates = 0;
    [[nodiscard]] Json to_json() const;
};

/// Lossy link between one or more agents and an upstream transport.
class SimulatedLink final : public Transport {
public:
    SimulatedLink(Transport& upstream, const Clock& clock, OutageSchedule schedule, LinkOptions options = {});

    TransportResult send(const HttpRequest& request) override;

    [[nodiscard]] const LinkStats& stats() const { return stats_; }
    [[nodiscard]] const std::vector<CaptureEntry>& capture() const { return capture_; }
    [[nodiscard]] const OutageSchedule& schedule() const { return schedule_; }

    /// Truncation point used by MidBodyCut: half the body, at least one
    /// byte short of complete.
    [[nodiscard]] static std::size_t cut_point(std::size_t body_size);

private:
    Transport& upstream_;
    const Clock& clock_;
    OutageSchedule schedule_;
    LinkOptions options_;
    LinkStats stats_;
    std::vector<CaptureEntry> capture_;
    double busy_at_ = -1.0;
    double busy_offset_ = 0.0;
};

}  // namespace motionpi::netsim
