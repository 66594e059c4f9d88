#include "motionpi/netsim/link.hpp"

#include <algorithm>
#include <stdexcept>

namespace motionpi::netsim {

const char* to_string(DropMode m) {
    switch (m) {
        case DropMode::RefuseConnection: return "refuse_connection";
        case DropMode::Timeout: return "timeout";
        case DropMode::MidBodyCut: return "mid_body_cut";
    }
    return "?";
}

std::optional<DropMode> parse_drop_mode(std::string_view s) {
    if (s == "refuse_connection") return DropMode::RefuseConnection;
    if (s == "timeout") return DropMode::Timeout;
    if (s == "mid_body_cut") return DropMode::MidBodyCut;
    return std::nullopt;
}

void OutageSchedule::validate(const std::string& path) const {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        const std::string p = path + ".intervals[" + std::to_string(i) + "]";
        if (!(iv.end_t > iv.start_t)) throw std::invalid_argument(p + ": end must be after start");
        if (i > 0 && iv.start_t < intervals[i - 1].end_t)
            throw std::invalid_argument(p + ": intervals must be sorted and disjoint");
    }
}

std::optional<DropMode> OutageSchedule::mode_at(double t) const {
    const auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                                     [](double v, const OutageInterval& iv) { return v < iv.start_t; });
    if (it == intervals.begin()) return std::nullopt;
    const auto& iv = *std::prev(it);
    if (t >= iv.end_t) return std::nullopt;
    return iv.mode.value_or(drop_mode);
}

double OutageSchedule::total_seconds() const {
    double s = 0;
    for (const auto& iv : intervals) s += iv.end_t - iv.start_t;
    return s;
}

Json LinkStats::to_json() const {
    return Json{{"requests", requests}, {"delivered", delivered}, {"refused", refused},
                {"timeouts", timeouts}, {"resets", resets},       {"duplicates", duplicates}};
}

SimulatedLink::SimulatedLink(Transport& upstream, const Clock& clock, OutageSchedule schedule, LinkOptions options)
    : upstream_(upstream), clock_(clock), schedule_(std::move(schedule)), options_(options) {
    schedule_.validate();
}

std::size_t SimulatedLink::cut_point(std::size_t body_size) {
    return body_size == 0 ? 0 : std::min(body_size - 1, body_size / 2);
}

TransportResult SimulatedLink::send(const HttpRequest& request) {
    const double now = clock_.now();
    if (now != busy_at_) {
        busy_at_ = now;
        busy_offset_ = 0.0;
    }
    const double t = now + busy_offset_;
    busy_offset_ += options_.latency_s;
    ++stats_.requests;

    CaptureEntry cap;
    if (options_.capture) {
        cap.t = t;
        cap.method = request.method;
        cap.target = request.target;
        cap.request_body = request.body;
        if (const auto h = request.header("authorization")) {
            cap.authorized = true;
            cap.authorization = *h;
        }
    }
    const auto finish = [&](TransportResult r, const std::string& delivered) {
        if (options_.capture) {
            cap.delivered_body = delivered;
            cap.failure = r.failure;
            if (r.ok()) {
                cap.status = r.response->status;
                cap.response_body = r.response->body;
            }
            capture_.push_back(std::move(cap));
        }
        return r;
    };

    const auto mode = schedule_.mode_at(t);
    if (!mode) {
        auto r = upstream_.send(request);
        ++stats_.delivered;
        if (options_.duplicate_delivery) {
            (void)upstream_.send(request);
            ++stats_.duplicates;
        }
        return finish(std::move(r), request.body);
    }
    switch (*mode) {
        case DropMode::RefuseConnection:
            ++stats_.refused;
            return finish(TransportResult::fail(TransportFailure::ConnectionRefused), {});
        case DropMode::Timeout:
            (void)upstream_.send(request);
            ++stats_.delivered;
            ++stats_.timeouts;
            return finish(TransportResult::fail(TransportFailure::Timeout), request.body);
        case DropMode::MidBodyCut: {
            ++stats_.resets;
            if (request.body.empty()) return finish(TransportResult::fail(TransportFailure::ConnectionReset), {});
            HttpRequest cut = request;
            cut.body.resize(cut_point(request.body.size()));
            (void)upstream_.send(cut);
            ++stats_.delivered;
            return finish(TransportResult::fail(TransportFailure::ConnectionReset), cut.body);
        }
    }
    return finish(TransportResult::fail(TransportFailure::ConnectionRefused), {});
}

}  // namespace motionpi::netsim
