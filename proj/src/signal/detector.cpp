#include "motionpi/signal/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "motionpi/signal/activity.hpp"

namespace motionpi::signal {

MvpaDetector::MvpaDetector(TriggerConfig cfg, double session_start)
    : cfg_(cfg), session_start_(session_start), last_t_(-std::numeric_limits<double>::infinity()) {
    cfg_.validate();
    pending_.reserve(static_cast<std::size_t>(cfg_.expected_samples_per_bout()));
}

double MvpaDetector::bout_start(long index) const {
    return session_start_ + static_cast<double>(index) * cfg_.bout_seconds;
}

void MvpaDetector::close_current(std::vector<BoutEvent>& out) {
    const double start = bout_start(current_index_);
    BoutEvent ev;
    ev.bout = pending_.empty() ? empty_bout(cfg_, start) : summarize_bout(pending_, cfg_, start);
    pending_.clear();
    window_.push_back(ev.bout);
    while (window_.size() > static_cast<std::size_t>(cfg_.bouts_per_epoch())) {
        window_.pop_front();
    }
    const std::vector<BoutSummary> recent(window_.begin(), window_.end());
    ev.epoch = detect_mvpa_epoch(recent, cfg_);
    ev.trigger = ev.epoch.is_mvpa_epoch && !in_epoch_;
    in_epoch_ = ev.epoch.is_mvpa_epoch;
    out.push_back(ev);
    ++current_index_;
}

std::vector<BoutEvent> MvpaDetector::feed(std::span<const AccelSample> samples) {
    std::vector<BoutEvent> out;
    for (const auto& s : samples) {
        if (s.t < session_start_) {
            throw std::invalid_argument("sample precedes session start");
        }
        if (!(s.t > last_t_)) {
            throw std::invalid_argument("sample timestamps must be strictly increasing");
        }
        last_t_ = s.t;
        const auto index = static_cast<long>(std::floor((s.t - session_start_) / cfg_.bout_seconds));
        while (current_index_ < index) {
            close_current(out);
        }
        pending_.push_back(s);
    }
    return out;
}

std::vector<BoutEvent> MvpaDetector::advance_to(double t) {
    std::vector<BoutEvent> out;
    while (bout_start(current_index_ + 1) <= t) {
        close_current(out);
    }
    return out;
}

std::vector<double> detect_triggers(std::span<const AccelSample> trace, const TriggerConfig& cfg,
                                    double session_start, double end_t) {
    cfg.validate();
    validate_stream(trace);
    if (!trace.empty() && trace.front().t < session_start) {
        throw std::invalid_argument("trace precedes session start");
    }
    const auto n_bouts = static_cast<long>(std::floor((end_t - session_start) / cfg.bout_seconds));
    if (n_bouts <= 0) {
        return {};
    }
    const std::vector<double> enmo = compute_enmo(trace);

    std::vector<double> sums(static_cast<std::size_t>(n_bouts), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(n_bouts), 0);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto b = static_cast<long>(std::floor((trace[i].t - session_start) / cfg.bout_seconds));
        if (b >= n_bouts) {
            break;
        }
        sums[static_cast<std::size_t>(b)] += enmo[i];
        counts[static_cast<std::size_t>(b)] += 1;
    }

    // prefix[k] = number of MVPA bouts among the first k bouts.
    std::vector<int> prefix(static_cast<std::size_t>(n_bouts) + 1, 0);
    for (long b = 0; b < n_bouts; ++b) {
        const int c = counts[static_cast<std::size_t>(b)];
        const bool covered = 2 * c >= cfg.expected_samples_per_bout() && c > 0;
        const bool mvpa = covered && exceeds_threshold(sums[static_cast<std::size_t>(b)] / c, cfg.mvpa_threshold_g);
        prefix[static_cast<std::size_t>(b) + 1] = prefix[static_cast<std::size_t>(b)] + (mvpa ? 1 : 0);
    }

    const long window = cfg.bouts_per_epoch();
    std::vector<double> triggers;
    bool previous = false;
    for (long b = 0; b < n_bouts; ++b) {
        bool epoch = false;
        if (b + 1 >= window) {
            const int mvpa = prefix[static_cast<std::size_t>(b + 1)] - prefix[static_cast<std::size_t>(b + 1 - window)];
            epoch = mvpa * cfg.bout_seconds >= cfg.mvpa_required_seconds;
        }
        if (epoch && !previous) {
            triggers.push_back(session_start + static_cast<double>(b + 1) * cfg.bout_seconds);
        }
        previous = epoch;
    }
    return triggers;
}

}  // namespace motionpi::signal
