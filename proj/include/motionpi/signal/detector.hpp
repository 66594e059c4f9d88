#pragma once

#include <deque>
#include <span>
#include <vector>

#include "motionpi/signal/types.hpp"

namespace motionpi::signal {

/// Produced once per completed bout.
struct BoutEvent {
    BoutSummary bout;
    EpochDecision epoch;
    // Epoch detector went false -> true at the end of this bout.
    bool trigger = false;
    [[nodiscard]] double end_t() const { return bout.start_t + bout.duration; }
};

/// Streaming bout/epoch evaluator. Bouts are aligned to the session start;
/// the epoch is re-evaluated on a sliding window after every completed bout.
class MvpaDetector {
public:
    MvpaDetector(TriggerConfig cfg, double session_start);

    /// Feeds samples in timestamp order; any chunking gives the same result.
    /// Returns the bouts closed by these samples.
    std::vector<BoutEvent> feed(std::span<const AccelSample> samples);

    /// Closes every bout whose end is <= t (bouts without samples count as
    /// low-coverage, non-MVPA).
    std::vector<BoutEvent> advance_to(double t);

    [[nodiscard]] const TriggerConfig& config() const { return cfg_; }
    [[nodiscard]] double session_start() const { return session_start_; }
    [[nodiscard]] bool in_mvpa_epoch() const { return in_epoch_; }

private:
    [[nodiscard]] double bout_start(long index) const;
    void close_current(std::vector<BoutEvent>& out);

    TriggerConfig cfg_;
    double session_start_;
    long current_index_ = 0;
    std::vector<AccelSample> pending_;
    std::deque<BoutSummary> window_;
    bool in_epoch_ = false;
    double last_t_;
};

/// Whole-trace evaluation used for replay: vector ENMO, per-bout bucketing
/// and a prefix-count sliding window. Returns edge-triggered trigger times
/// (bout end times) for all bouts ending at or before end_t.
[[nodiscard]] std::vector<double> detect_triggers(std::span<const AccelSample> trace, const TriggerConfig& cfg,
                                                  double session_start, double end_t);

}  // namespace motionpi::signal
