#pragma once

#include <cstdint>

namespace motionpi::signal {

/// One calibrated accelerometer reading. Axis values are in g and still
/// include gravity; t is UNIX seconds.
struct AccelSample {
    double t = 0.0;
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;
};
static_assert(sizeof(AccelSample) == 4 * sizeof(double), "kernels load samples as packed 4-double rows");

inline constexpr double kFullScaleG = 16.0;

/// Thresholds for the wrist-worn MVPA trigger.
struct TriggerConfig {
    double mvpa_threshold_g = 0.1006;
    int bout_seconds = 15;
    int epoch_seconds = 420;
    int mvpa_required_seconds = 294;
    int sample_rate_hz = 32;

    /// Throws std::invalid_argument when the configuration is inconsistent.
    void validate() const;

    [[nodiscard]] int bouts_per_epoch() const { return epoch_seconds / bout_seconds; }
    [[nodiscard]] int expected_samples_per_bout() const { return bout_seconds * sample_rate_hz; }
};

struct BoutSummary {
    double start_t = 0.0;
    int duration = 15;
    double mean_enmo = 0.0;
    bool is_mvpa = false;
    int sample_count = 0;
    // Fewer than half the expected samples arrived; never counted as MVPA.
    bool low_coverage = false;
};

struct EpochDecision {
    bool is_mvpa_epoch = false;
    bool window_complete = false;
    int mvpa_bouts = 0;
};

}  // namespace motionpi::signal
