#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "motionpi/signal/types.hpp"

namespace motionpi::signal {

/// Bout means are compared against the threshold at this resolution (g), so
/// sub-ulp residue from sqrt(x^2) - 1 cannot push an exactly-at-threshold
/// bout over the line.
inline constexpr double kEnmoResolutionG = 1e-9;

class EmptyBoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// max(sqrt(ax^2 + ay^2 + az^2) - 1, 0). Throws std::domain_error on
/// non-finite input.
[[nodiscard]] double compute_enmo(const AccelSample& sample);

/// Batch ENMO through the active SIMD kernel set.
[[nodiscard]] std::vector<double> compute_enmo(std::span<const AccelSample> samples);

/// True when mean_enmo strictly exceeds threshold at kEnmoResolutionG.
[[nodiscard]] bool exceeds_threshold(double mean_enmo, double threshold);

/// Checks the stream invariants: finite axes within full scale and strictly
/// increasing timestamps. Throws std::invalid_argument naming the index.
void validate_stream(std::span<const AccelSample> samples);

/// Averages per-sample ENMO over one bout window starting at bout_start.
/// Throws EmptyBoutError for an empty window. Windows holding fewer than half
/// the expected samples are flagged low_coverage and never MVPA.
[[nodiscard]] BoutSummary summarize_bout(std::span<const AccelSample> samples, const TriggerConfig& cfg,
                                         double bout_start);

/// Placeholder summary for a bout that received no samples at all.
[[nodiscard]] BoutSummary empty_bout(const TriggerConfig& cfg, double bout_start);

/// Decides the trailing epoch from the most recent bouts (only the last
/// bouts_per_epoch entries are considered). An incomplete window never
/// triggers.
[[nodiscard]] EpochDecision detect_mvpa_epoch(std::span<const BoutSummary> recent_bouts, const TriggerConfig& cfg);

}  // namespace motionpi::signal
