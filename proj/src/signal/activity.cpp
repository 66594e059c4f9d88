#include "motionpi/signal/activity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "motionpi/signal/kernels.hpp"

namespace motionpi::signal {

void TriggerConfig::validate() const {
    if (!(std::isfinite(mvpa_threshold_g) && mvpa_threshold_g >= 0.0)) {
        throw std::invalid_argument("mvpa_threshold_g must be finite and non-negative");
    }
    if (bout_seconds <= 0 || epoch_seconds <= 0 || sample_rate_hz <= 0 || mvpa_required_seconds < 0) {
        throw std::invalid_argument("trigger durations and sample rate must be positive");
    }
    if (epoch_seconds % bout_seconds != 0) {
        throw std::invalid_argument("epoch_seconds must be a multiple of bout_seconds");
    }
    if (mvpa_required_seconds > epoch_seconds) {
        throw std::invalid_argument("mvpa_required_seconds exceeds epoch_seconds");
    }
}

double compute_enmo(const AccelSample& s) {
    if (!std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az)) {
        throw std::domain_error("compute_enmo: non-finite acceleration");
    }
    const double sq = (s.ax * s.ax + s.ay * s.ay) + s.az * s.az;
    return std::max(std::sqrt(sq) - 1.0, 0.0);
}

std::vector<double> compute_enmo(std::span<const AccelSample> samples) {
    std::vector<double> out(samples.size());
    kernels::active().enmo(samples, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i])) {
            throw std::domain_error("compute_enmo: non-finite acceleration at index " + std::to_string(i));
        }
    }
    return out;
}

bool exceeds_threshold(double mean_enmo, double threshold) {
    return std::llround(mean_enmo / kEnmoResolutionG) > std::llround(threshold / kEnmoResolutionG);
}

void validate_stream(std::span<const AccelSample> samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        for (double v : {s.t, s.ax, s.ay, s.az}) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("sample " + std::to_string(i) + ": non-finite value");
            }
        }
        if (std::abs(s.ax) > kFullScaleG || std::abs(s.ay) > kFullScaleG || std::abs(s.az) > kFullScaleG) {
            throw std::invalid_argument("sample " + std::to_string(i) + ": axis beyond full scale");
        }
        if (i > 0 && !(s.t > samples[i - 1].t)) {
            throw std::invalid_argument("sample " + std::to_string(i) + ": timestamp not strictly increasing");
        }
    }
}

BoutSummary summarize_bout(std::span<const AccelSample> samples, const TriggerConfig& cfg, double bout_start) {
    if (samples.empty()) {
        throw EmptyBoutError("summarize_bout: empty window");
    }
    const double bout_end = bout_start + cfg.bout_seconds;
    if (samples.front().t < bout_start || !(samples.back().t < bout_end)) {
        throw std::invalid_argument("summarize_bout: samples fall outside the bout window");
    }
    const std::vector<double> enmo = compute_enmo(samples);
    double sum = 0.0;
    for (double e : enmo) {
        sum += e;
    }
    BoutSummary b;
    b.start_t = bout_start;
    b.duration = cfg.bout_seconds;
    b.sample_count = static_cast<int>(samples.size());
    b.mean_enmo = sum / static_cast<double>(samples.size());
    b.low_coverage = 2 * b.sample_count < cfg.expected_samples_per_bout();
    b.is_mvpa = !b.low_coverage && exceeds_threshold(b.mean_enmo, cfg.mvpa_threshold_g);
    return b;
}

BoutSummary empty_bout(const TriggerConfig& cfg, double bout_start) {
    BoutSummary b;
    b.start_t = bout_start;
    b.duration = cfg.bout_seconds;
    b.low_coverage = true;
    return b;
}

EpochDecision detect_mvpa_epoch(std::span<const BoutSummary> recent_bouts, const TriggerConfig& cfg) {
    const auto window = static_cast<std::size_t>(cfg.bouts_per_epoch());
    EpochDecision d;
    if (recent_bouts.size() < window) {
        return d;
    }
    d.window_complete = true;
    for (const auto& b : recent_bouts.last(window)) {
        d.mvpa_bouts += b.is_mvpa ? 1 : 0;
    }
    d.is_mvpa_epoch = d.mvpa_bouts * cfg.bout_seconds >= cfg.mvpa_required_seconds;
    return d;
}

}  // namespace motionpi::signal
