#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "motionpi/record/record.hpp"
#include "motionpi/signal/types.hpp"

namespace motionpi::netsim {

using record::Json;

enum class ActivityState { Sedentary, Walking, Vigorous };

[[nodiscard]] const char* to_string(ActivityState s);
[[nodiscard]] std::optional<ActivityState> parse_activity_state(std::string_view s);

/// Generator constants. The wrist sees gravity on z plus a vertical sine;
/// mean ENMO of 1 + A sin(wt) is A / pi, so vigorous sits near 0.19 g and
/// walking near 0.048 g. Sedentary is gravity plus uniform noise.
struct GeneratorParams {
    double amplitude_g;
    double frequency_hz;
    double noise_g;
};

[[nodiscard]] const GeneratorParams& generator_params(ActivityState s);

/// Produces 32 Hz accelerometer samples for a given activity state.
class ActivitySynth {
public:
    explicit ActivitySynth(std::uint64_t seed, int sample_rate_hz = 32);

    /// Samples at t0 + i / rate for every i with that time < t1, appended to out.
    void generate(ActivityState state, double t0, double t1, std::vector<signal::AccelSample>& out);

private:
    std::uint64_t next();
    double uniform();  // [-1, 1)

    std::uint64_t state_;
    int rate_;
};

/// Which state a participant is in at any minute. Either a per-minute
/// Markov chain or a fixed list of local-time segments.
///
///   {"kind": "markov", "initial": "sedentary",
///    "transition": [[ss, sw, sv], [ws, ww, wv], [vs, vw, vv]]}
///   {"kind": "schedule", "default": "sedentary",
///    "segments": [{"start": "08:00", "end": "08:30", "state": "vigorous"}, ...]}
struct ActivityProfile {
    enum class Kind { Markov, Schedule };
    struct Segment {
        int start_s;
        int end_s;
        ActivityState state;
    };

    Kind kind = Kind::Markov;
    ActivityState initial = ActivityState::Sedentary;
    std::array<std::array<double, 3>, 3> transition{{{0.90, 0.08, 0.02}, {0.30, 0.60, 0.10}, {0.05, 0.10, 0.85}}};
    std::vector<Segment> segments;

    static ActivityProfile from_json(const Json& doc, const std::string& path);
    [[nodiscard]] Json to_json() const;
};

/// Walks a profile minute by minute.
class ActivityChain {
public:
    ActivityChain(const ActivityProfile& profile, std::uint64_t seed);

    /// State for the minute starting at local second-of-day sod. Markov
    /// chains advance one step per call.
    ActivityState next_minute(double seconds_of_day);

private:
    const ActivityProfile& profile_;
    std::mt19937_64 rng_;
    ActivityState current_;
};

}  // namespace motionpi::netsim
