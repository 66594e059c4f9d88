#include "motionpi/netsim/activity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "motionpi/common/civil_time.hpp"

namespace motionpi::netsim {

const char* to_string(ActivityState s) {
    switch (s) {
        case ActivityState::Sedentary: return "sedentary";
        case ActivityState::Walking: return "walking";
        case ActivityState::Vigorous: return "vigorous";
    }
    return "?";
}

std::optional<ActivityState> parse_activity_state(std::string_view s) {
    if (s == "sedentary") return ActivityState::Sedentary;
    if (s == "walking") return ActivityState::Walking;
    if (s == "vigorous") return ActivityState::Vigorous;
    return std::nullopt;
}

const GeneratorParams& generator_params(ActivityState s) {
    static const GeneratorParams kSedentary{0.0, 0.0, 0.01};
    static const GeneratorParams kWalking{0.15, 1.8, 0.01};
    static const GeneratorParams kVigorous{0.6, 2.5, 0.02};
    switch (s) {
        case ActivityState::Walking: return kWalking;
        case ActivityState::Vigorous: return kVigorous;
        default: return kSedentary;
    }
}

ActivitySynth::ActivitySynth(std::uint64_t seed, int sample_rate_hz)
    : state_(seed ? seed : 0x9E3779B97F4A7C15ULL), rate_(sample_rate_hz) {}

std::uint64_t ActivitySynth::next() {
    // xorshift64*
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
}

double ActivitySynth::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }

void ActivitySynth::generate(ActivityState state, double t0, double t1, std::vector<signal::AccelSample>& out) {
    const auto& p = generator_params(state);
    const double w = 2.0 * std::numbers::pi * p.frequency_hz;
    const auto n = static_cast<long>(std::ceil((t1 - t0) * rate_ - 1e-9));
    out.reserve(out.size() + static_cast<std::size_t>(std::max(0L, n)));
    for (long i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) / rate_;
        const double wave = p.amplitude_g == 0.0 ? 0.0 : p.amplitude_g * std::sin(w * (t - t0));
        out.push_back({t, p.noise_g * uniform(), p.noise_g * uniform(), 1.0 + wave + p.noise_g * uniform()});
    }
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

ActivityState state_field(const Json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "must be sedentary, walking or vigorous");
    const auto s = parse_activity_state(v.get<std::string>());
    if (!s) bad(path, "must be sedentary, walking or vigorous");
    return *s;
}

int time_field(const Json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "must be HH:MM");
    try {
        return parse_time_of_day(v.get<std::string>());
    } catch (const std::invalid_argument&) {
        bad(path, "must be HH:MM");
    }
}

}  // namespace

ActivityProfile ActivityProfile::from_json(const Json& doc, const std::string& path) {
    if (!doc.is_object()) bad(path, "must be an object");
    ActivityProfile p;
    const auto kind = doc.find("kind");
    if (kind == doc.end() || !kind->is_string()) bad(path + ".kind", "must be \"markov\" or \"schedule\"");
    if (*kind == "markov") {
        p.kind = Kind::Markov;
    } else if (*kind == "schedule") {
        p.kind = Kind::Schedule;
    } else {
        bad(path + ".kind", "must be \"markov\" or \"schedule\"");
    }
    for (const auto& [key, v] : doc.items()) {
        const std::string kp = path + "." + key;
        if (key == "kind") continue;
        if (key == "initial" && p.kind == Kind::Markov) {
            p.initial = state_field(v, kp);
        } else if (key == "transition" && p.kind == Kind::Markov) {
            if (!v.is_array() || v.size() != 3) bad(kp, "must be a 3x3 array");
            for (std::size_t i = 0; i < 3; ++i) {
                const std::string rp = kp + "[" + std::to_string(i) + "]";
                if (!v[i].is_array() || v[i].size() != 3) bad(rp, "must hold 3 probabilities");
                double sum = 0;
                for (std::size_t j = 0; j < 3; ++j) {
                    if (!v[i][j].is_number() || v[i][j].get<double>() < 0)
                        bad(rp + "[" + std::to_string(j) + "]", "must be a non-negative number");
                    p.transition[i][j] = v[i][j];
                    sum += p.transition[i][j];
                }
                if (std::fabs(sum - 1.0) > 1e-6) bad(rp, "must sum to 1");
            }
        } else if (key == "default" && p.kind == Kind::Schedule) {
            p.initial = state_field(v, kp);
        } else if (key == "segments" && p.kind == Kind::Schedule) {
            if (!v.is_array()) bad(kp, "must be an array");
            int prev_end = -1;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string sp = kp + "[" + std::to_string(i) + "]";
                const auto& s = v[i];
                if (!s.is_object()) bad(sp, "must be an object");
                for (const auto& [sk, sv] : s.items())
                    if (sk != "start" && sk != "end" && sk != "state") bad(sp + "." + sk, "unknown field");
                if (!s.contains("start") || !s.contains("end") || !s.contains("state")) bad(sp, "needs start, end and state");
                Segment seg{time_field(s["start"], sp + ".start"), time_field(s["end"], sp + ".end"),
                            state_field(s["state"], sp + ".state")};
                if (seg.end_s <= seg.start_s) bad(sp + ".end", "must be after start");
                if (seg.start_s < prev_end) bad(sp + ".start", "segments must be sorted and disjoint");
                prev_end = seg.end_s;
                p.segments.push_back(seg);
            }
        } else {
            bad(kp, "unknown field");
        }
    }
    return p;
}

Json ActivityProfile::to_json() const {
    if (kind == Kind::Markov) {
        Json m = Json::array();
        for (const auto& row : transition) m.push_back(Json(row));
        return Json{{"kind", "markov"}, {"initial", to_string(initial)}, {"transition", m}};
    }
    Json segs = Json::array();
    for (const auto& s : segments)
        segs.push_back({{"start", format_time_of_day(s.start_s).substr(0, 5)},
                        {"end", format_time_of_day(s.end_s).substr(0, 5)},
                        {"state", to_string(s.state)}});
    return Json{{"kind", "schedule"}, {"default", to_string(initial)}, {"segments", segs}};
}

ActivityChain::ActivityChain(const ActivityProfile& profile, std::uint64_t seed)
    : profile_(profile), rng_(seed), current_(profile.initial) {}

ActivityState ActivityChain::next_minute(double seconds_of_day) {
    if (profile_.kind == ActivityProfile::Kind::Schedule) {
        for (const auto& s : profile_.segments)
            if (seconds_of_day >= s.start_s && seconds_of_day < s.end_s) return s.state;
        return profile_.initial;
    }
    const auto state = current_;
    const auto& row = profile_.transition[static_cast<std::size_t>(current_)];
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    current_ = u < row[0] ? ActivityState::Sedentary : u < row[0] + row[1] ? ActivityState::Walking : ActivityState::Vigorous;
    return state;
}

}  // namespace motionpi::netsim
