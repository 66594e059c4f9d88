#include "motionpi/ema/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace motionpi::ema {

void CollectionWindow::validate() const {
    if (start_s < 0 || end_s > 86400 || !(start_s < end_s)) {
        throw std::invalid_argument("collection window must satisfy 00:00 <= start < end <= 24:00");
    }
}

const std::array<Block, 3>& random_blocks() {
    static const std::array<Block, 3> blocks{{
        {"morning", 7 * 3600 + 30 * 60, 12 * 3600},
        {"afternoon", 12 * 3600, 17 * 3600},
        {"evening", 17 * 3600, 21 * 3600 + 30 * 60},
    }};
    return blocks;
}

std::array<double, 3> plan_random_surveys(LocalDate date, std::uint64_t seed, const LocalCalendar& calendar) {
    using namespace std::chrono;
    const auto day_number = sys_days{year{date.year} / month{date.month} / day{date.day}}.time_since_epoch().count();
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(day_number)));
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& b = random_blocks()[i];
        const auto span_ms = static_cast<std::uint64_t>(b.end_s - b.start_s) * 1000;
        const std::uint64_t offset_ms = rng() % span_ms;
        out[i] = calendar.at(date, b.start_s) + static_cast<double>(offset_ms) / 1000.0;
    }
    return out;
}

const char* to_string(SurveyKind k) { return k == SurveyKind::Random ? "random" : "activity"; }

const char* to_string(SurveyStatus s) {
    switch (s) {
        case SurveyStatus::Pending: return "pending";
        case SurveyStatus::Completed: return "completed";
        case SurveyStatus::Declined: return "declined";
        case SurveyStatus::Expired: return "expired";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::BluetoothOn: return "bluetooth_on";
        case EventKind::BluetoothOff: return "bluetooth_off";
        case EventKind::BandConnected: return "band_connected";
        case EventKind::BandDisconnected: return "band_disconnected";
        case EventKind::CollectionEnabled: return "collection_enabled";
        case EventKind::CollectionDisabled: return "collection_disabled";
        case EventKind::BatteryBelow20: return "battery_below_20";
        case EventKind::SurveyTriggered: return "survey_triggered";
        case EventKind::SurveyNotified: return "survey_notified";
        case EventKind::SurveyDeclined: return "survey_declined";
        case EventKind::SurveyExpired: return "survey_expired";
        case EventKind::SurveyCompleted: return "survey_completed";
        case EventKind::SurveySuppressed: return "survey_suppressed";
        case EventKind::SurveyMissed: return "survey_missed";
    }
    return "?";
}

EmaScheduler::EmaScheduler(SchedulerConfig cfg, RandomSource& ids)
    : cfg_(std::move(cfg)), ids_(ids), calendar_(cfg_.utc_offset_minutes) {
    cfg_.window.validate();
    if (!(cfg_.expiry_s > 0.0)) throw std::invalid_argument("survey expiry must be positive");
    if (cfg_.participant_id.empty() || cfg_.phone_id.empty()) {
        throw std::invalid_argument("participant_id and phone_id are required");
    }
}

void EmaScheduler::start_day(LocalDate date, double now) {
    advance_to(now);
    const auto times = plan_random_surveys(date, cfg_.seed, calendar_);
    for (int i = 0; i < 3; ++i) {
        if (times[static_cast<std::size_t>(i)] < now) {
            emit(EventKind::SurveyMissed, now, std::nullopt, std::nullopt,
                 Json{{"block", random_blocks()[static_cast<std::size_t>(i)].name},
                      {"scheduled_t", times[static_cast<std::size_t>(i)]}});
            continue;
        }
        slots_.push_back({times[static_cast<std::size_t>(i)], i});
    }
    std::sort(slots_.begin(), slots_.end(), [](const Slot& a, const Slot& b) { return a.t < b.t; });
}

std::optional<double> EmaScheduler::next_due() const {
    double due = std::numeric_limits<double>::infinity();
    if (!slots_.empty()) due = slots_.front().t;
    for (auto i : pending_) due = std::min(due, surveys_[i].expires_t);
    if (std::isinf(due)) return std::nullopt;
    return due;
}

void EmaScheduler::advance_to(double t) {
    for (;;) {
        // Earliest pending expiry; ties resolve expiries before new triggers.
        std::size_t expiring = pending_.size();
        for (std::size_t k = 0; k < pending_.size(); ++k) {
            if (expiring == pending_.size() || surveys_[pending_[k]].expires_t < surveys_[pending_[expiring]].expires_t) {
                expiring = k;
            }
        }
        const double expiry_t =
            expiring < pending_.size() ? surveys_[pending_[expiring]].expires_t : std::numeric_limits<double>::infinity();
        const double slot_t = slots_.empty() ? std::numeric_limits<double>::infinity() : slots_.front().t;
        if (expiry_t <= slot_t && expiry_t <= t) {
            now_ = std::max(now_, expiry_t);
            finish(pending_[expiring], SurveyStatus::Expired, expiry_t);
        } else if (slot_t <= t) {
            const Slot s = slots_.front();
            slots_.pop_front();
            now_ = std::max(now_, s.t);
            trigger(SurveyKind::Random, s.t, s.block, std::nullopt);
        } else {
            break;
        }
    }
    now_ = std::max(now_, t);
}

std::optional<std::string> EmaScheduler::on_mvpa_notification(double t, const std::optional<std::string>& band_mac) {
    advance_to(t);
    if (!cfg_.window.contains(calendar_.seconds_of_day(t))) {
        emit(EventKind::SurveySuppressed, t, band_mac, std::nullopt, Json{{"reason", "outside_window"}});
        return std::nullopt;
    }
    if (activity_pending()) {
        emit(EventKind::SurveySuppressed, t, band_mac, std::nullopt, Json{{"reason", "activity_survey_pending"}});
        return std::nullopt;
    }
    return trigger(SurveyKind::Activity, t, -1, band_mac).id;
}

SurveyStatus EmaScheduler::resolve(const std::string& id, const SurveyAction& action) {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) throw SurveyError("unknown survey " + id);
    const std::size_t index = it->second;
    if (surveys_[index].terminal()) {
        throw SurveyError("survey " + id + " is already " + to_string(surveys_[index].status));
    }
    if (action.t < surveys_[index].triggered_t) throw SurveyError("action precedes the survey trigger");
    advance_to(action.t);
    if (surveys_[index].terminal()) return surveys_[index].status;
    switch (action.type) {
        case SurveyAction::Type::Complete:
            if (auto err = cfg_.survey.check(action.responses)) throw SurveyError(*err);
            surveys_[index].responses = action.responses;
            finish(index, SurveyStatus::Completed, action.t);
            break;
        case SurveyAction::Type::Decline:
            finish(index, SurveyStatus::Declined, action.t);
            break;
        case SurveyAction::Type::Clock:
            break;
    }
    return surveys_[index].status;
}

void EmaScheduler::log(EventKind kind, double t, std::optional<std::string> band_mac, Json detail) {
    emit(kind, t, band_mac, std::nullopt, std::move(detail));
}

const SurveyInstance* EmaScheduler::find(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &surveys_[it->second];
}

bool EmaScheduler::activity_pending() const {
    return std::any_of(pending_.begin(), pending_.end(),
                       [&](std::size_t i) { return surveys_[i].kind == SurveyKind::Activity; });
}

std::size_t EmaScheduler::pending_count() const { return pending_.size(); }

std::vector<EventRecord> EmaScheduler::take_events() { return std::exchange(events_, {}); }

std::vector<SurveyInstance> EmaScheduler::take_resolved() { return std::exchange(resolved_, {}); }

SurveyInstance& EmaScheduler::trigger(SurveyKind kind, double t, int block, const std::optional<std::string>& band_mac) {
    SurveyInstance s;
    s.id = make_uuid(ids_);
    s.kind = kind;
    s.triggered_t = t;
    s.expires_t = t + cfg_.expiry_s;
    s.block = block;
    s.band_mac = band_mac;
    surveys_.push_back(s);
    pending_.push_back(surveys_.size() - 1);
    by_id_.emplace(s.id, surveys_.size() - 1);
    Json detail{{"kind", to_string(kind)}};
    if (block >= 0) detail["block"] = random_blocks()[static_cast<std::size_t>(block)].name;
    emit(EventKind::SurveyTriggered, t, band_mac, s.id, detail);
    emit(EventKind::SurveyNotified, t, band_mac, s.id, detail);
    return surveys_.back();
}

void EmaScheduler::finish(std::size_t index, SurveyStatus status, double t) {
    SurveyInstance& s = surveys_[index];
    s.status = status;
    s.resolved_t = t;
    pending_.erase(std::remove(pending_.begin(), pending_.end(), index), pending_.end());
    const EventKind kind = status == SurveyStatus::Completed ? EventKind::SurveyCompleted
                           : status == SurveyStatus::Declined ? EventKind::SurveyDeclined
                                                              : EventKind::SurveyExpired;
    emit(kind, t, s.band_mac, s.id, Json{{"kind", to_string(s.kind)}});
    resolved_.push_back(s);
}

void EmaScheduler::emit(EventKind kind, double t, const std::optional<std::string>& band_mac,
                        const std::optional<std::string>& survey_id, Json detail) {
    EventRecord e;
    e.kind = kind;
    e.participant_id = cfg_.participant_id;
    e.phone_id = cfg_.phone_id;
    e.timestamp = t;
    e.band_mac = band_mac;
    e.local_time = calendar_.iso8601(t);
    e.survey_id = survey_id;
    e.detail = std::move(detail);
    events_.push_back(std::move(e));
}

}  // namespace motionpi::ema
