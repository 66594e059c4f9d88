#include "motionpi/band/wristband.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "motionpi/common/random.hpp"
#include "motionpi/signal/activity.hpp"

namespace motionpi::band {

const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

void BandConfig::validate() const {
    trigger.validate();
    geometry.validate();
    if (trigger.sample_rate_hz != kImuRateHz) {
        throw BandError("the IMU record layout fixes the sample rate at 32 Hz");
    }
    if (!(drain_pct_per_hour >= 0.0) || !(low_battery_pct > 0.0 && low_battery_pct < 100.0) ||
        !(start_battery_pct > 0.0 && start_battery_pct <= 100.0)) {
        throw BandError("battery parameters out of range");
    }
    if (session_file_seconds <= 0) {
        throw BandError("session_file_seconds must be positive");
    }
}

Wristband::Wristband(BandConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      image_(ftl::FlashImage::format(cfg_.geometry, static_cast<std::uint32_t>(derive_seed(cfg_.seed, 0xF1A5)))),
      imu_{"IMU", kImuRecordSize, kImuRateHz, std::nullopt, 0, 1},
      ppg_{"PPG", kPpgRecordSize, kPpgRateHz, std::nullopt, 0, 1},
      ppg_synth_(derive_seed(cfg_.seed, 0x0991)),
      battery_at_charge_(cfg_.start_battery_pct),
      below_low_(cfg_.start_battery_pct < cfg_.low_battery_pct) {
    const auto m = derive_seed(cfg_.seed, 0x3A6);
    for (int a = 0; a < 3; ++a) {
        mag_[a] = static_cast<std::int16_t>(static_cast<int>((m >> (16 * a)) & 0x3FF) - 512);
    }
}

std::string Wristband::mac_string() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", cfg_.mac[0], cfg_.mac[1], cfg_.mac[2],
                  cfg_.mac[3], cfg_.mac[4], cfg_.mac[5]);
    return buf;
}

double Wristband::battery_pct() const {
    return std::max(0.0, battery_at_charge_ - cfg_.drain_pct_per_hour * drained_seconds_ / 3600.0);
}

double Wristband::storage_pct() const {
    const auto total = image_.geometry().cluster_count();
    return 100.0 * static_cast<double>(total - image_.free_clusters()) / total;
}

BandNotification Wristband::storage_notification(double t) const {
    BandNotification n;
    n.kind = NotificationKind::StorageLevel;
    n.t = t;
    n.level_pct = storage_full_ ? 100.0 : storage_pct();
    return n;
}

std::vector<BandNotification> Wristband::handle(const BandCommand& cmd) {
    std::vector<BandNotification> out;
    switch (cmd.kind) {
        case CommandKind::SetParticipantId:
            if (collecting_) throw BandError("cannot change participant id while collecting");
            if (cmd.participant_id.empty() || cmd.participant_id.size() > 32) {
                throw BandError("participant id must be 1..32 bytes");
            }
            participant_id_ = cmd.participant_id;
            break;
        case CommandKind::SetTime:
            if (collecting_) throw BandError("cannot set time while collecting");
            if (!std::isfinite(cmd.time) || cmd.time <= 0.0) throw BandError("invalid time");
            clock_ = cmd.time;
            clock_set_ = true;
            break;
        case CommandKind::StartCollection:
            if (collecting_) throw BandError("already collecting");
            if (participant_id_.empty()) throw BandError("participant id not set");
            if (!clock_set_) throw BandError("clock not set");
            start(out);
            break;
        case CommandKind::StopCollection:
            if (!collecting_) throw BandError("not collecting");
            stop(clock_, out);
            break;
        case CommandKind::EraseStorage:
            if (collecting_) throw BandError("cannot erase storage while collecting");
            image_.reformat();
            imu_.file.reset();
            ppg_.file.reset();
            imu_.next_index = ppg_.next_index = 1;
            storage_full_ = false;
            out.push_back(storage_notification(clock_));
            break;
    }
    return out;
}

void Wristband::start(std::vector<BandNotification>& out) {
    // A session's IMU and PPG files share an index.
    imu_.next_index = ppg_.next_index = std::max(imu_.next_index, ppg_.next_index);
    if (!open_next(imu_, clock_, out) || (cfg_.store_ppg && !open_next(ppg_, clock_, out))) {
        image_.close_all();
        imu_.file.reset();
        ppg_.file.reset();
        return;
    }
    collecting_ = true;
    detector_ = std::make_unique<signal::MvpaDetector>(cfg_.trigger, clock_);
}

void Wristband::stop(double t, std::vector<BandNotification>& out) {
    if (detector_) {
        on_bouts(detector_->advance_to(t), out);
    }
    for (Stream* s : {&imu_, &ppg_}) {
        if (s->file) {
            image_.close(*s->file);
            s->file.reset();
            s->room = 0;
        }
    }
    detector_.reset();
    collecting_ = false;
}

bool Wristband::open_next(Stream& s, double t, std::vector<BandNotification>& out) {
    char name[16];
    std::snprintf(name, sizeof name, "%s%05d.BIN", s.prefix.c_str(), s.next_index);
    const std::uint64_t size = std::uint64_t(s.rate_hz) * s.record_size * static_cast<std::uint64_t>(cfg_.session_file_seconds);
    try {
        image_.create_file(name, size, t);
    } catch (const ftl::AllocationError&) {
        storage_full_ = true;
        out.push_back(storage_notification(t));
        return false;
    }
    ++s.next_index;
    s.file = name;
    s.room = size;
    out.push_back(storage_notification(t));
    return true;
}

bool Wristband::write(Stream& s, std::span<const std::uint8_t> bytes, std::span<const double> times,
                      std::vector<BandNotification>& out) {
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (!s.file) {
            if (!open_next(s, times[pos / s.record_size], out)) {
                return false;
            }
        }
        const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(s.room, bytes.size() - pos));
        image_.append(*s.file, bytes.subspan(pos, take));
        pos += take;
        s.room -= take;
        if (&s == &imu_) imu_bytes_ += take;
        if (s.room == 0) {
            image_.close(*s.file);
            s.file.reset();
        }
    }
    return true;
}

std::vector<BandNotification> Wristband::ingest(std::span<const signal::AccelSample> samples) {
    std::vector<BandNotification> out;
    if (samples.empty()) return out;
    if (!collecting_) {
        dropped_samples_ += samples.size();
        return out;
    }
    signal::validate_stream(samples);
    if (samples.front().t < detector_->session_start() || samples.front().t <= last_sample_t_) {
        throw BandError("sample timestamps must increase and follow the session start");
    }

    Bytes imu_bytes;
    encode_imu(samples, mag_, imu_bytes);
    std::vector<double> imu_times(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) imu_times[i] = samples[i].t;

    std::vector<BandNotification> storage;
    const bool imu_ok = write(imu_, imu_bytes, imu_times, storage);
    bool ppg_ok = true;
    if (cfg_.store_ppg) {
        std::vector<PpgRecord> recs(2 * samples.size());
        std::vector<double> ppg_times(recs.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            for (int k = 0; k < 2; ++k) {
                const double t = samples[i].t + k / static_cast<double>(kPpgRateHz);
                ppg_times[2 * i + k] = t;
                recs[2 * i + k] = ppg_synth_.next(t);
            }
        }
        Bytes ppg_bytes;
        encode_ppg(recs, ppg_bytes);
        ppg_ok = write(ppg_, ppg_bytes, ppg_times, storage);
    }

    // Only samples that reached the IMU file count as collected.
    const std::size_t stored = imu_ok ? samples.size()
                                      : static_cast<std::size_t>(imu_bytes_ / kImuRecordSize - stored_samples_);
    stored_samples_ += stored;
    if (stored > 0) {
        last_sample_t_ = samples[stored - 1].t;
        clock_ = std::max(clock_, last_sample_t_);
        on_bouts(detector_->feed(samples.first(stored)), out);
    }
    dropped_samples_ += samples.size() - stored;
    out.insert(out.end(), storage.begin(), storage.end());
    if (!imu_ok || !ppg_ok) {
        stop(clock_, out);
    }
    return out;
}

std::vector<BandNotification> Wristband::advance_to(double t) {
    std::vector<BandNotification> out;
    if (collecting_ && detector_) {
        on_bouts(detector_->advance_to(t), out);
    }
    clock_ = std::max(clock_, t);
    return out;
}

void Wristband::on_bouts(const std::vector<signal::BoutEvent>& events, std::vector<BandNotification>& out) {
    for (const auto& ev : events) {
        BandNotification b;
        b.kind = NotificationKind::BoutSummary;
        b.t = ev.end_t();
        b.bout_start = ev.bout.start_t;
        b.mean_enmo = ev.bout.mean_enmo;
        b.flag = ev.bout.is_mvpa;
        b.count = ev.bout.sample_count;
        out.push_back(b);
        if (ev.trigger) {
            BandNotification m;
            m.kind = NotificationKind::MvpaEpoch;
            m.t = ev.end_t();
            m.count = ev.epoch.mvpa_bouts;
            out.push_back(m);
        }
    }
}

std::vector<BandNotification> Wristband::tick_battery(double elapsed_s, double t) {
    std::vector<BandNotification> out;
    if (!(elapsed_s >= 0.0)) throw BandError("elapsed time must be non-negative");
    if (charging_) return out;
    drained_seconds_ += elapsed_s;
    if (!below_low_ && battery_pct() < cfg_.low_battery_pct) {
        below_low_ = true;
        BandNotification n;
        n.kind = NotificationKind::BatteryLevel;
        n.t = t;
        n.level_pct = battery_pct();
        out.push_back(n);
    }
    return out;
}

std::vector<BandNotification> Wristband::set_charging(bool charging, double t) {
    std::vector<BandNotification> out;
    if (charging == charging_) return out;
    charging_ = charging;
    if (charging) {
        battery_at_charge_ = 100.0;
        drained_seconds_ = 0.0;
        below_low_ = false;
    }
    BandNotification n;
    n.kind = NotificationKind::ChargingStatus;
    n.t = t;
    n.flag = charging;
    out.push_back(n);
    return out;
}

}  // namespace motionpi::band
