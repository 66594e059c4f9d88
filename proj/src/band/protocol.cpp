#include "motionpi/band/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace motionpi::band {

namespace {

constexpr std::size_t kMaxParticipantId = 32;

class Writer {
public:
    explicit Writer(std::uint8_t tag) { out_.push_back(tag); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { uint(v, 2); }
    void u64(std::uint64_t v) { uint(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    Bytes take() { return std::move(out_); }

private:
    void uint(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
    std::uint64_t u64() { return uint(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void finish() const {
        if (pos_ != in_.size()) throw ProtocolError("trailing bytes in message");
    }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw ProtocolError("message truncated");
    }
    std::uint64_t uint(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint64_t to_ms(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ProtocolError("time must be a finite non-negative value");
    return static_cast<std::uint64_t>(std::llround(t * 1000.0));
}

std::uint16_t to_centi(double pct) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(pct, 0.0, 100.0) * 100.0));
}

}  // namespace

const char* to_string(CommandKind k) {
    switch (k) {
        case CommandKind::StartCollection: return "StartCollection";
        case CommandKind::StopCollection: return "StopCollection";
        case CommandKind::SetParticipantId: return "SetParticipantId";
        case CommandKind::SetTime: return "SetTime";
        case CommandKind::EraseStorage: return "EraseStorage";
    }
    return "?";
}

const char* to_string(NotificationKind k) {
    switch (k) {
        case NotificationKind::MvpaEpoch: return "MvpaEpoch";
        case NotificationKind::BatteryLevel: return "BatteryLevel";
        case NotificationKind::StorageLevel: return "StorageLevel";
        case NotificationKind::ChargingStatus: return "ChargingStatus";
        case NotificationKind::BoutSummary: return "BoutSummary";
    }
    return "?";
}

Bytes encode(const BandCommand& cmd) {
    Writer w(static_cast<std::uint8_t>(cmd.kind));
    switch (cmd.kind) {
        case CommandKind::SetParticipantId:
            if (cmd.participant_id.empty() || cmd.participant_id.size() > kMaxParticipantId) {
                throw ProtocolError("participant id must be 1..32 bytes");
            }
            w.u8(static_cast<std::uint8_t>(cmd.participant_id.size()));
            w.bytes(cmd.participant_id);
            break;
        case CommandKind::SetTime:
            w.u64(to_ms(cmd.time));
            break;
        default:
            break;
    }
    return w.take();
}

BandCommand decode_command(std::span<const std::uint8_t> wire) {
    Reader r(wire);
    BandCommand cmd;
    const auto tag = r.u8();
    switch (tag) {
        case 0x01:
        case 0x02:
        case 0x05:
            cmd.kind = static_cast<CommandKind>(tag);
            break;
        case 0x03: {
            cmd.kind = CommandKind::SetParticipantId;
            const auto n = r.u8();
            if (n == 0 || n > kMaxParticipantId) throw ProtocolError("participant id must be 1..32 bytes");
            cmd.participant_id = r.str(n);
            break;
        }
        case 0x04:
            cmd.kind = CommandKind::SetTime;
            cmd.time = static_cast<double>(r.u64()) / 1000.0;
            break;
        default:
            throw ProtocolError("unknown command tag " + std::to_string(tag));
    }
    r.finish();
    return cmd;
}

Bytes encode(const BandNotification& n) {
    Writer w(static_cast<std::uint8_t>(n.kind));
    w.u64(to_ms(n.t));
    switch (n.kind) {
        case NotificationKind::MvpaEpoch:
            w.u16(static_cast<std::uint16_t>(n.count));
            break;
        case NotificationKind::BatteryLevel:
        case NotificationKind::StorageLevel:
            w.u16(to_centi(n.level_pct));
            break;
        case NotificationKind::ChargingStatus:
            w.u8(n.flag ? 1 : 0);
            break;
        case NotificationKind::BoutSummary:
            w.f64(n.mean_enmo);
            w.u8(n.flag ? 1 : 0);
            w.u16(static_cast<std::uint16_t>(n.count));
            break;
    }
    return w.take();
}

BandNotification decode_notification(std::span<const std::uint8_t> wire, int bout_seconds) {
    Reader r(wire);
    BandNotification n;
    const auto tag = r.u8();
    if (tag < 0x81 || tag > 0x85) throw ProtocolError("unknown notification tag " + std::to_string(tag));
    n.kind = static_cast<NotificationKind>(tag);
    n.t = static_cast<double>(r.u64()) / 1000.0;
    switch (n.kind) {
        case NotificationKind::MvpaEpoch:
            n.count = r.u16();
            break;
        case NotificationKind::BatteryLevel:
        case NotificationKind::StorageLevel:
            n.level_pct = r.u16() / 100.0;
            break;
        case NotificationKind::ChargingStatus:
            n.flag = r.u8() != 0;
            break;
        case NotificationKind::BoutSummary:
            n.mean_enmo = r.f64();
            n.flag = r.u8() != 0;
            n.count = r.u16();
            n.bout_start = n.t - bout_seconds;
            break;
    }
    r.finish();
    return n;
}

}  // namespace motionpi::band
