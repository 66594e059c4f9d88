#include "motionpi/phone/outbox.hpp"

#include <algorithm>
#include <unordered_map>

namespace motionpi::phone {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDeadletter = "deadletter.log";

// "<type>-YYYYMMDD-HHMMSS.log" -> (type, "YYYY-MM-DD")
std::optional<std::pair<RecordType, std::string>> parse_log_name(const std::string& name) {
    if (name.size() < 20 || name.substr(name.size() - 4) != ".log") return std::nullopt;
    const auto dash = name.find('-');
    if (dash == std::string::npos) return std::nullopt;
    const auto type = record::parse_record_type(name.substr(0, dash));
    const std::string stamp = name.substr(dash + 1, name.size() - 4 - dash - 1);
    if (!type || stamp.size() != 15 || stamp[8] != '-') return std::nullopt;
    return std::make_pair(*type, stamp.substr(0, 4) + "-" + stamp.substr(4, 2) + "-" + stamp.substr(6, 2));
}

std::vector<std::string> sorted_log_names(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && parse_log_name(name)) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::string record_id_of(const std::string& line, const fs::path& file, std::size_t lineno) {
    const auto doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("record_id") || !doc["record_id"].is_string())
        throw OutboxError(file.string() + ":" + std::to_string(lineno) + ": malformed record line");
    return doc["record_id"];
}

}  // namespace

Outbox::Outbox(fs::path dir, LocalCalendar calendar) : dir_(std::move(dir)), calendar_(calendar) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw OutboxError("cannot create " + dir_.string() + ": " + ec.message());
    reload();
}

void Outbox::reload() {
    std::unordered_set<std::string> done;
    for (const auto& e : fs::directory_iterator(dir_)) {
        const auto& p = e.path();
        if (p.extension() != ".ack") continue;
        std::ifstream in(p);
        for (std::string id; std::getline(in, id);)
            if (!id.empty() && done.insert(id).second) ++acked_;
    }
    if (std::ifstream in(dir_ / kDeadletter); in) {
        std::size_t lineno = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            if (line.empty()) continue;
            if (done.insert(record_id_of(line, dir_ / kDeadletter, lineno)).second) ++quarantined_;
        }
    }
    for (const auto& name : sorted_log_names(dir_)) {
        const auto [type, day] = *parse_log_name(name);
        auto& s = state(type);
        std::ifstream in(dir_ / name);
        std::size_t lineno = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            if (line.empty()) continue;
            auto id = record_id_of(line, dir_ / name, lineno);
            ++records_;
            if (done.count(id)) continue;
            s.queue.push_back({std::move(id), std::move(line), name});
            ++s.unresolved;
        }
        // Names sort by stamp, so the last one per type is the newest.
        s.day = day;
        s.file = name;
    }
}

void Outbox::write_line(std::ofstream& out, const std::string& line, const std::string& what) {
    out << line << '\n';
    out.flush();
    if (!out) throw OutboxError("write to " + what + " failed");
}

void Outbox::append(const DataRecord& rec) {
    const auto line = rec.to_json().dump();
    std::lock_guard lock(mu_);
    auto& s = state(rec.type);
    const auto day = calendar_.date_of(rec.timestamp).to_string();
    if (day != s.day || !s.out.is_open()) {
        if (day != s.day) {
            s.day = day;
            s.file = std::string(record::to_string(rec.type)) + "-" + calendar_.compact_stamp(rec.timestamp) + ".log";
        }
        s.out.close();
        s.out.clear();
        s.out.open(dir_ / s.file, std::ios::app);
        if (!s.out) throw OutboxError("cannot open " + (dir_ / s.file).string());
    }
    write_line(s.out, line, s.file);
    s.queue.push_back({rec.record_id, line, s.file});
    ++s.unresolved;
    ++records_;
}

std::vector<OutboxEntry> Outbox::pending(RecordType type, std::size_t max) const {
    std::lock_guard lock(mu_);
    const auto& s = state(type);
    std::vector<OutboxEntry> out;
    for (const auto& e : s.queue) {
        if (out.size() >= max) break;
        if (!s.resolved.count(e.record_id)) out.push_back(e);
    }
    return out;
}

std::size_t Outbox::pending_count(RecordType type) const {
    std::lock_guard lock(mu_);
    return state(type).unresolved;
}

std::size_t Outbox::pending_total() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& s : types_) n += s.unresolved;
    return n;
}

void Outbox::trim(TypeState& s) {
    while (!s.queue.empty() && s.resolved.count(s.queue.front().record_id)) {
        s.resolved.erase(s.queue.front().record_id);
        s.queue.pop_front();
    }
}

std::size_t Outbox::mark_acked(RecordType type, std::span<const std::string> ids) {
    std::lock_guard lock(mu_);
    auto& s = state(type);
    const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    std::size_t n = 0;
    for (const auto& e : s.queue) {
        if (!wanted.count(e.record_id) || s.resolved.count(e.record_id)) continue;
        auto& ack = ack_files_[e.file];
        if (!ack.is_open()) {
            ack.open(dir_ / (e.file + ".ack"), std::ios::app);
            if (!ack) throw OutboxError("cannot open " + e.file + ".ack");
        }
        write_line(ack, e.record_id, e.file + ".ack");
        s.resolved.insert(e.record_id);
        --s.unresolved;
        ++acked_;
        ++n;
    }
    trim(s);
    return n;
}

std::size_t Outbox::quarantine(RecordType type, std::span<const std::string> ids, const std::string& reason, double t) {
    std::lock_guard lock(mu_);
    auto& s = state(type);
    if (!deadletter_.is_open()) {
        deadletter_.open(dir_ / kDeadletter, std::ios::app);
        if (!deadletter_) throw OutboxError(std::string("cannot open ") + kDeadletter);
    }
    const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    std::size_t n = 0;
    for (const auto& e : s.queue) {
        if (!wanted.count(e.record_id) || s.resolved.count(e.record_id)) continue;
        const record::OrderedJson line{{"record_id", e.record_id},
                                       {"record_type", record::to_string(type)},
                                       {"file", e.file},
                                       {"reason", reason},
                                       {"t", t}};
        write_line(deadletter_, line.dump(), kDeadletter);
        s.resolved.insert(e.record_id);
        --s.unresolved;
        ++quarantined_;
        ++n;
    }
    trim(s);
    return n;
}

std::size_t Outbox::record_count() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t Outbox::acked_count() const {
    std::lock_guard lock(mu_);
    return acked_;
}

std::size_t Outbox::quarantined_count() const {
    std::lock_guard lock(mu_);
    return quarantined_;
}

std::vector<Json> Outbox::load_records(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw OutboxError(dir.string() + " is not a directory");
    std::vector<Json> out;
    for (const auto& name : sorted_log_names(dir)) {
        std::ifstream in(dir / name);
        if (!in) throw OutboxError("cannot read " + (dir / name).string());
        std::size_t lineno = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            if (line.empty()) continue;
            auto doc = Json::parse(line, nullptr, false);
            if (doc.is_discarded() || !doc.is_object())
                throw OutboxError((dir / name).string() + ":" + std::to_string(lineno) + ": malformed record line");
            out.push_back(std::move(doc));
        }
    }
    return out;
}

}  // namespace motionpi::phone
