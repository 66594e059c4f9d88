#include "motionpi/backend/store.hpp"

#include <algorithm>
#include <stdexcept>

namespace motionpi::backend {

Json StoredRecord::to_json() const {
    Json j = record;
    j["received_t"] = received_t;
    j["device_id"] = device_id;
    return j;
}

namespace {

RecordType type_of(const Json& record) {
    const auto t = record::parse_record_type(record.at("record_type").get<std::string>());
    if (!t) throw std::invalid_argument("stored record has an unknown type");
    return *t;
}

bool before(const StoredRecord& a, const StoredRecord& b) {
    const double ta = a.timestamp();
    const double tb = b.timestamp();
    if (ta != tb) return ta < tb;
    return a.record_id() < b.record_id();
}

}  // namespace

MemoryStore::MemoryStore(const std::filesystem::path& journal) {
    if (std::filesystem::exists(journal)) {
        std::ifstream in(journal);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty()) continue;
            const auto j = Json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("op")) {
                throw std::runtime_error(journal.string() + ":" + std::to_string(n) + ": corrupt journal line");
            }
            if (j["op"] == "put") {
                apply_upsert({j.at("record"), j.at("received_t").get<double>(), j.at("device_id").get<std::string>()});
            } else if (j["op"] == "del") {
                const auto id = j.at("record_id").get<std::string>();
                if (auto it = index_.find(id); it != index_.end()) {
                    collections_[it->second].erase(id);
                    index_.erase(it);
                }
            }
        }
    }
    journal_.emplace(journal, std::ios::app);
    if (!*journal_) throw std::runtime_error("cannot open store journal " + journal.string());
}

void MemoryStore::journal(const Json& line) {
    if (!journal_) return;
    *journal_ << line.dump() << '\n';
    journal_->flush();
    if (!*journal_) throw std::runtime_error("store journal write failed");
}

UpsertResult MemoryStore::apply_upsert(StoredRecord rec) {
    const std::string id = rec.record_id();
    const RecordType type = type_of(rec.record);
    if (const auto it = index_.find(id); it != index_.end()) {
        const auto& existing = collections_[it->second].at(id);
        return existing.record == rec.record ? UpsertResult::Duplicate : UpsertResult::Conflict;
    }
    index_.emplace(id, type);
    collections_[type].emplace(id, std::move(rec));
    return UpsertResult::Inserted;
}

UpsertResult MemoryStore::upsert(StoredRecord rec) {
    std::lock_guard lock(mu_);
    Json line;
    if (journal_) line = Json{{"op", "put"}, {"record", rec.record}, {"received_t", rec.received_t}, {"device_id", rec.device_id}};
    const auto result = apply_upsert(std::move(rec));
    if (result == UpsertResult::Inserted) journal(line);
    return result;
}

std::vector<StoredRecord> MemoryStore::query(const RecordFilter& f) const {
    std::lock_guard lock(mu_);
    std::vector<StoredRecord> out;
    for (const auto& [type, coll] : collections_) {
        if (f.type && *f.type != type) continue;
        for (const auto& [id, rec] : coll) {
            if (f.participant_id && rec.record.at("participant_id") != *f.participant_id) continue;
            const double t = rec.timestamp();
            if (f.from && t < *f.from) continue;
            if (f.to && !(t < *f.to)) continue;
            out.push_back(rec);
        }
    }
    std::sort(out.begin(), out.end(), before);
    return out;
}

std::size_t MemoryStore::count() const {
    std::lock_guard lock(mu_);
    return index_.size();
}

std::map<std::string, std::size_t> MemoryStore::count_by_type() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::size_t> out;
    for (const auto& [type, coll] : collections_) out[record::to_string(type)] = coll.size();
    return out;
}

bool MemoryStore::remove(const std::string& record_id) {
    std::lock_guard lock(mu_);
    const auto it = index_.find(record_id);
    if (it == index_.end()) return false;
    collections_[it->second].erase(record_id);
    index_.erase(it);
    journal(Json{{"op", "del"}, {"record_id", record_id}});
    return true;
}

void MemoryStore::dump(std::ostream& os) const {
    for (const auto& rec : query({})) os << rec.to_json().dump() << '\n';
}

}  // namespace motionpi::backend
