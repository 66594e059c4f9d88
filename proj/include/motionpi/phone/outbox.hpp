#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "motionpi/common/civil_time.hpp"
#include "motionpi/record/record.hpp"

// On-phone record store. Layout of the outbox directory:
//
//   <type>-<YYYYMMDD-HHMMSS>.log   one record per line in envelope field
//                                  order; one file per type per local day,
//                                  stamped with the local time of its first
//                                  record
//   <same name>.ack                record_ids acknowledged by the server,
//                                  one per line
//   deadletter.log                 {"record_id", "record_type", "file",
//                                  "reason", "t"} per quarantined record
//
// Record files are append-only. A record counts as uploaded once its id is
// in an .ack file and as quarantined once it is in deadletter.log.
namespace motionpi::phone {

using record::DataRecord;
using record::Json;
using record::RecordType;

class OutboxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutboxEntry {
    std::string record_id;
    std::string line;  // serialized record, no newline
    std::string file;  // file name within the outbox
};

class Outbox {
public:
    /// Creates the directory if needed and reloads any existing state.
    Outbox(std::filesystem::path dir, LocalCalendar calendar);

    /// Appends and flushes. Throws OutboxError if the write fails.
    void append(const DataRecord& rec);

    /// Oldest unresolved records of a type, in append order.
    [[nodiscard]] std::vector<OutboxEntry> pending(RecordType type, std::size_t max) const;
    [[nodiscard]] std::size_t pending_count(RecordType type) const;
    [[nodiscard]] std::size_t pending_total() const;

    /// Ids not pending in this type are ignored. Returns how many were newly marked.
    std::size_t mark_acked(RecordType type, std::span<const std::string> ids);
    std::size_t quarantine(RecordType type, std::span<const std::string> ids, const std::string& reason, double t);

    [[nodiscard]] std::size_t record_count() const;
    [[nodiscard]] std::size_t acked_count() const;
    [[nodiscard]] std::size_t quarantined_count() const;
    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

    /// Every record in every .log file of an outbox directory, in file name
    /// then line order. Throws OutboxError on unreadable or malformed lines.
    [[nodiscard]] static std::vector<Json> load_records(const std::filesystem::path& dir);

private:
    struct TypeState {
        std::deque<OutboxEntry> queue;
        std::unordered_set<std::string> resolved;
        std::size_t unresolved = 0;
        std::string day;  // local YYYY-MM-DD of the open file
        std::string file;
        std::ofstream out;
    };

    void reload();
    void write_line(std::ofstream& out, const std::string& line, const std::string& what);
    void trim(TypeState& s);
    TypeState& state(RecordType type) { return types_[static_cast<std::size_t>(type)]; }
    const TypeState& state(RecordType type) const { return types_[static_cast<std::size_t>(type)]; }

    std::filesystem::path dir_;
    LocalCalendar calendar_;
    mutable std::mutex mu_;
    std::array<TypeState, record::kAllTypes.size()> types_;
    std::map<std::string, std::ofstream> ack_files_;
    std::ofstream deadletter_;
    std::size_t records_ = 0;
    std::size_t acked_ = 0;
    std::size_t quarantined_ = 0;
};

}  // namespace motionpi::phone
