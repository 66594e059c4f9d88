#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "motionpi/record/record.hpp"

namespace motionpi::backend {

using record::Json;
using record::RecordType;

struct StoredRecord {
    Json record;  // the validated DataRecord document
    double received_t = 0.0;
    std::string device_id;

    [[nodiscard]] const std::string& record_id() const { return record.at("record_id").get_ref<const std::string&>(); }
    [[nodiscard]] double timestamp() const { return record.at("timestamp").get<double>(); }
    /// Record fields plus received_t and device_id.
    [[nodiscard]] Json to_json() const;
};

enum class UpsertResult { Inserted, Duplicate, Conflict };

struct RecordFilter {
    std::optional<RecordType> type;
    std::optional<std::string> participant_id;
    std::optional<double> from;  // inclusive
    std::optional<double> to;    // exclusive
};

/// Storage seam for the ingestion service. Collections are keyed by record
/// type; record_id is unique across collections. A production deployment
/// would put a document database behind this interface.
class DocumentStore {
public:
    virtual ~DocumentStore() = default;
    /// Insert-if-absent. Re-sending identical content is a Duplicate;
    /// different content under an existing id is a Conflict and changes
    /// nothing.
    virtual UpsertResult upsert(StoredRecord rec) = 0;
    /// Sorted by (timestamp, record_id).
    [[nodiscard]] virtual std::vector<StoredRecord> query(const RecordFilter& filter) const = 0;
    [[nodiscard]] virtual std::size_t count() const = 0;
    [[nodiscard]] virtual std::map<std::string, std::size_t> count_by_type() const = 0;
    virtual bool remove(const std::string& record_id) = 0;
};

/// In-memory collections behind one mutex, with an optional append-only
/// JSON-lines journal replayed at construction.
class MemoryStore final : public DocumentStore {
public:
    MemoryStore() = default;
    explicit MemoryStore(const std::filesystem::path& journal);

    UpsertResult upsert(StoredRecord rec) override;
    [[nodiscard]] std::vector<StoredRecord> query(const RecordFilter& filter) const override;
    [[nodiscard]] std::size_t count() const override;
    [[nodiscard]] std::map<std::string, std::size_t> count_by_type() const override;
    bool remove(const std::string& record_id) override;

    /// Every record as one JSON line, sorted by (timestamp, record_id).
    void dump(std::ostream& os) const;

private:
    UpsertResult apply_upsert(StoredRecord rec);
    void journal(const Json& line);

    mutable std::mutex mu_;
    std::map<RecordType, std::unordered_map<std::string, StoredRecord>> collections_;
    std::unordered_map<std::string, RecordType> index_;
    std::optional<std::ofstream> journal_;
};

}  // namespace motionpi::backend
