#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "repairgraph/memory/embedding.hpp"

namespace repairgraph::memory {

class MemoryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class EmptySummaryError : public MemoryError {
  public:
    EmptySummaryError() : MemoryError("record summary is empty") {}
};
class UnknownRecordError : public MemoryError {
  public:
    explicit UnknownRecordError(const std::string& id) : MemoryError("unknown record: " + id) {}
};
class IoFailureError : public MemoryError {
  public:
    using MemoryError::MemoryError;
};
class CorruptSnapshotError : public MemoryError {
  public:
    using MemoryError::MemoryError;
};

std::string format_timestamp(std::int64_t epoch_ms);       // ISO 8601 UTC
std::int64_t parse_timestamp(const std::string& iso8601);  // throws CorruptSnapshotError

struct MemoryRecord {
    std::string id;
    std::string summary;
    std::string error_type;
    EmbeddingVector embedding{};
    int occurrence_count = 1;
    std::int64_t created_at_ms = 0;
    std::int64_t updated_at_ms = 0;
    std::string source_digest;

    nlohmann::json to_json() const;
    static MemoryRecord from_json(const nlohmann::json& doc);
    friend bool operator==(const MemoryRecord&, const MemoryRecord&) = default;
};

struct SearchHit {
    MemoryRecord record;
    double score = 0.0;
};

// Subsequence with score >= threshold; input order preserved.
std::vector<SearchHit> filter_hits(const std::vector<SearchHit>& hits, double threshold);

using IdGenerator = std::function<std::string()>;
using ClockFn = std::function<std::int64_t()>;  // epoch milliseconds

IdGenerator random_uuid_generator();
std::int64_t system_clock_ms();

// In-process vector store over bug summaries. Reads share; writes and
// persistence serialize. Id and clock sources are injectable so runs can be
// made fully reproducible.
class MemoryStore {
public:
    MemoryStore();
    MemoryStore(IdGenerator ids, ClockFn clock);
    MemoryStore(MemoryStore&& other) noexcept;
    MemoryStore& operator=(MemoryStore&& other) noexcept;

    std::size_t size() const;
    std::vector<MemoryRecord> records() const;  // sorted by id
    std::optional<MemoryRecord> get(const std::string& id) const;

    MemoryRecord create(const std::string& summary, const std::string& error_type,
                        const std::string& source_digest);
    MemoryRecord update(const std::string& id, const std::string& new_summary);

    // Top min(k, size) by cosine similarity, score descending then id
    // ascending. Exhaustive scan.
    std::vector<SearchHit> search(const std::string& query_text, int k) const;

    void persist(const std::filesystem::path& path) const;
    static MemoryStore load(const std::filesystem::path& path);
    static MemoryStore load(const std::filesystem::path& path, IdGenerator ids, ClockFn clock);

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, MemoryRecord> records_;
    IdGenerator ids_;
    ClockFn clock_;
};

}  // namespace repairgraph::memory
