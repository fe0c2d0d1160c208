#include "repairgraph/memory/store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <utility>

#include "repairgraph/common/digest.hpp"

namespace repairgraph::memory {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_timestamp(std::int64_t epoch_ms) {
    const std::time_t seconds = static_cast<std::time_t>(epoch_ms / 1000);
    const int millis = static_cast<int>(epoch_ms % 1000);
    std::tm tm{};
    ::gmtime_r(&seconds, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
    return buf;
}

std::int64_t parse_timestamp(const std::string& iso8601) {
    std::tm tm{};
    int millis = 0;
    const int fields = std::sscanf(iso8601.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &tm.tm_year,
                                   &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec,
                                   &millis);
    if (fields != 7 || millis < 0 || millis > 999) {
        throw CorruptSnapshotError("bad timestamp: " + iso8601);
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    const std::time_t seconds = ::timegm(&tm);
    if (seconds == static_cast<std::time_t>(-1)) {
        throw CorruptSnapshotError("bad timestamp: " + iso8601);
    }
    return static_cast<std::int64_t>(seconds) * 1000 + millis;
}

json MemoryRecord::to_json() const {
    return json{
        {"id", id},
        {"summary", summary},
        {"error_type", error_type},
        {"embedding", embedding},
        {"occurrence_count", occurrence_count},
        {"created_at", format_timestamp(created_at_ms)},
        {"updated_at", format_timestamp(updated_at_ms)},
        {"source_digest", source_digest},
    };
}

MemoryRecord MemoryRecord::from_json(const json& doc) {
    MemoryRecord record;
    try {
        record.id = doc.at("id").get<std::string>();
        record.summary = doc.at("summary").get<std::string>();
        record.error_type = doc.at("error_type").get<std::string>();
        const auto& emb = doc.at("embedding");
        if (!emb.is_array() || emb.size() != kDimension) {
            throw CorruptSnapshotError("embedding has wrong dimension");
        }
        for (std::size_t i = 0; i < kDimension; ++i) {
            record.embedding[i] = emb.at(i).get<double>();
        }
        record.occurrence_count = doc.at("occurrence_count").get<int>();
        record.created_at_ms = parse_timestamp(doc.at("created_at").get<std::string>());
        record.updated_at_ms = parse_timestamp(doc.at("updated_at").get<std::string>());
        record.source_digest = doc.at("source_digest").get<std::string>();
    } catch (const json::exception& e) {
        throw CorruptSnapshotError(std::string("bad record: ") + e.what());
    }
    if (record.id.empty()) throw CorruptSnapshotError("record id is empty");
    if (record.occurrence_count < 1) throw CorruptSnapshotError("occurrence_count < 1");
    if (record.updated_at_ms < record.created_at_ms) {
        throw CorruptSnapshotError("updated_at precedes created_at");
    }
    return record;
}

std::vector<SearchHit> filter_hits(const std::vector<SearchHit>& hits, double threshold) {
    std::vector<SearchHit> kept;
    for (const SearchHit& hit : hits) {
        if (hit.score >= threshold) kept.push_back(hit);
    }
    return kept;
}

IdGenerator random_uuid_generator() {
    auto engine = std::make_shared<std::mt19937_64>(std::random_device{}());
    return [engine] {
        std::uniform_int_distribution<std::uint64_t> dist;
        const std::uint64_t hi = dist(*engine);
        const std::uint64_t lo = dist(*engine);
        char buf[37];
        std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                      static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                      static_cast<unsigned>((hi & 0x0fff) | 0x4000),
                      static_cast<unsigned>(((lo >> 48) & 0x3fff) | 0x8000),
                      static_cast<unsigned long long>(lo & 0xffffffffffffull));
        return std::string(buf);
    };
}

std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

MemoryStore::MemoryStore() : MemoryStore(random_uuid_generator(), &system_clock_ms) {}

MemoryStore::MemoryStore(IdGenerator ids, ClockFn clock)
    : ids_(std::move(ids)), clock_(std::move(clock)) {}

MemoryStore::MemoryStore(MemoryStore&& other) noexcept {
    std::unique_lock lock(other.mu_);
    records_ = std::move(other.records_);
    ids_ = std::move(other.ids_);
    clock_ = std::move(other.clock_);
}

MemoryStore& MemoryStore::operator=(MemoryStore&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mu_, other.mu_);
        records_ = std::move(other.records_);
        ids_ = std::move(other.ids_);
        clock_ = std::move(other.clock_);
    }
    return *this;
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

std::vector<MemoryRecord> MemoryStore::records() const {
    std::shared_lock lock(mu_);
    std::vector<MemoryRecord> out;
    out.reserve(records_.size());
    for (const auto& [_, record] : records_) out.push_back(record);
    return out;
}

std::optional<MemoryRecord> MemoryStore::get(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

MemoryRecord MemoryStore::create(const std::string& summary, const std::string& error_type,
                                 const std::string& source_digest) {
    if (summary.empty()) throw EmptySummaryError();
    std::unique_lock lock(mu_);
    MemoryRecord record;
    record.id = ids_();
    record.summary = summary;
    record.error_type = error_type;
    record.embedding = embed(summary);
    record.occurrence_count = 1;
    record.created_at_ms = clock_();
    record.updated_at_ms = record.created_at_ms;
    record.source_digest = source_digest;
    records_[record.id] = record;
    return record;
}

MemoryRecord MemoryStore::update(const std::string& id, const std::string& new_summary) {
    if (new_summary.empty()) throw EmptySummaryError();
    std::unique_lock lock(mu_);
    const auto it = records_.find(id);
    if (it == records_.end()) throw UnknownRecordError(id);
    MemoryRecord& record = it->second;
    record.summary = new_summary;
    record.embedding = embed(new_summary);
    record.occurrence_count += 1;
    record.updated_at_ms = std::max({clock_(), record.updated_at_ms, record.created_at_ms});
    return record;
}

std::vector<SearchHit> MemoryStore::search(const std::string& query_text, int k) const {
    if (k < 1) throw MemoryError("search k must be >= 1");
    const EmbeddingVector query = embed(query_text);
    std::shared_lock lock(mu_);
    std::vector<SearchHit> hits;
    hits.reserve(records_.size());
    for (const auto& [_, record] : records_) {
        hits.push_back({record, cosine(query, record.embedding)});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.record.id < b.record.id;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

void MemoryStore::persist(const fs::path& path) const {
    json records_doc = json::array();
    {
        std::shared_lock lock(mu_);
        for (const auto& [_, record] : records_) records_doc.push_back(record.to_json());
    }
    json snapshot{
        {"version", 1},
        {"dimension", kDimension},
        {"digest", digest::fnv1a64_hex(records_doc.dump())},
        {"records", records_doc},
    };

    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailureError("cannot write snapshot: " + tmp.string());
        out << snapshot.dump(2) << '\n';
        if (!out) throw IoFailureError("write failure on snapshot: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoFailureError("cannot move snapshot into place: " + ec.message());
}

MemoryStore MemoryStore::load(const fs::path& path) {
    return load(path, random_uuid_generator(), &system_clock_ms);
}

MemoryStore MemoryStore::load(const fs::path& path, IdGenerator ids, ClockFn clock) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot read snapshot: " + path.string());
    json snapshot;
    try {
        in >> snapshot;
    } catch (const json::exception& e) {
        throw CorruptSnapshotError(std::string("snapshot parse failure: ") + e.what());
    }
    if (!snapshot.is_object() || snapshot.value("version", 0) != 1) {
        throw CorruptSnapshotError("unsupported snapshot version");
    }
    if (snapshot.value("dimension", 0u) != kDimension) {
        throw CorruptSnapshotError("snapshot dimension mismatch");
    }
    if (!snapshot.contains("records") || !snapshot.at("records").is_array()) {
        throw CorruptSnapshotError("snapshot has no records array");
    }
    const std::string expected = snapshot.value("digest", "");
    const std::string actual = digest::fnv1a64_hex(snapshot.at("records").dump());
    if (expected != actual) throw CorruptSnapshotError("snapshot digest mismatch");

    MemoryStore store(std::move(ids), std::move(clock));
    for (const auto& doc : snapshot.at("records")) {
        MemoryRecord record = MemoryRecord::from_json(doc);
        if (store.records_.count(record.id) != 0) {
            throw CorruptSnapshotError("duplicate record id: " + record.id);
        }
        store.records_[record.id] = std::move(record);
    }
    return store;
}

}  // namespace repairgraph::memory
