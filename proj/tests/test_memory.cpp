#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "repairgraph/common/digest.hpp"
#include "repairgraph/memory/embedding.hpp"
#include "repairgraph/memory/store.hpp"

using namespace repairgraph::memory;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reference embedder, written from the token rules alone: lowercase word
// runs and trigrams over space-collapsed text, signed FNV-1a buckets,
// unit norm. Deliberately shares no code with the library version.
std::array<double, 256> oracle_embed(const std::string& raw) {
    const auto fnv = [](const std::string& s) {
        unsigned long long h = 14695981039346656037ull;
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return h;
    };
    const auto is_word = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    };

    std::string low;
    for (const char c : raw) {
        low.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c);
    }

    std::vector<std::string> tokens;
    std::string cur;
    for (const char c : low) {
        if (is_word(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            tokens.push_back("w:" + cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back("w:" + cur);

    std::string replaced = low;
    for (char& c : replaced) {
        if (!is_word(c)) c = ' ';
    }
    std::istringstream iss(replaced);
    std::string norm;
    std::string piece;
    while (iss >> piece) {
        if (!norm.empty()) norm.push_back(' ');
        norm += piece;
    }
    for (std::size_t i = 0; i + 3 <= norm.size(); ++i) tokens.push_back("t:" + norm.substr(i, 3));

    std::array<double, 256> acc{};
    for (const std::string& token : tokens) {
        const auto h = fnv(token);
        acc[static_cast<std::size_t>((h >> 1) % 256)] += (h & 1) != 0 ? 1.0 : -1.0;
    }
    double sum = 0.0;
    for (const double v : acc) sum += v * v;
    if (sum == 0.0) return acc;
    const double n = std::sqrt(sum);
    for (double& v : acc) v /= n;
    return acc;
}

double oracle_cosine(const std::array<double, 256>& a, const std::array<double, 256>& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

IdGenerator counting_ids(const std::string& prefix) {
    auto counter = std::make_shared<int>(0);
    return [prefix, counter] {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d", (*counter)++);
        return prefix + buf;
    };
}

ClockFn ticking_clock(std::int64_t start, std::int64_t step = 1000) {
    auto now = std::make_shared<std::int64_t>(start);
    return [now, step] {
        const std::int64_t value = *now;
        *now += step;
        return value;
    };
}

MemoryStore test_store() { return MemoryStore(counting_ids("rec-"), ticking_clock(1700000000000)); }

std::string random_text(std::mt19937& rng) {
    static const std::vector<std::string> words = {
        "ZeroDivisionError", "IndexError",  "TypeError", "division", "by",        "zero",
        "list",              "index",       "out",       "of",       "range",     "function",
        "divide_two_numbers", "triangle",   "area",      "unsupported", "operand", "NoneType",
        "int",               "str",         "line",      "2",        "in",        "module",
        "caf\xc3\xa9",       "\xe2\x98\x95",
    };
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> len(0, 12);
    std::uniform_int_distribution<int> sep(0, 4);
    std::string text;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (!text.empty()) {
            switch (sep(rng)) {
                case 0: text += " "; break;
                case 1: text += ": "; break;
                case 2: text += ", "; break;
                case 3: text += "  "; break;
                default: text += "\n"; break;
            }
        }
        text += words[pick(rng)];
    }
    return text;
}

fs::path fresh_tmp_dir(const std::string& tag) {
    fs::path dir =
        fs::temp_directory_path() / ("rg_mem_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("embed matches the reference embedder bit for bit") {
    std::vector<std::string> corpus = {
        "",
        " ",
        "a",
        "ab",
        "abc",
        "ZeroDivisionError: division by zero",
        "The function divide_two_numbers raised ZeroDivisionError because b was 0.",
        "IndexError list index out of range",
        "MiXeD CaSe TeXt",
        "under_score_words and numbers 123",
        "punctuation!!! everywhere??? ...",
        "caf\xc3\xa9 \xe2\x98\x95 unicode",
        "\n\t  whitespace   soup \r\n",
    };
    std::mt19937 rng(20260814u);
    for (int i = 0; i < 200; ++i) corpus.push_back(random_text(rng));

    for (const std::string& text : corpus) {
        CAPTURE(text);
        const EmbeddingVector got = embed(text);
        const std::array<double, 256> want = oracle_embed(text);
        bool equal = true;
        for (std::size_t i = 0; i < 256; ++i) {
            if (got[i] != want[i]) equal = false;
        }
        CHECK(equal);
    }
}

TEST_CASE("embed basics") {
    const EmbeddingVector zero = embed("");
    CHECK(l2_norm(zero) == 0.0);
    CHECK(l2_norm(embed("!!! ??? ...")) == 0.0);  // punctuation only: no tokens

    const EmbeddingVector v = embed("ZeroDivisionError: division by zero");
    CHECK(std::abs(l2_norm(v) - 1.0) <= 1e-6);
    CHECK(std::abs(cosine(v, v) - 1.0) <= 1e-9);

    CHECK(embed("some text") == embed("some text"));
    CHECK(embed("ABC def") == embed("abc DEF"));
    CHECK(cosine(zero, v) == 0.0);
}

TEST_CASE("similar bug texts score above unrelated ones") {
    const EmbeddingVector query = embed("ZeroDivisionError division by zero");
    const double close = cosine(query, embed("ZeroDivisionError: division by zero in divide"));
    const double far = cosine(query, embed("IndexError list index out of range"));
    CHECK(close > far);
    CHECK(close > 0.5);
    CHECK(far < 0.5);
}

TEST_CASE("embed unit norm holds across random inputs") {
    std::mt19937 rng(99331u);
    for (int i = 0; i < 300; ++i) {
        const std::string text = random_text(rng);
        const EmbeddingVector v = embed(text);
        const double norm = l2_norm(v);
        CAPTURE(text);
        CHECK((norm == 0.0 || std::abs(norm - 1.0) <= 1e-6));
    }
}

TEST_CASE("create adds records with fresh ids and full metadata") {
    MemoryStore store = test_store();
    CHECK(store.size() == 0);

    const MemoryRecord a = store.create("divide fails on zero divisor", "ZeroDivisionError", "d1");
    CHECK(store.size() == 1);
    CHECK(a.id == "rec-0000");
    CHECK(a.occurrence_count == 1);
    CHECK(a.created_at_ms == 1700000000000);
    CHECK(a.updated_at_ms == a.created_at_ms);
    CHECK(a.error_type == "ZeroDivisionError");
    CHECK(a.source_digest == "d1");
    CHECK(a.embedding == embed(a.summary));

    const MemoryRecord b = store.create("divide fails on zero divisor", "ZeroDivisionError", "d2");
    CHECK(store.size() == 2);
    CHECK(b.id != a.id);
    CHECK(b.embedding == a.embedding);

    CHECK_THROWS_AS(store.create("", "X", "d"), EmptySummaryError);
    CHECK(store.size() == 2);
}

TEST_CASE("update rewrites the summary in place") {
    MemoryStore store = test_store();
    const MemoryRecord born = store.create("original summary text", "TypeError", "d1");

    const MemoryRecord updated = store.update(born.id, "merged summary with new details");
    CHECK(store.size() == 1);
    CHECK(updated.id == born.id);
    CHECK(updated.occurrence_count == 2);
    CHECK(updated.created_at_ms == born.created_at_ms);
    CHECK(updated.updated_at_ms > born.updated_at_ms);
    CHECK(updated.embedding == embed("merged summary with new details"));
    CHECK(store.get(born.id)->summary == "merged summary with new details");

    CHECK_THROWS_AS(store.update("no-such-id", "text"), UnknownRecordError);
    CHECK_THROWS_AS(store.update(born.id, ""), EmptySummaryError);
    CHECK(store.get(born.id)->occurrence_count == 2);

    const auto hits = store.search("merged summary with new details", 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record.id == born.id);
    CHECK(std::abs(hits[0].score - 1.0) <= 1e-6);
}

TEST_CASE("search basics") {
    MemoryStore store = test_store();
    CHECK(store.search("anything", 5).empty());
    CHECK_THROWS_AS(store.search("anything", 0), MemoryError);

    const MemoryRecord r = store.create("ZeroDivisionError in divide_two_numbers", "ZeroDivisionError", "d");
    const auto hits = store.search(r.summary, 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record == r);
    CHECK(std::abs(hits[0].score - 1.0) <= 1e-6);

    store.create("IndexError list index out of range in get", "IndexError", "d");
    const auto ranked = store.search("ZeroDivisionError division by zero", 5);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].record.error_type == "ZeroDivisionError");
    CHECK(ranked[0].score > ranked[1].score);

    const auto top1 = store.search("ZeroDivisionError division by zero", 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].record.id == ranked[0].record.id);
}

TEST_CASE("search agrees with a brute-force oracle on random stores") {
    std::mt19937 rng(777u);
    std::uniform_int_distribution<int> size_dist(0, 300);
    std::uniform_int_distribution<int> k_dist(1, 20);

    for (int trial = 0; trial < 25; ++trial) {
        const int n = trial == 0 ? 1000 : size_dist(rng);
        const int k = k_dist(rng);
        MemoryStore store = test_store();
        std::vector<MemoryRecord> inserted;
        for (int i = 0; i < n; ++i) {
            std::string summary = random_text(rng);
            if (summary.empty()) summary = "fallback summary";
            inserted.push_back(store.create(summary, "E", "d"));
        }
        const std::string query = random_text(rng);

        const auto got = store.search(query, k);

        const std::array<double, 256> q = oracle_embed(query);
        struct Scored {
            std::string id;
            double score;
        };
        std::vector<Scored> want;
        for (const MemoryRecord& record : inserted) {
            want.push_back({record.id, oracle_cosine(q, oracle_embed(record.summary))});
        }
        std::sort(want.begin(), want.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        if (want.size() > static_cast<std::size_t>(k)) want.resize(static_cast<std::size_t>(k));

        CAPTURE(trial);
        CAPTURE(n);
        CAPTURE(k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].record.id == want[i].id);
            CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-9));
        }
    }
}

TEST_CASE("filter_hits keeps the sorted prefix meeting the threshold") {
    const auto hit = [](const char* id, double score) {
        SearchHit h;
        h.record.id = id;
        h.score = score;
        return h;
    };
    const std::vector<SearchHit> hits = {hit("a", 0.9), hit("b", 0.4), hit("c", 0.1)};

    const auto kept = filter_hits(hits, 0.35);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].record.id == "a");
    CHECK(kept[1].record.id == "b");

    CHECK(filter_hits(hits, 1.5).empty());
    CHECK(filter_hits(hits, -2.0).size() == 3);
    CHECK(filter_hits({}, 0.0).empty());

    // boundary: score exactly at the threshold stays
    CHECK(filter_hits({hit("x", 0.35)}, 0.35).size() == 1);
}

TEST_CASE("size changes only through create") {
    MemoryStore store = test_store();
    store.create("first summary", "A", "d");
    store.create("second summary", "B", "d");
    const std::size_t before = store.size();

    store.search("first", 5);
    filter_hits(store.search("second", 5), 0.2);
    store.update(store.records()[0].id, "rewritten first summary");
    CHECK(store.size() == before);

    store.create("third summary", "C", "d");
    CHECK(store.size() == before + 1);
}

TEST_CASE("timestamps format and parse as UTC ISO 8601") {
    CHECK(format_timestamp(0) == "1970-01-01T00:00:00.000Z");
    CHECK(format_timestamp(1700000000123) == "2023-11-14T22:13:20.123Z");
    CHECK(parse_timestamp("2023-11-14T22:13:20.123Z") == 1700000000123);

    std::mt19937_64 rng(4242u);
    std::uniform_int_distribution<std::int64_t> dist(0, 4102444800000ll);  // through 2100
    for (int i = 0; i < 200; ++i) {
        const std::int64_t ms = dist(rng);
        CHECK(parse_timestamp(format_timestamp(ms)) == ms);
    }
    CHECK_THROWS_AS(parse_timestamp("garbage"), CorruptSnapshotError);
    CHECK_THROWS_AS(parse_timestamp("2023-11-14"), CorruptSnapshotError);
}

TEST_CASE("snapshot round-trip is lossless") {
    const fs::path dir = fresh_tmp_dir("roundtrip");
    const fs::path path = dir / "memory.json";

    MemoryStore store = test_store();
    store.create("ZeroDivisionError in divide_two_numbers when b is zero", "ZeroDivisionError",
                 "digest-1");
    store.create("IndexError in get when index exceeds list length", "IndexError", "digest-2");
    store.update(store.records()[0].id, "updated: divide_two_numbers must guard zero divisors");

    store.persist(path);
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));

    const MemoryStore loaded = MemoryStore::load(path);
    CHECK(loaded.records() == store.records());

    // random stores round-trip too
    std::mt19937 rng(31337u);
    for (int trial = 0; trial < 10; ++trial) {
        MemoryStore original(counting_ids("t-"), ticking_clock(1600000000000 + trial));
        std::uniform_int_distribution<int> n_dist(0, 40);
        const int n = n_dist(rng);
        for (int i = 0; i < n; ++i) {
            std::string summary = random_text(rng);
            if (summary.empty()) summary = "x";
            original.create(summary, "E" + std::to_string(i % 3), "d" + std::to_string(i));
        }
        const fs::path p = dir / ("trial_" + std::to_string(trial) + ".json");
        original.persist(p);
        CHECK(MemoryStore::load(p).records() == original.records());
    }
    fs::remove_all(dir);
}

TEST_CASE("persisting an empty store yields a loadable empty snapshot") {
    const fs::path dir = fresh_tmp_dir("empty");
    const fs::path path = dir / "memory.json";
    test_store().persist(path);
    CHECK(MemoryStore::load(path).size() == 0);
    fs::remove_all(dir);
}

TEST_CASE("load rejects missing, truncated, and tampered snapshots") {
    const fs::path dir = fresh_tmp_dir("corrupt");
    const fs::path path = dir / "memory.json";

    CHECK_THROWS_AS(MemoryStore::load(dir / "absent.json"), IoFailureError);

    MemoryStore store = test_store();
    store.create("some bug summary for corruption tests", "ValueError", "d");
    store.persist(path);

    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string full = buffer.str();
    in.close();

    std::ofstream(dir / "truncated.json") << full.substr(0, full.size() / 2);
    CHECK_THROWS_AS(MemoryStore::load(dir / "truncated.json"), CorruptSnapshotError);

    json tampered = json::parse(full);
    tampered["records"][0]["summary"] = "silently edited";
    std::ofstream(dir / "tampered.json") << tampered.dump(2);
    CHECK_THROWS_AS(MemoryStore::load(dir / "tampered.json"), CorruptSnapshotError);

    json wrong_version = json::parse(full);
    wrong_version["version"] = 2;
    std::ofstream(dir / "version.json") << wrong_version.dump(2);
    CHECK_THROWS_AS(MemoryStore::load(dir / "version.json"), CorruptSnapshotError);

    json wrong_dim = json::parse(full);
    wrong_dim["dimension"] = 128;
    std::ofstream(dir / "dim.json") << wrong_dim.dump(2);
    CHECK_THROWS_AS(MemoryStore::load(dir / "dim.json"), CorruptSnapshotError);

    fs::remove_all(dir);
}

TEST_CASE("load validates record-level invariants") {
    const fs::path dir = fresh_tmp_dir("invalid_records");
    const auto write_snapshot = [&](const std::string& name, json records) {
        const json snapshot{
            {"version", 1},
            {"dimension", 256},
            {"digest", repairgraph::digest::fnv1a64_hex(records.dump())},
            {"records", records},
        };
        std::ofstream(dir / name) << snapshot.dump(2);
        return dir / name;
    };

    MemoryStore store = test_store();
    store.create("valid record for invariant tests", "E", "d");
    const json good = store.records()[0].to_json();

    json zero_count = good;
    zero_count["occurrence_count"] = 0;
    CHECK_THROWS_AS(MemoryStore::load(write_snapshot("count.json", json::array({zero_count}))),
                    CorruptSnapshotError);

    json bad_times = good;
    bad_times["updated_at"] = "2000-01-01T00:00:00.000Z";
    CHECK_THROWS_AS(MemoryStore::load(write_snapshot("times.json", json::array({bad_times}))),
                    CorruptSnapshotError);

    json short_embedding = good;
    short_embedding["embedding"] = json::array({1.0, 2.0});
    CHECK_THROWS_AS(
        MemoryStore::load(write_snapshot("embedding.json", json::array({short_embedding}))),
        CorruptSnapshotError);

    CHECK_THROWS_AS(MemoryStore::load(write_snapshot("dupes.json", json::array({good, good}))),
                    CorruptSnapshotError);

    CHECK(MemoryStore::load(write_snapshot("ok.json", json::array({good}))).size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("default id generator produces well-formed unique ids") {
    const IdGenerator ids = random_uuid_generator();
    std::vector<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::string id = ids();
        REQUIRE(id.size() == 36);
        CHECK(id[8] == '-');
        CHECK(id[13] == '-');
        CHECK(id[18] == '-');
        CHECK(id[23] == '-');
        CHECK(id[14] == '4');
        seen.push_back(id);
    }
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("readers and writers can overlap without corruption") {
    MemoryStore store = test_store();
    for (int i = 0; i < 10; ++i) {
        store.create("seed summary number " + std::to_string(i), "E", "d");
    }
    std::atomic<bool> stop{false};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&store, &stop] {
            while (!stop.load()) {
                const auto hits = store.search("seed summary number 3", 5);
                if (!hits.empty() && hits[0].score < -1.1) std::abort();
            }
        });
    }
    for (int i = 0; i < 50; ++i) {
        store.create("writer added summary " + std::to_string(i), "E", "d");
    }
    stop.store(true);
    for (auto& t : readers) t.join();
    CHECK(store.size() == 60);
}
