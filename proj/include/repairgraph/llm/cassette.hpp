#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace repairgraph::llm {

std::string cassette_key(const std::string& template_name, const std::string& prompt);

// Recorded responses keyed by request digest, persisted as JSON lines.
class Cassette {
public:
    Cassette() = default;

    // Missing file yields an empty cassette so record mode can start fresh.
    static Cassette load(const std::filesystem::path& path);

    std::optional<std::string> find(const std::string& key) const;
    void put(std::string key, std::string response);
    std::size_t size() const;

    static void append_line(const std::filesystem::path& path, const std::string& key,
                            const std::string& template_name, const std::string& response);

private:
    std::map<std::string, std::string> responses_;
};

}  // namespace repairgraph::llm
