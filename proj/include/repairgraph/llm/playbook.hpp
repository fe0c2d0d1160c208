#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace repairgraph::llm {

struct PlaybookEntry {
    std::string matcher;
    std::string response;
};

// Ordered list of scripted responses. Each call must match the entry at the
// cursor; a mismatch throws without consuming, so entry order is semantic.
class MockPlaybook {
public:
    MockPlaybook() = default;
    MockPlaybook(MockPlaybook&& other) noexcept;
    MockPlaybook& operator=(MockPlaybook&& other) noexcept;

    void add(std::string matcher, std::string response);
    std::string next(const std::string& prompt);

    std::size_t size() const;
    std::size_t consumed() const;
    std::size_t remaining() const;

    static MockPlaybook from_json(const nlohmann::json& entries);
    static MockPlaybook load(const std::filesystem::path& path);

private:
    mutable std::mutex mu_;
    std::vector<PlaybookEntry> entries_;
    std::size_t cursor_ = 0;
};

}  // namespace repairgraph::llm
