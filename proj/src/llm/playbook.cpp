#include "repairgraph/llm/playbook.hpp"

#include <fstream>
#include <utility>

#include "repairgraph/llm/types.hpp"

namespace repairgraph::llm {

MockPlaybook::MockPlaybook(MockPlaybook&& other) noexcept {
    std::lock_guard lock(other.mu_);
    entries_ = std::move(other.entries_);
    cursor_ = other.cursor_;
}

MockPlaybook& MockPlaybook::operator=(MockPlaybook&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mu_, other.mu_);
        entries_ = std::move(other.entries_);
        cursor_ = other.cursor_;
    }
    return *this;
}

void MockPlaybook::add(std::string matcher, std::string response) {
    std::lock_guard lock(mu_);
    entries_.push_back({std::move(matcher), std::move(response)});
}

std::string MockPlaybook::next(const std::string& prompt) {
    std::lock_guard lock(mu_);
    if (cursor_ >= entries_.size()) {
        throw MockMissError("playbook exhausted after " + std::to_string(entries_.size()) +
                            " entries");
    }
    const PlaybookEntry& entry = entries_[cursor_];
    if (prompt.find(entry.matcher) == std::string::npos) {
        throw MockMissError("prompt does not contain playbook matcher \"" + entry.matcher +
                            "\" (entry " + std::to_string(cursor_) + ")");
    }
    ++cursor_;
    return entry.response;
}

std::size_t MockPlaybook::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::size_t MockPlaybook::consumed() const {
    std::lock_guard lock(mu_);
    return cursor_;
}

std::size_t MockPlaybook::remaining() const {
    std::lock_guard lock(mu_);
    return entries_.size() - cursor_;
}

MockPlaybook MockPlaybook::from_json(const nlohmann::json& entries) {
    if (!entries.is_array()) throw LlmError("playbook JSON must be an array");
    MockPlaybook book;
    for (const auto& item : entries) {
        if (!item.is_object() || !item.contains("match") || !item.contains("response")) {
            throw LlmError("playbook entry needs \"match\" and \"response\" strings");
        }
        book.add(item.at("match").get<std::string>(), item.at("response").get<std::string>());
    }
    return book;
}

MockPlaybook MockPlaybook::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailureError("cannot read playbook: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw LlmError("playbook parse failure in " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

}  // namespace repairgraph::llm
