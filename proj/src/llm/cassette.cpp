#include "repairgraph/llm/cassette.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "repairgraph/common/digest.hpp"
#include "repairgraph/llm/types.hpp"

namespace repairgraph::llm {

std::string cassette_key(const std::string& template_name, const std::string& prompt) {
    return digest::fnv1a64_hex(template_name + "\n" + prompt);
}

Cassette Cassette::load(const std::filesystem::path& path) {
    Cassette cassette;
    std::ifstream in(path);
    if (!in) {
        if (std::filesystem::exists(path)) {
            throw IoFailureError("cannot read cassette: " + path.string());
        }
        return cassette;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json entry;
        try {
            entry = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw LlmError("cassette parse failure at " + path.string() + ":" +
                           std::to_string(lineno) + ": " + e.what());
        }
        if (!entry.is_object() || !entry.contains("key") || !entry.contains("response")) {
            throw LlmError("cassette entry at " + path.string() + ":" + std::to_string(lineno) +
                           " needs \"key\" and \"response\"");
        }
        cassette.put(entry.at("key").get<std::string>(), entry.at("response").get<std::string>());
    }
    return cassette;
}

std::optional<std::string> Cassette::find(const std::string& key) const {
    const auto it = responses_.find(key);
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

void Cassette::put(std::string key, std::string response) {
    responses_[std::move(key)] = std::move(response);
}

std::size_t Cassette::size() const { return responses_.size(); }

void Cassette::append_line(const std::filesystem::path& path, const std::string& key,
                           const std::string& template_name, const std::string& response) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoFailureError("cannot append to cassette: " + path.string());
    nlohmann::json entry{{"key", key}, {"template", template_name}, {"response", response}};
    out << entry.dump() << '\n';
    if (!out) throw IoFailureError("write failure on cassette: " + path.string());
}

}  // namespace repairgraph::llm
