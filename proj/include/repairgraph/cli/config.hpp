#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "repairgraph/llm/types.hpp"

namespace repairgraph::cli {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Tool-wide settings. File values override the built-in defaults; command
// line flags override both.
struct CliConfig {
    llm::BackendConfig backend;
    std::filesystem::path memory_path = "memory.json";
    std::string interpreter_path;  // empty lets the sandbox pick python3
    int k = 5;
    double tau = 0.35;
    double default_timeout_s = 10.0;
    int default_max_repairs = 5;
    std::filesystem::path report_dir = "reports";

    void validate() const;  // throws ConfigError
    nlohmann::json to_json() const;
    static CliConfig from_json(const nlohmann::json& doc);
    static CliConfig from_file(const std::filesystem::path& path);
};

// Resolution order: explicit --config path, then $REPAIRGRAPH_CONFIG,
// then built-in defaults. A named file that cannot be loaded is an error;
// no file at all is not.
CliConfig load_config(const std::string& flag_path);

}  // namespace repairgraph::cli
