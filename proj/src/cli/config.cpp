#include "repairgraph/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace repairgraph::cli {

void CliConfig::validate() const {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (tau < -1.0 || tau > 1.0) throw ConfigError("tau must lie in [-1, 1]");
    if (default_timeout_s <= 0.0) throw ConfigError("default_timeout_s must be positive");
    if (default_max_repairs < 1) throw ConfigError("default_max_repairs must be at least 1");
    if (backend.timeout_s <= 0.0) throw ConfigError("backend.timeout_s must be positive");
    if (backend.max_retries < 0) throw ConfigError("backend.max_retries must not be negative");
    if (backend.backoff_initial_ms < 0) {
        throw ConfigError("backend.backoff_initial_ms must not be negative");
    }
    if (memory_path.empty()) throw ConfigError("memory_path must not be empty");
    if (report_dir.empty()) throw ConfigError("report_dir must not be empty");
}

nlohmann::json CliConfig::to_json() const {
    return nlohmann::json{
        {"backend",
         {{"base_url", backend.base_url},
          {"model_id", backend.model_id},
          {"api_key_env", backend.api_key_env},
          {"timeout_s", backend.timeout_s},
          {"max_retries", backend.max_retries},
          {"mode", llm::to_string(backend.mode)},
          {"cassette_path", backend.cassette_path},
          {"backoff_initial_ms", backend.backoff_initial_ms}}},
        {"memory_path", memory_path.string()},
        {"interpreter_path", interpreter_path},
        {"k", k},
        {"tau", tau},
        {"default_timeout_s", default_timeout_s},
        {"default_max_repairs", default_max_repairs},
        {"report_dir", report_dir.string()},
    };
}

CliConfig CliConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    CliConfig config;
    try {
        if (doc.contains("backend")) {
            const nlohmann::json& b = doc.at("backend");
            config.backend.base_url = b.value("base_url", config.backend.base_url);
            config.backend.model_id = b.value("model_id", config.backend.model_id);
            config.backend.api_key_env = b.value("api_key_env", config.backend.api_key_env);
            config.backend.timeout_s = b.value("timeout_s", config.backend.timeout_s);
            config.backend.max_retries = b.value("max_retries", config.backend.max_retries);
            if (b.contains("mode")) {
                config.backend.mode =
                    llm::backend_mode_from_string(b.at("mode").get<std::string>());
            }
            config.backend.cassette_path =
                b.value("cassette_path", config.backend.cassette_path);
            config.backend.backoff_initial_ms =
                b.value("backoff_initial_ms", config.backend.backoff_initial_ms);
        }
        config.memory_path = doc.value("memory_path", config.memory_path.string());
        config.interpreter_path = doc.value("interpreter_path", config.interpreter_path);
        config.k = doc.value("k", config.k);
        config.tau = doc.value("tau", config.tau);
        config.default_timeout_s = doc.value("default_timeout_s", config.default_timeout_s);
        config.default_max_repairs =
            doc.value("default_max_repairs", config.default_max_repairs);
        config.report_dir = doc.value("report_dir", config.report_dir.string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const llm::LlmError& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    config.validate();
    return config;
}

CliConfig CliConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

CliConfig load_config(const std::string& flag_path) {
    if (!flag_path.empty()) return CliConfig::from_file(flag_path);
    if (const char* env = std::getenv("REPAIRGRAPH_CONFIG"); env != nullptr && *env != '\0') {
        return CliConfig::from_file(env);
    }
    return CliConfig{};
}

}  // namespace repairgraph::cli
