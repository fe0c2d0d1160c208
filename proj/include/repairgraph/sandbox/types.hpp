#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace repairgraph::sandbox {

class SandboxError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The subprocess exited cleanly but produced no readable result envelope.
// Distinct from any failure of the code under test.
class HarnessFailure : public SandboxError {
  public:
    using SandboxError::SandboxError;
};

enum class ExecStatus { success, exception, syntax_error, timeout, crash };

const char* to_string(ExecStatus status);
ExecStatus exec_status_from_string(const std::string& name);

struct ExecutionRequest {
    std::string source;
    std::string entry;
    nlohmann::json args = nlohmann::json::array();
    double timeout_s = 10.0;

    void validate() const;  // throws SandboxError
};

struct StructuredError {
    std::string error_type;
    std::string message;
    std::optional<int> line;
    std::optional<std::string> function;
    std::string traceback_text;

    nlohmann::json to_json() const;
    static StructuredError from_json(const nlohmann::json& doc);
    friend bool operator==(const StructuredError&, const StructuredError&) = default;
};

struct ExecutionResult {
    ExecStatus status = ExecStatus::crash;
    std::string stdout_text;
    std::string stderr_text;
    std::optional<nlohmann::json> return_value;
    std::optional<StructuredError> error;
    double wall_ms = 0.0;
    int exit_code = 0;

    bool ok() const { return status == ExecStatus::success; }

    nlohmann::json to_json() const;
    static ExecutionResult from_json(const nlohmann::json& doc);
};

}  // namespace repairgraph::sandbox
