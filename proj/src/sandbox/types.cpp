#include "repairgraph/sandbox/types.hpp"

namespace repairgraph::sandbox {

const char* to_string(ExecStatus status) {
    switch (status) {
        case ExecStatus::success: return "success";
        case ExecStatus::exception: return "exception";
        case ExecStatus::syntax_error: return "syntax_error";
        case ExecStatus::timeout: return "timeout";
        case ExecStatus::crash: return "crash";
    }
    return "crash";
}

ExecStatus exec_status_from_string(const std::string& name) {
    if (name == "success") return ExecStatus::success;
    if (name == "exception") return ExecStatus::exception;
    if (name == "syntax_error") return ExecStatus::syntax_error;
    if (name == "timeout") return ExecStatus::timeout;
    if (name == "crash") return ExecStatus::crash;
    throw SandboxError("unknown execution status: " + name);
}

void ExecutionRequest::validate() const {
    if (entry.empty()) throw SandboxError("entry function name is empty");
    if (!(timeout_s > 0.0)) throw SandboxError("timeout_s must be positive");
    if (!args.is_array()) throw SandboxError("args must be a JSON array");
}

nlohmann::json StructuredError::to_json() const {
    nlohmann::json doc{
        {"error_type", error_type},
        {"message", message},
        {"traceback_text", traceback_text},
    };
    doc["line"] = line ? nlohmann::json(*line) : nlohmann::json();
    doc["function"] = function ? nlohmann::json(*function) : nlohmann::json();
    return doc;
}

StructuredError StructuredError::from_json(const nlohmann::json& doc) {
    StructuredError err;
    err.error_type = doc.value("error_type", "");
    err.message = doc.value("message", "");
    err.traceback_text = doc.value("traceback_text", "");
    if (doc.contains("line") && doc.at("line").is_number_integer()) {
        err.line = doc.at("line").get<int>();
    }
    if (doc.contains("function") && doc.at("function").is_string()) {
        err.function = doc.at("function").get<std::string>();
    }
    return err;
}

nlohmann::json ExecutionResult::to_json() const {
    nlohmann::json doc{
        {"status", to_string(status)},
        {"stdout", stdout_text},
        {"stderr", stderr_text},
        {"wall_ms", wall_ms},
        {"exit_code", exit_code},
    };
    doc["return_value"] = return_value ? *return_value : nlohmann::json();
    if (return_value) doc["has_return"] = true;
    doc["error"] = error ? error->to_json() : nlohmann::json();
    return doc;
}

ExecutionResult ExecutionResult::from_json(const nlohmann::json& doc) {
    ExecutionResult result;
    result.status = exec_status_from_string(doc.at("status").get<std::string>());
    result.stdout_text = doc.value("stdout", "");
    result.stderr_text = doc.value("stderr", "");
    result.wall_ms = doc.value("wall_ms", 0.0);
    result.exit_code = doc.value("exit_code", 0);
    if (doc.value("has_return", false) || result.status == ExecStatus::success) {
        result.return_value = doc.value("return_value", nlohmann::json());
    }
    if (doc.contains("error") && doc.at("error").is_object()) {
        result.error = StructuredError::from_json(doc.at("error"));
    }
    return result;
}

}  // namespace repairgraph::sandbox
