#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace repairgraph::llm {

class LlmError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidRequestError : public LlmError {
  public:
    using LlmError::LlmError;
};
class AuthMissingError : public LlmError {
  public:
    using LlmError::LlmError;
};
class BackendUnavailableError : public LlmError {
  public:
    using LlmError::LlmError;
};
class MockMissError : public LlmError {
  public:
    using LlmError::LlmError;
};
class UnknownTemplateError : public LlmError {
  public:
    explicit UnknownTemplateError(const std::string& name)
        : LlmError("unknown template: " + name) {}
};
class UnboundPlaceholderError : public LlmError {
  public:
    explicit UnboundPlaceholderError(const std::string& name)
        : LlmError("unbound placeholder: {" + name + "}") {}
};
class EmptyCodeError : public LlmError {
  public:
    EmptyCodeError() : LlmError("extracted code is empty") {}
};
class NoJsonFoundError : public LlmError {
  public:
    NoJsonFoundError() : LlmError("no JSON object found in response") {}
};
class MalformedJsonError : public LlmError {
  public:
    using LlmError::LlmError;
};
class IoFailureError : public LlmError {
  public:
    using LlmError::LlmError;
};

enum class Role { system, user, assistant };

const char* to_string(Role role);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;  // reproducibility default for all pipeline calls
    int max_tokens = 1024;
    // Which prompt template produced this request; keys cassettes and lets
    // playbooks stay readable. Empty for free-form requests.
    std::string template_name;

    /// Throws InvalidRequestError unless the request is well formed:
    /// at least one message, last message from the user, no empty
    /// user/system content, temperature >= 0, max_tokens >= 1.
    void validate() const;

    const std::string& prompt() const;  // content of the last (user) message
};

enum class BackendMode { live, mock, record, replay };

BackendMode backend_mode_from_string(const std::string& name);
const char* to_string(BackendMode mode);

struct BackendConfig {
    std::string base_url = "https://open.bigmodel.cn/api/paas/v4";
    std::string model_id = "glm-4-flash";
    std::string api_key_env = "GLM_API_KEY";
    double timeout_s = 30.0;
    int max_retries = 2;
    BackendMode mode = BackendMode::mock;
    std::string cassette_path;     // required for record/replay
    int backoff_initial_ms = 250;  // doubles per retry
};

}  // namespace repairgraph::llm
