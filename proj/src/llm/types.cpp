#include "repairgraph/llm/types.hpp"

namespace repairgraph::llm {

const char* to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

void CompletionRequest::validate() const {
    if (messages.empty()) throw InvalidRequestError("request has no messages");
    if (messages.back().role != Role::user) {
        throw InvalidRequestError("last message must come from the user");
    }
    for (const ChatMessage& m : messages) {
        if (m.role != Role::assistant && m.content.empty()) {
            throw InvalidRequestError("empty content in a user/system message");
        }
    }
    if (temperature < 0.0) throw InvalidRequestError("temperature must be >= 0");
    if (max_tokens < 1) throw InvalidRequestError("max_tokens must be positive");
}

const std::string& CompletionRequest::prompt() const {
    if (messages.empty()) throw InvalidRequestError("request has no messages");
    return messages.back().content;
}

BackendMode backend_mode_from_string(const std::string& name) {
    if (name == "live") return BackendMode::live;
    if (name == "mock") return BackendMode::mock;
    if (name == "record") return BackendMode::record;
    if (name == "replay") return BackendMode::replay;
    throw LlmError("unknown backend mode: " + name);
}

const char* to_string(BackendMode mode) {
    switch (mode) {
        case BackendMode::live: return "live";
        case BackendMode::mock: return "mock";
        case BackendMode::record: return "record";
        case BackendMode::replay: return "replay";
    }
    return "mock";
}

}  // namespace repairgraph::llm
