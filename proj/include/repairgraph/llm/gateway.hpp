#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

#include "repairgraph/llm/cassette.hpp"
#include "repairgraph/llm/playbook.hpp"
#include "repairgraph/llm/templates.hpp"
#include "repairgraph/llm/types.hpp"

namespace repairgraph::llm {

// Contents of the first fenced code block; fence-free input is returned
// trimmed. Whitespace-only extraction throws EmptyCodeError.
std::string extract_code(const std::string& response_text);

// First balanced JSON object in the response, fenced or bare.
nlohmann::json extract_json(const std::string& response_text);

// Single entry point for model calls. Mode decides where responses come
// from: a scripted playbook, a recorded cassette, or the live endpoint.
class Gateway {
public:
    explicit Gateway(BackendConfig config, TemplateStore templates = TemplateStore::builtin());

    void set_playbook(MockPlaybook playbook);

    std::string complete(const CompletionRequest& request);

    // Renders the named template and issues a one-message user request.
    std::string complete_template(const std::string& template_name,
                                  const std::map<std::string, std::string>& vars);

    const BackendConfig& config() const { return config_; }
    const TemplateStore& templates() const { return templates_; }

    // Number of HTTP attempts made so far; stays zero in mock/replay modes.
    long live_attempts() const { return live_attempts_.load(); }

private:
    std::string call_live(const CompletionRequest& request);
    std::string post_once(const CompletionRequest& request, const std::string& api_key);
    std::string resolve_api_key() const;

    BackendConfig config_;
    TemplateStore templates_;
    MockPlaybook playbook_;
    Cassette cassette_;
    std::mutex cassette_mu_;
    std::atomic<long> live_attempts_{0};
};

}  // namespace repairgraph::llm
