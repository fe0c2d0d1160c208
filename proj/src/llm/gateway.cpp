#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "repairgraph/llm/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <utility>

namespace repairgraph::llm {

namespace {

// Internal marker for failures worth another attempt (transport, 5xx).
struct RetryableFailure {
    std::string message;
};

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

bool is_fence_line(const std::string& line) {
    const std::string t = trim(line);
    return t.rfind("```", 0) == 0;
}

// Scans a balanced JSON object starting at `start` (which must be '{'),
// skipping over string literals. Returns one past the closing brace, or
// npos when the text ends before the object closes.
std::size_t scan_object_end(const std::string& text, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string::npos;
}

}  // namespace

std::string extract_code(const std::string& response_text) {
    std::vector<std::string> lines;
    std::string current;
    for (const char c : response_text) {
        if (c == '\n') {
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    lines.push_back(std::move(current));

    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_fence_line(lines[i])) {
            open = i;
            break;
        }
    }

    std::string body;
    if (open == lines.size()) {
        body = trim(response_text);
    } else {
        std::string joined;
        for (std::size_t i = open + 1; i < lines.size(); ++i) {
            if (is_fence_line(lines[i])) break;
            if (!joined.empty()) joined.push_back('\n');
            std::string line = lines[i];
            while (!line.empty() && line.back() == '\r') line.pop_back();
            joined += line;
        }
        body = trim(joined);
    }
    if (body.empty()) throw EmptyCodeError();
    return body;
}

nlohmann::json extract_json(const std::string& response_text) {
    bool saw_brace = false;
    for (std::size_t i = response_text.find('{'); i != std::string::npos;
         i = response_text.find('{', i + 1)) {
        saw_brace = true;
        const std::size_t end = scan_object_end(response_text, i);
        if (end == std::string::npos) continue;
        try {
            return nlohmann::json::parse(response_text.substr(i, end - i));
        } catch (const nlohmann::json::exception&) {
            // a balanced span that is not valid JSON; keep scanning
        }
    }
    if (!saw_brace) throw NoJsonFoundError();
    throw MalformedJsonError("braces present but no parseable JSON object");
}

Gateway::Gateway(BackendConfig config, TemplateStore templates)
    : config_(std::move(config)), templates_(std::move(templates)) {
    if (config_.mode == BackendMode::replay || config_.mode == BackendMode::record) {
        if (config_.cassette_path.empty()) {
            throw LlmError(std::string(to_string(config_.mode)) + " mode needs a cassette path");
        }
        cassette_ = Cassette::load(config_.cassette_path);
    }
}

void Gateway::set_playbook(MockPlaybook playbook) { playbook_ = std::move(playbook); }

std::string Gateway::complete(const CompletionRequest& request) {
    request.validate();
    switch (config_.mode) {
        case BackendMode::mock:
            return playbook_.next(request.prompt());
        case BackendMode::replay: {
            const std::string key = cassette_key(request.template_name, request.prompt());
            std::lock_guard lock(cassette_mu_);
            if (auto hit = cassette_.find(key)) return *hit;
            throw MockMissError("no cassette entry for key " + key);
        }
        case BackendMode::record: {
            std::string response = call_live(request);
            const std::string key = cassette_key(request.template_name, request.prompt());
            std::lock_guard lock(cassette_mu_);
            Cassette::append_line(config_.cassette_path, key, request.template_name, response);
            cassette_.put(key, response);
            return response;
        }
        case BackendMode::live:
            return call_live(request);
    }
    throw LlmError("unhandled backend mode");
}

std::string Gateway::complete_template(const std::string& template_name,
                                       const std::map<std::string, std::string>& vars) {
    CompletionRequest request;
    request.model_id = config_.model_id;
    request.template_name = template_name;
    request.messages.push_back({Role::user, templates_.render(template_name, vars)});
    return complete(request);
}

std::string Gateway::resolve_api_key() const {
    if (config_.api_key_env.empty()) throw AuthMissingError("no api_key_env configured");
    const char* value = std::getenv(config_.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthMissingError("environment variable " + config_.api_key_env + " is empty");
    }
    return value;
}

std::string Gateway::call_live(const CompletionRequest& request) {
    const std::string api_key = resolve_api_key();
    const int attempts = config_.max_retries + 1;
    int backoff_ms = config_.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        ++live_attempts_;
        try {
            return post_once(request, api_key);
        } catch (const RetryableFailure& failure) {
            last_error = failure.message;
        }
    }
    throw BackendUnavailableError("backend unreachable after " + std::to_string(attempts) +
                                  " attempts: " + last_error);
}

std::string Gateway::post_once(const CompletionRequest& request, const std::string& api_key) {
    std::string host = config_.base_url;
    std::string prefix;
    const auto scheme_end = host.find("://");
    const auto path_start = host.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        prefix = host.substr(path_start);
        host.resize(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }

    httplib::Client client(host);
    const auto whole_s = static_cast<time_t>(config_.timeout_s);
    const auto frac_us = static_cast<time_t>((config_.timeout_s - std::floor(config_.timeout_s)) * 1e6);
    client.set_connection_timeout(whole_s, frac_us);
    client.set_read_timeout(whole_s, frac_us);
    client.set_write_timeout(whole_s, frac_us);

    nlohmann::json body{
        {"model", request.model_id.empty() ? config_.model_id : request.model_id},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    nlohmann::json messages = nlohmann::json::array();
    for (const ChatMessage& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["messages"] = messages;

    const httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw RetryableFailure{"transport: " + httplib::to_string(res.error())};
    if (res->status >= 500) throw RetryableFailure{"HTTP " + std::to_string(res->status)};
    if (res->status >= 400) {
        throw BackendUnavailableError("HTTP " + std::to_string(res->status) + " from backend: " +
                                      res->body.substr(0, 200));
    }
    try {
        const nlohmann::json doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailableError(std::string("unparseable backend response: ") + e.what());
    }
}

}  // namespace repairgraph::llm
