#include "repairgraph/llm/templates.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "repairgraph/llm/types.hpp"

namespace repairgraph::llm {

namespace {

bool placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

constexpr const char* kCodegen = R"(You are an expert Python developer.
Write a single self-contained Python function that satisfies the task below.
Reply with exactly one fenced code block containing only the function definition.

Task: {task}
)";

constexpr const char* kBugReport =
    R"(You are a debugging assistant. A Python function failed during execution.
Analyze the failure and produce a structured bug report.

Function source:
{code}

Failure details:
{error}

Reply with only a JSON object with exactly these keys:
{{"function_name": "...", "error_type": "...", "error_message": "...",
"context": "...", "location": "...", "expected_behavior": "...",
"actual_behavior": "..."}}
)";

constexpr const char* kMemoryCreateSummary =
    R"(Write a one-sentence summary of the bug below for storing in a bug knowledge
base. Name the function, the error type, and the most likely cause.

Bug report:
{report}

Reply with only the summary sentence.
)";

constexpr const char* kMemoryUpdateSummary =
    R"(A record of this bug already exists in the knowledge base. Merge the existing
summary and the new report into one updated summary sentence.

Existing summary:
{old_summary}

New bug report:
{report}

Reply with only the updated summary sentence.
)";

constexpr const char* kCodeFix =
    R"(You are an expert Python developer. Repair the Python function below so the
reported failure no longer occurs, keeping the original behavior for valid
inputs.

Function source:
{code}

Bug report:
{report}

Similar bugs seen before:
{memories}

Reply with exactly one fenced code block containing only the corrected
function definition.
)";

}  // namespace

std::string render_text(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{') {
            if (i + 1 < text.size() && text[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < text.size() && placeholder_char(text[j])) ++j;
            if (j == i + 1 || j >= text.size() || text[j] != '}') {
                throw LlmError("malformed placeholder near offset " + std::to_string(i));
            }
            const std::string name = text.substr(i + 1, j - i - 1);
            const auto it = vars.find(name);
            if (it == vars.end()) throw UnboundPlaceholderError(name);
            out += it->second;
            i = j;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

TemplateStore TemplateStore::builtin() {
    TemplateStore store;
    store.set("codegen", kCodegen);
    store.set("bug_report", kBugReport);
    store.set("memory_create_summary", kMemoryCreateSummary);
    store.set("memory_update_summary", kMemoryUpdateSummary);
    store.set("code_fix", kCodeFix);
    return store;
}

TemplateStore TemplateStore::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoFailureError("template directory not found: " + dir.string());
    }
    TemplateStore store;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        if (!in) throw IoFailureError("cannot read template: " + entry.path().string());
        std::ostringstream body;
        body << in.rdbuf();
        store.set(entry.path().stem().string(), body.str());
    }
    return store;
}

std::string TemplateStore::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
    return render_text(text(name), vars);
}

const std::string& TemplateStore::text(const std::string& name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw UnknownTemplateError(name);
    return it->second;
}

std::vector<std::string> TemplateStore::names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

void TemplateStore::set(std::string name, std::string text) {
    templates_[std::move(name)] = std::move(text);
}

}  // namespace repairgraph::llm
