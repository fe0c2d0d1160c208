#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace repairgraph::llm {

/// Pure textual substitution: {name} placeholders, {{ and }} escape to
/// literal braces. Every placeholder must be bound or UnboundPlaceholderError
/// is thrown; extra vars are ignored.
std::string render_text(const std::string& text, const std::map<std::string, std::string>& vars);

/// Named prompt templates. One template per LLM-touching pipeline node:
/// codegen, bug_report, memory_create_summary, memory_update_summary,
/// code_fix. The built-in set mirrors the files shipped under templates/.
class TemplateStore {
  public:
    static TemplateStore builtin();

    /// Loads every *.txt file in the directory; the template name is the stem.
    static TemplateStore from_directory(const std::filesystem::path& dir);

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;

    bool has(const std::string& name) const { return templates_.contains(name); }
    const std::string& text(const std::string& name) const;
    std::vector<std::string> names() const;
    void set(std::string name, std::string text);

  private:
    std::map<std::string, std::string> templates_;
};

}  // namespace repairgraph::llm
