#include "repairgraph/pipeline/nodes.hpp"

#include <cctype>
#include <sstream>

#include "repairgraph/common/digest.hpp"
#include "repairgraph/graph/engine.hpp"

namespace repairgraph::pipeline {

namespace {

constexpr std::size_t kSummaryFallbackLimit = 2000;

std::string fallback_summary(const std::string& raw_text) {
    return raw_text.substr(0, kSummaryFallbackLimit);
}

std::string trimmed(const std::string& text) {
    const auto b = text.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = text.find_last_not_of(" \t\r\n");
    return text.substr(b, e - b + 1);
}

// The failure to report on: the structured error when the sandbox produced
// one, a synthesized one for timeouts and crashes.
sandbox::StructuredError failure_of(const sandbox::ExecutionResult& result) {
    if (result.error) return *result.error;
    sandbox::StructuredError err;
    if (result.status == sandbox::ExecStatus::timeout) {
        err.error_type = "Timeout";
        err.message = "execution exceeded the wall-clock budget";
    } else {
        err.error_type = "Crash";
        err.message = "process died without reporting a result (exit " +
                      std::to_string(result.exit_code) + ")";
    }
    return err;
}

std::string describe_failure(const sandbox::StructuredError& err) {
    std::string text = err.error_type + ": " + err.message;
    if (err.line) text += "\nline: " + std::to_string(*err.line);
    if (err.function) text += "\nfunction: " + *err.function;
    if (!err.traceback_text.empty()) text += "\n" + err.traceback_text;
    return text;
}

BugReport fallback_report(const PipelineState& state, const sandbox::StructuredError& err) {
    BugReport report;
    report.function_name = state.entry_name.value_or("");
    report.error_type = err.error_type;
    report.error_message = err.message.empty() ? "no message" : err.message;
    report.context = state.function_code.value_or("");
    report.location = err.line ? "line " + std::to_string(*err.line) : "unknown";
    report.expected_behavior = "function completes without raising and returns a usable value";
    report.actual_behavior = report.error_type + ": " + report.error_message;
    report.raw_text = report.to_json().dump();
    return report;
}

std::string hits_as_bullets(const std::vector<MemoryHit>& hits) {
    if (hits.empty()) return "none";
    std::ostringstream out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (i > 0) out << '\n';
        out << "- " << hits[i].summary;
    }
    return out.str();
}

}  // namespace

std::string find_entry_name(const std::string& source) {
    std::istringstream stream(source);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.rfind("def ", 0) != 0) continue;
        std::size_t i = 4;
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() &&
               (std::isalnum(static_cast<unsigned char>(line[j])) != 0 || line[j] == '_')) {
            ++j;
        }
        if (j > i) return line.substr(i, j - i);
    }
    return "";
}

PipelineState node_code_generation(const Services& services, PipelineState state) {
    const std::string response =
        services.gateway.complete_template("codegen", {{"task", state.task.prompt}});
    std::string code = llm::extract_code(response);
    const std::string entry = find_entry_name(code);
    if (entry.empty()) {
        throw PipelineError("model reply contains no function definition");
    }
    state.function_code = std::move(code);
    state.entry_name = entry;
    return state;
}

PipelineState node_code_execution(const Services& services, PipelineState state) {
    sandbox::ExecutionRequest request;
    request.source = state.function_code.value();
    request.entry = state.entry_name.value();
    request.timeout_s = services.config.timeout_s;

    sandbox::ExecutionResult last;
    nlohmann::json last_args = nlohmann::json::array();
    bool all_ok = true;
    for (const auto& args : state.task.arg_sets) {
        request.args = args;
        last = services.executor.execute(request);
        last_args = args;
        if (last.status != sandbox::ExecStatus::success) {
            all_ok = false;
            break;
        }
    }

    if (all_ok && state.task.expected_return &&
        *last.return_value != *state.task.expected_return) {
        all_ok = false;
        sandbox::StructuredError err;
        err.error_type = "AssertionFailure";
        err.message = "expected " + state.task.expected_return->dump() + ", got " +
                      last.return_value->dump();
        last.status = sandbox::ExecStatus::exception;
        last.error = std::move(err);
    }

    state.current_args = last_args;
    state.execution_result = std::move(last);
    if (all_ok) {
        state.status = PipelineStatus::success;
    } else if (state.repair_count >= state.task.max_repairs) {
        state.status = PipelineStatus::failed_max_repairs;
    }
    return state;
}

std::string route_after_execution(const PipelineState& state) {
    if (state.status == PipelineStatus::success ||
        state.status == PipelineStatus::failed_max_repairs) {
        return graph::kEnd;
    }
    return "bug_issue";
}

PipelineState node_bug_issue(const Services& services, PipelineState state) {
    const sandbox::StructuredError failure = failure_of(state.execution_result.value());
    BugReport report;
    try {
        const std::string response = services.gateway.complete_template(
            "bug_report", {{"code", state.function_code.value_or("")},
                           {"error", describe_failure(failure)}});
        report = BugReport::from_json(llm::extract_json(response));
        report.raw_text = response;
        if (report.error_type.empty()) report.error_type = failure.error_type;
        if (report.error_message.empty()) {
            report.error_message = failure.message.empty() ? "no message" : failure.message;
        }
        if (report.function_name.empty()) report.function_name = state.entry_name.value_or("");
    } catch (const std::exception&) {
        report = fallback_report(state, failure);
    }
    state.bug_report = std::move(report);
    return state;
}

PipelineState node_memory_search(const Services& services, PipelineState state) {
    const BugReport& report = state.bug_report.value();
    const std::string query =
        report.error_type + " " + report.error_message + " " + report.function_name;
    state.search_hits.clear();
    for (const memory::SearchHit& hit : services.store.search(query, services.config.k)) {
        MemoryHit view;
        view.id = hit.record.id;
        view.error_type = hit.record.error_type;
        view.summary = hit.record.summary;
        view.score = hit.score;
        view.occurrence_count = hit.record.occurrence_count;
        state.search_hits.push_back(std::move(view));
    }
    return state;
}

PipelineState node_memory_filter(const Services& services, PipelineState state) {
    state.filtered_hits.clear();
    for (const MemoryHit& hit : state.search_hits) {
        if (hit.score >= services.config.tau) state.filtered_hits.push_back(hit);
    }
    state.matched_record_id = state.filtered_hits.empty()
                                  ? std::nullopt
                                  : std::optional(state.filtered_hits.front().id);
    return state;
}

std::string route_after_filter(const PipelineState& state) {
    return state.matched_record_id ? "memory_update" : "memory_create";
}

PipelineState node_memory_create(const Services& services, PipelineState state) {
    const BugReport& report = state.bug_report.value();
    std::string summary;
    try {
        summary = trimmed(services.gateway.complete_template("memory_create_summary",
                                                             {{"report", report.raw_text}}));
    } catch (const llm::LlmError&) {
        summary.clear();
    }
    if (summary.empty()) summary = fallback_summary(report.raw_text);

    const memory::MemoryRecord record = services.store.create(
        summary, report.error_type, digest::fnv1a64_hex(report.raw_text));
    state.memory_mutations.push_back({"create", record.id, record.summary});
    return state;
}

PipelineState node_memory_update(const Services& services, PipelineState state) {
    const BugReport& report = state.bug_report.value();
    const std::string id = state.matched_record_id.value();
    const memory::MemoryRecord old = services.store.get(id)
                                         .value_or(memory::MemoryRecord{});
    std::string summary;
    try {
        summary = trimmed(services.gateway.complete_template(
            "memory_update_summary",
            {{"old_summary", old.summary}, {"report", report.raw_text}}));
    } catch (const llm::LlmError&) {
        summary.clear();
    }
    if (summary.empty()) summary = fallback_summary(report.raw_text);

    const memory::MemoryRecord record = services.store.update(id, summary);
    state.memory_mutations.push_back({"update", record.id, record.summary});
    return state;
}

PipelineState node_code_update(const Services& services, PipelineState state) {
    const std::string response = services.gateway.complete_template(
        "code_fix", {{"code", state.function_code.value()},
                     {"report", state.bug_report.value().raw_text},
                     {"memories", hits_as_bullets(state.filtered_hits)}});
    state.candidate_fix = llm::extract_code(response);
    return state;
}

PipelineState node_code_repair(const Services&, PipelineState state) {
    state.function_code = state.candidate_fix.value();
    state.repair_count += 1;
    state.execution_result.reset();
    state.bug_report.reset();
    state.search_hits.clear();
    state.filtered_hits.clear();
    state.matched_record_id.reset();
    state.candidate_fix.reset();
    state.current_args.reset();
    return state;
}

}  // namespace repairgraph::pipeline
