#include "repairgraph/pipeline/types.hpp"

namespace repairgraph::pipeline {

using nlohmann::json;

void TaskSpec::validate() const {
    if (id.empty()) throw PipelineError("task id is empty");
    if (prompt.empty()) throw PipelineError("task prompt is empty");
    if (!arg_sets.is_array() || arg_sets.empty()) {
        throw PipelineError("task needs at least one argument set");
    }
    for (const auto& args : arg_sets) {
        if (!args.is_array()) throw PipelineError("each argument set must be a JSON array");
    }
    if (max_repairs < 1) throw PipelineError("max_repairs must be positive");
}

json TaskSpec::to_json() const {
    json doc{
        {"id", id},
        {"prompt", prompt},
        {"arg_sets", arg_sets},
        {"max_repairs", max_repairs},
    };
    if (expected_return) doc["expected_return"] = *expected_return;
    return doc;
}

TaskSpec TaskSpec::from_json(const json& doc) {
    TaskSpec task;
    try {
        task.id = doc.at("id").get<std::string>();
        task.prompt = doc.at("prompt").get<std::string>();
        task.arg_sets = doc.at("arg_sets");
        if (doc.contains("expected_return")) task.expected_return = doc.at("expected_return");
        task.max_repairs = doc.value("max_repairs", 5);
    } catch (const json::exception& e) {
        throw PipelineError(std::string("bad task spec: ") + e.what());
    }
    task.validate();
    return task;
}

json BugReport::to_json() const {
    return json{
        {"function_name", function_name},
        {"error_type", error_type},
        {"error_message", error_message},
        {"context", context},
        {"location", location},
        {"expected_behavior", expected_behavior},
        {"actual_behavior", actual_behavior},
        {"raw_text", raw_text},
    };
}

BugReport BugReport::from_json(const json& doc) {
    BugReport report;
    report.function_name = doc.value("function_name", "");
    report.error_type = doc.value("error_type", "");
    report.error_message = doc.value("error_message", "");
    report.context = doc.value("context", "");
    report.location = doc.value("location", "");
    report.expected_behavior = doc.value("expected_behavior", "");
    report.actual_behavior = doc.value("actual_behavior", "");
    report.raw_text = doc.value("raw_text", "");
    return report;
}

json MemoryHit::to_json() const {
    return json{
        {"id", id},
        {"error_type", error_type},
        {"summary", summary},
        {"score", score},
        {"occurrence_count", occurrence_count},
    };
}

MemoryHit MemoryHit::from_json(const json& doc) {
    MemoryHit hit;
    hit.id = doc.value("id", "");
    hit.error_type = doc.value("error_type", "");
    hit.summary = doc.value("summary", "");
    hit.score = doc.value("score", 0.0);
    hit.occurrence_count = doc.value("occurrence_count", 0);
    return hit;
}

json MemoryMutation::to_json() const {
    return json{{"action", action}, {"record_id", record_id}, {"summary", summary}};
}

MemoryMutation MemoryMutation::from_json(const json& doc) {
    MemoryMutation mutation;
    mutation.action = doc.value("action", "");
    mutation.record_id = doc.value("record_id", "");
    mutation.summary = doc.value("summary", "");
    return mutation;
}

const char* to_string(PipelineStatus status) {
    switch (status) {
        case PipelineStatus::in_progress: return "in_progress";
        case PipelineStatus::success: return "success";
        case PipelineStatus::failed_max_repairs: return "failed_max_repairs";
        case PipelineStatus::backend_error: return "backend_error";
    }
    return "in_progress";
}

PipelineStatus pipeline_status_from_string(const std::string& name) {
    if (name == "in_progress") return PipelineStatus::in_progress;
    if (name == "success") return PipelineStatus::success;
    if (name == "failed_max_repairs") return PipelineStatus::failed_max_repairs;
    if (name == "backend_error") return PipelineStatus::backend_error;
    throw PipelineError("unknown pipeline status: " + name);
}

namespace {

json opt_string(const std::optional<std::string>& value) {
    return value ? json(*value) : json();
}

}  // namespace

json PipelineState::to_json() const {
    json doc;
    doc["task"] = task.to_json();
    doc["function_code"] = opt_string(function_code);
    doc["entry_name"] = opt_string(entry_name);
    doc["current_args"] = current_args ? *current_args : json();
    doc["execution_result"] = execution_result ? execution_result->to_json() : json();
    doc["bug_report"] = bug_report ? bug_report->to_json() : json();
    doc["search_hits"] = json::array();
    for (const MemoryHit& hit : search_hits) doc["search_hits"].push_back(hit.to_json());
    doc["filtered_hits"] = json::array();
    for (const MemoryHit& hit : filtered_hits) doc["filtered_hits"].push_back(hit.to_json());
    doc["matched_record_id"] = opt_string(matched_record_id);
    doc["candidate_fix"] = opt_string(candidate_fix);
    doc["memory_mutations"] = json::array();
    for (const MemoryMutation& m : memory_mutations) doc["memory_mutations"].push_back(m.to_json());
    doc["repair_count"] = repair_count;
    doc["status"] = to_string(status);
    doc["error_message"] = error_message;
    return doc;
}

json PipelineState::canonical_json() const {
    json doc = to_json();
    if (doc.contains("execution_result") && doc["execution_result"].is_object()) {
        doc["execution_result"].erase("wall_ms");
    }
    return doc;
}

}  // namespace repairgraph::pipeline
