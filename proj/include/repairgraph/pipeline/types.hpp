#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "repairgraph/graph/trace.hpp"
#include "repairgraph/sandbox/types.hpp"

namespace repairgraph::pipeline {

class PipelineError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TaskSpec {
    std::string id;
    std::string prompt;
    nlohmann::json arg_sets = nlohmann::json::array();  // array of argument lists
    std::optional<nlohmann::json> expected_return;
    int max_repairs = 5;

    void validate() const;  // throws PipelineError

    nlohmann::json to_json() const;
    static TaskSpec from_json(const nlohmann::json& doc);
};

struct BugReport {
    std::string function_name;
    std::string error_type;
    std::string error_message;
    std::string context;
    std::string location;
    std::string expected_behavior;
    std::string actual_behavior;
    std::string raw_text;

    nlohmann::json to_json() const;
    static BugReport from_json(const nlohmann::json& doc);
    friend bool operator==(const BugReport&, const BugReport&) = default;
};

// Slim view of a memory search hit; enough for routing, prompts, and
// reports without dragging embeddings into the state.
struct MemoryHit {
    std::string id;
    std::string error_type;
    std::string summary;
    double score = 0.0;
    int occurrence_count = 0;

    nlohmann::json to_json() const;
    static MemoryHit from_json(const nlohmann::json& doc);
    friend bool operator==(const MemoryHit&, const MemoryHit&) = default;
};

struct MemoryMutation {
    std::string action;  // "create" or "update"
    std::string record_id;
    std::string summary;

    nlohmann::json to_json() const;
    static MemoryMutation from_json(const nlohmann::json& doc);
    friend bool operator==(const MemoryMutation&, const MemoryMutation&) = default;
};

enum class PipelineStatus { in_progress, success, failed_max_repairs, backend_error };

const char* to_string(PipelineStatus status);
PipelineStatus pipeline_status_from_string(const std::string& name);

struct PipelineState {
    TaskSpec task;
    std::optional<std::string> function_code;
    std::optional<std::string> entry_name;
    std::optional<nlohmann::json> current_args;
    std::optional<sandbox::ExecutionResult> execution_result;
    std::optional<BugReport> bug_report;
    std::vector<MemoryHit> search_hits;
    std::vector<MemoryHit> filtered_hits;
    std::optional<std::string> matched_record_id;
    std::optional<std::string> candidate_fix;
    std::vector<MemoryMutation> memory_mutations;
    int repair_count = 0;
    PipelineStatus status = PipelineStatus::in_progress;
    std::string error_message;

    nlohmann::json to_json() const;

    // Digest view: identical across runs that take the same path, so wall
    // times are excluded.
    nlohmann::json canonical_json() const;
};

struct TaskOutcome {
    PipelineState final_state;
    graph::ExecutionTrace trace;
    double wall_ms = 0.0;
    int repairs_used = 0;
    std::string error;  // handler failure detail, empty otherwise
};

}  // namespace repairgraph::pipeline
