#include "repairgraph/pipeline/pipeline.hpp"

#include <chrono>

#include "repairgraph/common/digest.hpp"

namespace repairgraph::pipeline {

int step_budget(int max_repairs) { return 9 * (max_repairs + 1) + 2; }

std::string state_digest(const PipelineState& state) {
    return digest::fnv1a64_hex(state.canonical_json().dump());
}

graph::CompiledGraph<PipelineState> build_pipeline(const Services& services) {
    graph::GraphBuilder<PipelineState> builder;
    const Services* s = &services;

    const auto node = [&builder, s](const std::string& name,
                                    PipelineState (*handler)(const Services&, PipelineState)) {
        builder.add_node(name, [s, handler](PipelineState state) {
            return handler(*s, std::move(state));
        });
    };
    node("code_generation", &node_code_generation);
    node("code_execution", &node_code_execution);
    node("bug_issue", &node_bug_issue);
    node("memory_search", &node_memory_search);
    node("memory_filter", &node_memory_filter);
    node("memory_create", &node_memory_create);
    node("memory_update", &node_memory_update);
    node("code_update", &node_code_update);
    node("code_repair", &node_code_repair);

    builder.add_edge(graph::kStart, "code_generation");
    builder.add_edge("code_generation", "code_execution");
    builder.add_conditional_edge("code_execution", &route_after_execution,
                                 {graph::kEnd, "bug_issue"});
    builder.add_edge("bug_issue", "memory_search");
    builder.add_edge("memory_search", "memory_filter");
    builder.add_conditional_edge("memory_filter", &route_after_filter,
                                 {"memory_create", "memory_update"});
    builder.add_edge("memory_create", "code_update");
    builder.add_edge("memory_update", "code_update");
    builder.add_edge("code_update", "code_repair");
    builder.add_edge("code_repair", "code_execution");
    builder.set_digest(&state_digest);
    return builder.compile();
}

Pipeline::Pipeline(llm::Gateway& gateway, memory::MemoryStore& store,
                   const sandbox::Executor& executor, PipelineConfig config)
    : services_{gateway, store, executor, config}, graph_(build_pipeline(services_)) {}

TaskOutcome Pipeline::run_task(const TaskSpec& task, const StepObserver& observer) const {
    task.validate();

    PipelineState initial;
    initial.task = task;

    const auto started = std::chrono::steady_clock::now();
    graph::RunResult<PipelineState> run =
        graph_.run(std::move(initial), step_budget(task.max_repairs), observer);
    const auto finished = std::chrono::steady_clock::now();

    TaskOutcome outcome;
    outcome.final_state = std::move(run.state);
    outcome.trace = std::move(run.trace);
    outcome.wall_ms = std::chrono::duration<double, std::milli>(finished - started).count();
    outcome.error = run.error;

    switch (run.outcome) {
        case graph::RunOutcome::completed:
            break;
        case graph::RunOutcome::handler_error:
            outcome.final_state.status = PipelineStatus::backend_error;
            outcome.final_state.error_message = run.error;
            break;
        case graph::RunOutcome::budget_exhausted:
            // step_budget over-provisions; reaching it means the loop is broken
            throw std::logic_error("repair loop exceeded its step budget");
    }
    outcome.repairs_used = outcome.final_state.repair_count;
    return outcome;
}

nlohmann::json make_report(const TaskOutcome& outcome, const PipelineConfig& config) {
    const PipelineState& state = outcome.final_state;
    nlohmann::json doc;
    doc["task_id"] = state.task.id;
    doc["status"] = to_string(state.status);
    doc["repairs_used"] = outcome.repairs_used;
    doc["final_code"] = state.function_code ? nlohmann::json(*state.function_code)
                                            : nlohmann::json();
    doc["final_return"] = state.execution_result && state.execution_result->return_value
                              ? *state.execution_result->return_value
                              : nlohmann::json();
    doc["trace"] = outcome.trace.to_json();
    doc["memory_mutations"] = nlohmann::json::array();
    for (const MemoryMutation& m : state.memory_mutations) {
        doc["memory_mutations"].push_back(m.to_json());
    }
    doc["k"] = config.k;
    doc["tau"] = config.tau;
    doc["wall_ms"] = outcome.wall_ms;
    doc["error_message"] = state.error_message;
    return doc;
}

}  // namespace repairgraph::pipeline
