#pragma once

#include <string>

#include "repairgraph/graph/engine.hpp"
#include "repairgraph/pipeline/nodes.hpp"
#include "repairgraph/pipeline/types.hpp"

namespace repairgraph::pipeline {

// Step budget generous enough that a run capped at max_repairs can never
// exhaust it.
int step_budget(int max_repairs);

// Digest over the canonical state view; identical paths hash identically.
std::string state_digest(const PipelineState& state);

// Wires the repair loop over the services. The services object must outlive
// the returned graph.
graph::CompiledGraph<PipelineState> build_pipeline(const Services& services);

class Pipeline {
public:
    using StepObserver = graph::CompiledGraph<PipelineState>::StepObserver;

    Pipeline(llm::Gateway& gateway, memory::MemoryStore& store,
             const sandbox::Executor& executor, PipelineConfig config = {});
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    TaskOutcome run_task(const TaskSpec& task, const StepObserver& observer = {}) const;

    const graph::CompiledGraph<PipelineState>& graph() const { return graph_; }
    const PipelineConfig& config() const { return services_.config; }

private:
    Services services_;
    graph::CompiledGraph<PipelineState> graph_;
};

// Run report document; stable shape across runs.
nlohmann::json make_report(const TaskOutcome& outcome, const PipelineConfig& config);

}  // namespace repairgraph::pipeline
