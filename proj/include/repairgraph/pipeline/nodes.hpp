#pragma once

#include <string>

#include "repairgraph/llm/gateway.hpp"
#include "repairgraph/memory/store.hpp"
#include "repairgraph/pipeline/types.hpp"
#include "repairgraph/sandbox/executor.hpp"

namespace repairgraph::pipeline {

struct PipelineConfig {
    int k = 5;           // memory search breadth
    double tau = 0.35;   // similarity threshold for the create/update branch
    double timeout_s = 10.0;
};

struct Services {
    llm::Gateway& gateway;
    memory::MemoryStore& store;
    const sandbox::Executor& executor;
    PipelineConfig config;
};

// Name of the first top-level function definition, or "" when none exists.
std::string find_entry_name(const std::string& source);

PipelineState node_code_generation(const Services& services, PipelineState state);
PipelineState node_code_execution(const Services& services, PipelineState state);
PipelineState node_bug_issue(const Services& services, PipelineState state);
PipelineState node_memory_search(const Services& services, PipelineState state);
PipelineState node_memory_filter(const Services& services, PipelineState state);
PipelineState node_memory_create(const Services& services, PipelineState state);
PipelineState node_memory_update(const Services& services, PipelineState state);
PipelineState node_code_update(const Services& services, PipelineState state);
PipelineState node_code_repair(const Services& services, PipelineState state);

std::string route_after_execution(const PipelineState& state);
std::string route_after_filter(const PipelineState& state);

}  // namespace repairgraph::pipeline
