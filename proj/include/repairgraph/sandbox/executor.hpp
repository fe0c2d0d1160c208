#pragma once

#include <string>

#include "repairgraph/sandbox/types.hpp"

namespace repairgraph::sandbox {

struct SandboxConfig {
    std::string python;  // empty resolves to REPAIRGRAPH_PYTHON or "python3"
};

std::string resolve_python(const SandboxConfig& config);

// Runs candidate source in an interpreter subprocess under a wall-clock
// deadline. Each call gets its own scratch directory and process group;
// candidate code never runs in this process.
class Executor {
public:
    explicit Executor(SandboxConfig config = {});

    ExecutionResult execute(const ExecutionRequest& request) const;

    const std::string& python() const { return python_; }
    static const std::string& harness_source();

private:
    std::string python_;
};

}  // namespace repairgraph::sandbox
