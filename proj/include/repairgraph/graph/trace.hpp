#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace repairgraph::graph {

struct TraceStep {
    int step = 0;            // dense, strictly increasing, 0-based
    std::string node;
    std::string digest;      // content hash of the state after the node ran
    double ms = 0.0;

    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

/// Ordered record of every step a run took.
class ExecutionTrace {
  public:
    void push(std::string node, std::string digest, double ms);

    const std::vector<TraceStep>& steps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

    /// Node names in execution order.
    std::vector<std::string> node_sequence() const;

    /// True if both traces visited the same nodes with the same state digests.
    /// Durations are wall-clock noise and intentionally ignored.
    bool same_path(const ExecutionTrace& other) const;

    /// JSON array of {"step", "node", "digest", "ms"} objects.
    nlohmann::json to_json() const;
    static ExecutionTrace from_json(const nlohmann::json& arr);

  private:
    std::vector<TraceStep> steps_;
};

}  // namespace repairgraph::graph
