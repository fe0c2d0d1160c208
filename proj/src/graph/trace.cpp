#include "repairgraph/graph/trace.hpp"

namespace repairgraph::graph {

void ExecutionTrace::push(std::string node, std::string digest, double ms) {
    TraceStep step;
    step.step = static_cast<int>(steps_.size());
    step.node = std::move(node);
    step.digest = std::move(digest);
    step.ms = ms;
    steps_.push_back(std::move(step));
}

std::vector<std::string> ExecutionTrace::node_sequence() const {
    std::vector<std::string> names;
    names.reserve(steps_.size());
    for (const auto& s : steps_) names.push_back(s.node);
    return names;
}

bool ExecutionTrace::same_path(const ExecutionTrace& other) const {
    if (steps_.size() != other.steps_.size()) return false;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i].node != other.steps_[i].node) return false;
        if (steps_[i].digest != other.steps_[i].digest) return false;
    }
    return true;
}

nlohmann::json ExecutionTrace::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : steps_) {
        arr.push_back({{"step", s.step}, {"node", s.node}, {"digest", s.digest}, {"ms", s.ms}});
    }
    return arr;
}

ExecutionTrace ExecutionTrace::from_json(const nlohmann::json& arr) {
    ExecutionTrace trace;
    for (const auto& item : arr) {
        trace.push(item.at("node").get<std::string>(), item.at("digest").get<std::string>(),
                   item.at("ms").get<double>());
    }
    return trace;
}

}  // namespace repairgraph::graph
