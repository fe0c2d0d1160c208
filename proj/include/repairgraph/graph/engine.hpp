#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"

#include "repairgraph/common/digest.hpp"
#include "repairgraph/graph/errors.hpp"
#include "repairgraph/graph/trace.hpp"

namespace repairgraph::graph {

// Reserved sentinels. START marks the entry edge source, END the terminal target.
// Neither carries a handler and END never has outgoing edges.
inline const std::string kStart = "START";
inline const std::string kEnd = "END";

enum class RunOutcome { completed, budget_exhausted, handler_error };

inline const char* to_string(RunOutcome outcome) {
    switch (outcome) {
        case RunOutcome::completed: return "completed";
        case RunOutcome::budget_exhausted: return "budget_exhausted";
        case RunOutcome::handler_error: return "handler_error";
    }
    return "unknown";
}

// Hard backstop against routing bugs; callers layer semantic caps on top.
inline constexpr int kDefaultMaxSteps = 64;

template <typename State>
struct RunResult {
    State state;
    ExecutionTrace trace;
    RunOutcome outcome = RunOutcome::completed;
    std::string error;  // handler error message, empty unless outcome == handler_error
};

/// Validated, immutable node graph. Safe to share across concurrent runs;
/// each run owns its state and executes strictly sequentially.
template <typename State>
class CompiledGraph {
  public:
    using Handler = std::function<State(State)>;
    using Router = std::function<std::string(const State&)>;
    using DigestFn = std::function<std::string(const State&)>;
    using StepObserver = std::function<void(const TraceStep&, const State&)>;

    RunResult<State> run(State initial, int max_steps = kDefaultMaxSteps,
                         const StepObserver& observer = {}) const {
        if (max_steps < 1) throw GraphError("max_steps must be >= 1");
        RunResult<State> result;
        result.state = std::move(initial);
        std::string current = entry_;
        while (static_cast<int>(result.trace.size()) < max_steps) {
            const auto started = std::chrono::steady_clock::now();
            try {
                // Pass a copy so the last good state survives a throwing handler.
                State next = handlers_.at(current)(result.state);
                result.state = std::move(next);
            } catch (const std::exception& ex) {
                result.outcome = RunOutcome::handler_error;
                result.error = std::string(ex.what());
                return result;
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
            result.trace.push(current, digest_(result.state), ms);
            if (observer) observer(result.trace.steps().back(), result.state);

            const std::string next = route_from(current, result.state);
            if (next == kEnd) {
                result.outcome = RunOutcome::completed;
                return result;
            }
            current = next;
        }
        result.outcome = RunOutcome::budget_exhausted;
        return result;
    }

    const std::string& entry() const { return entry_; }
    std::vector<std::string> node_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : handlers_) names.push_back(name);
        return names;
    }

  private:
    template <typename S>
    friend class GraphBuilder;

    struct Conditional {
        Router router;
        std::set<std::string> candidates;
    };

    std::string route_from(const std::string& node, const State& state) const {
        if (auto it = plain_edges_.find(node); it != plain_edges_.end()) return it->second;
        const Conditional& cond = routers_.at(node);
        std::string target = cond.router(state);
        if (!cond.candidates.contains(target)) throw RouteViolationError(node, target);
        return target;
    }

    std::string entry_;
    std::map<std::string, Handler> handlers_;
    std::map<std::string, std::string> plain_edges_;
    std::map<std::string, Conditional> routers_;
    DigestFn digest_;
};

/// Mutable graph definition. Nodes transform a shared state object; plain and
/// conditional edges route between them. compile() validates the definition
/// and freezes it into a CompiledGraph.
template <typename State>
class GraphBuilder {
  public:
    using Handler = typename CompiledGraph<State>::Handler;
    using Router = typename CompiledGraph<State>::Router;
    using DigestFn = typename CompiledGraph<State>::DigestFn;

    GraphBuilder& add_node(const std::string& name, Handler handler) {
        if (name.empty() || name == kStart || name == kEnd) throw ReservedNameError(name);
        if (handlers_.contains(name)) throw DuplicateNodeError(name);
        handlers_.emplace(name, std::move(handler));
        return *this;
    }

    GraphBuilder& add_edge(const std::string& from, const std::string& to) {
        if (from == kStart) return set_entry(to);
        if (from == kEnd) throw ReservedNameError(from);
        if (!handlers_.contains(from)) throw UnknownNodeError(from);
        if (has_route(from)) throw ConflictingRouteError(from);
        plain_edges_.emplace(from, to);
        return *this;
    }

    GraphBuilder& add_conditional_edge(const std::string& from, Router router,
                                       std::set<std::string> candidates) {
        if (!handlers_.contains(from)) throw UnknownNodeError(from);
        if (has_route(from)) throw ConflictingRouteError(from);
        if (candidates.empty()) throw EmptyCandidatesError(from);
        routers_.emplace(from, Conditional{std::move(router), std::move(candidates)});
        return *this;
    }

    GraphBuilder& set_entry(const std::string& name) {
        if (name == kStart || name == kEnd) throw ReservedNameError(name);
        if (!entry_.empty()) throw ConflictingRouteError(kStart);
        entry_ = name;
        return *this;
    }

    /// Override the state digest used for trace steps. Default hashes the
    /// canonical JSON dump of the state.
    GraphBuilder& set_digest(DigestFn digest) {
        digest_ = std::move(digest);
        return *this;
    }

    std::size_t node_count() const { return handlers_.size(); }

    CompiledGraph<State> compile() const {
        if (entry_.empty()) throw MissingEntryError();
        if (!handlers_.contains(entry_)) throw DanglingTargetError(kStart, entry_);

        // Every target must name a declared node or END, and every declared
        // node needs exactly one route out (the builders enforce "at most one").
        for (const auto& [from, to] : plain_edges_) {
            if (to != kEnd && !handlers_.contains(to)) throw DanglingTargetError(from, to);
        }
        for (const auto& [from, cond] : routers_) {
            for (const auto& target : cond.candidates) {
                if (target != kEnd && !handlers_.contains(target))
                    throw DanglingTargetError(from, target);
            }
        }
        for (const auto& [name, _] : handlers_) {
            if (!plain_edges_.contains(name) && !routers_.contains(name))
                throw MissingRouteError(name);
        }

        // Static reachability of END from the entry, over declared targets;
        // router targets are the declared candidate set.
        if (!end_reachable()) throw UnreachableEndError();

        CompiledGraph<State> compiled;
        compiled.entry_ = entry_;
        compiled.handlers_ = handlers_;
        compiled.plain_edges_ = plain_edges_;
        for (const auto& [from, cond] : routers_) {
            compiled.routers_.emplace(
                from, typename CompiledGraph<State>::Conditional{cond.router, cond.candidates});
        }
        compiled.digest_ = digest_ ? digest_ : default_digest();
        return compiled;
    }

  private:
    struct Conditional {
        Router router;
        std::set<std::string> candidates;
    };

    bool has_route(const std::string& from) const {
        return plain_edges_.contains(from) || routers_.contains(from);
    }

    bool end_reachable() const {
        std::set<std::string> seen{entry_};
        std::deque<std::string> frontier{entry_};
        while (!frontier.empty()) {
            const std::string node = frontier.front();
            frontier.pop_front();
            std::vector<std::string> targets;
            if (auto it = plain_edges_.find(node); it != plain_edges_.end()) {
                targets.push_back(it->second);
            } else if (auto rit = routers_.find(node); rit != routers_.end()) {
                targets.assign(rit->second.candidates.begin(), rit->second.candidates.end());
            }
            for (const auto& target : targets) {
                if (target == kEnd) return true;
                if (seen.insert(target).second) frontier.push_back(target);
            }
        }
        return false;
    }

    static DigestFn default_digest() {
        return [](const State& state) {
            if constexpr (std::is_convertible_v<State, nlohmann::json>) {
                const nlohmann::json j = state;
                return digest::fnv1a64_hex(j.dump());
            } else {
                // state type has no JSON view and no digest was set
                return std::string("0000000000000000");
            }
        };
    }

    std::string entry_;
    std::map<std::string, Handler> handlers_;
    std::map<std::string, std::string> plain_edges_;
    std::map<std::string, Conditional> routers_;
    DigestFn digest_;
};

}  // namespace repairgraph::graph
