#pragma once

#include <stdexcept>
#include <string>

namespace repairgraph::graph {

class GraphError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DuplicateNodeError : public GraphError {
  public:
    explicit DuplicateNodeError(const std::string& name)
        : GraphError("duplicate node: " + name) {}
};

class ReservedNameError : public GraphError {
  public:
    explicit ReservedNameError(const std::string& name)
        : GraphError("reserved or invalid node name: '" + name + "'") {}
};

class UnknownNodeError : public GraphError {
  public:
    explicit UnknownNodeError(const std::string& name)
        : GraphError("unknown node: " + name) {}
};

class ConflictingRouteError : public GraphError {
  public:
    explicit ConflictingRouteError(const std::string& from)
        : GraphError("node already has an outgoing edge or router: " + from) {}
};

class EmptyCandidatesError : public GraphError {
  public:
    explicit EmptyCandidatesError(const std::string& from)
        : GraphError("conditional edge with empty candidate set on: " + from) {}
};

class DanglingTargetError : public GraphError {
  public:
    DanglingTargetError(const std::string& from, const std::string& target)
        : GraphError("edge target '" + target + "' from '" + from + "' names no declared node") {}
};

class MissingRouteError : public GraphError {
  public:
    explicit MissingRouteError(const std::string& name)
        : GraphError("node has no outgoing edge or router: " + name) {}
};

class UnreachableEndError : public GraphError {
  public:
    UnreachableEndError() : GraphError("END is not reachable from the entry node") {}
};

class MissingEntryError : public GraphError {
  public:
    MissingEntryError() : GraphError("graph has no entry node") {}
};

class RouteViolationError : public GraphError {
  public:
    RouteViolationError(const std::string& from, const std::string& returned)
        : GraphError("router on '" + from + "' returned non-candidate '" + returned + "'") {}
};

}  // namespace repairgraph::graph
