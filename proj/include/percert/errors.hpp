#pragma once

#include <stdexcept>
#include <string>

namespace percert {

// Graph-spec document is malformed or violates a structural invariant.
class spec_error : public std::runtime_error {
public:
  explicit spec_error(const std::string& what) : std::runtime_error(what) {}
};

// A ball/region grew past the configured vertex budget.
class budget_error : public std::runtime_error {
public:
  budget_error(std::size_t seen, std::size_t budget)
      : std::runtime_error("vertex budget exceeded: " + std::to_string(seen) +
                           " vertices materialized, budget is " + std::to_string(budget)),
        seen(seen), budget(budget) {}
  std::size_t seen;
  std::size_t budget;
};

// Exact enumeration was asked for more internal edges than the limit allows.
class enumeration_limit_error : public std::runtime_error {
public:
  enumeration_limit_error(std::size_t edges, std::size_t limit)
      : std::runtime_error("enumeration limit exceeded: region has " + std::to_string(edges) +
                           " internal edges, limit is " + std::to_string(limit)),
        edges(edges), limit(limit) {}
  std::size_t edges;
  std::size_t limit;
};

}  // namespace percert
