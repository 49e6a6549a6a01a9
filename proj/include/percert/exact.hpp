#pragma once

// Exact within-region connection probabilities and the boundary functional
// psi(x,S) = sum_i p_i sum_{{y,z} in boundary(S), colour i} P(x <->_S y).
//
// Cyclic regions are enumerated exhaustively over all 2^m internal-edge
// configurations (depth-first, with an undo-capable union-find carrying the
// configuration weight). Forest regions short-circuit to unique-path
// products, which is exact and has no edge-count limit. Correctness of both
// routes is pinned to naive_oracle, not to the strategy.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "percert/errors.hpp"
#include "percert/graph.hpp"

namespace percert {

inline constexpr std::size_t kDefaultEnumLimit = 26;
inline constexpr std::size_t kOracleEnumLimit = 20;

// Colour-wise retention probabilities; entry i-1 is p_i, the last entry is q.
struct ParamVector {
  std::vector<double> values;

  static ParamVector uniform(std::size_t colours, double p) {
    return ParamVector{std::vector<double>(colours, p)};
  }

  std::size_t colours() const { return values.size(); }

  double colour_prob(int colour) const {
    if (colour < 1 || static_cast<std::size_t>(colour) > values.size())
      throw std::invalid_argument("colour " + std::to_string(colour) +
                                  " has no retention parameter");
    return values[static_cast<std::size_t>(colour - 1)];
  }

  void validate(int colour_count) const {
    if (values.size() != static_cast<std::size_t>(colour_count))
      throw std::invalid_argument("expected " + std::to_string(colour_count) +
                                  " retention parameters, got " + std::to_string(values.size()));
    for (double p : values)
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("retention parameters must lie in [0,1]");
  }
};

namespace detail {

// Union-find without path compression so merges can be rolled back in stack
// order during the configuration DFS.
class RollbackDsu {
public:
  explicit RollbackDsu(std::size_t n) : parent_(n), rank_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::int32_t>(i);
  }

  std::int32_t find(std::int32_t v) const {
    while (parent_[static_cast<std::size_t>(v)] != v) v = parent_[static_cast<std::size_t>(v)];
    return v;
  }

  bool unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      trail_.push_back({-1, false});
      return false;
    }
    if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(b)]) std::swap(a, b);
    const bool bump = rank_[static_cast<std::size_t>(a)] == rank_[static_cast<std::size_t>(b)];
    parent_[static_cast<std::size_t>(b)] = a;
    if (bump) ++rank_[static_cast<std::size_t>(a)];
    trail_.push_back({b, bump});
    return true;
  }

  void undo() {
    const Record r = trail_.back();
    trail_.pop_back();
    if (r.child < 0) return;
    const std::int32_t p = parent_[static_cast<std::size_t>(r.child)];
    parent_[static_cast<std::size_t>(r.child)] = r.child;
    if (r.bumped) --rank_[static_cast<std::size_t>(p)];
  }

private:
  struct Record {
    std::int32_t child;
    bool bumped;
  };
  std::vector<std::int32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<Record> trail_;
};

struct IndexedEdge {
  std::int32_t u, v;
  double p;
};

class ConfigEnumerator {
public:
  ConfigEnumerator(std::size_t n_vertices, std::vector<IndexedEdge> edges, std::int32_t source,
                   std::vector<std::int32_t> targets)
      : edges_(std::move(edges)),
        targets_(std::move(targets)),
        source_(source),
        dsu_(n_vertices),
        acc_(targets_.size(), 0.0) {}

  void run() { descend(0, 1.0); }

  const std::vector<double>& accumulated() const { return acc_; }
  double weight_sum() const { return weight_sum_; }

private:
  void descend(std::size_t i, double w) {
    if (w == 0.0) return;  // zero-mass subtree; affects neither acc_ nor weight_sum_
    if (i == edges_.size()) {
      weight_sum_ += w;
      const std::int32_t rx = dsu_.find(source_);
      for (std::size_t t = 0; t < targets_.size(); ++t)
        if (dsu_.find(targets_[t]) == rx) acc_[t] += w;
      return;
    }
    const IndexedEdge& e = edges_[i];
    descend(i + 1, w * (1.0 - e.p));
    dsu_.unite(e.u, e.v);
    descend(i + 1, w * e.p);
    dsu_.undo();
  }

  std::vector<IndexedEdge> edges_;
  std::vector<std::int32_t> targets_;
  std::int32_t source_;
  RollbackDsu dsu_;
  std::vector<double> acc_;
  double weight_sum_ = 0.0;
};

inline std::vector<IndexedEdge> index_edges(const Region& region, const ParamVector& params) {
  std::vector<IndexedEdge> out;
  out.reserve(region.internal_edges.size());
  for (const Edge& e : region.internal_edges)
    out.push_back(IndexedEdge{static_cast<std::int32_t>(region.index_of(e.u)),
                              static_cast<std::int32_t>(region.index_of(e.v)),
                              params.colour_prob(e.colour)});
  return out;
}

inline bool edges_form_forest(std::size_t n_vertices, const std::vector<IndexedEdge>& edges) {
  RollbackDsu dsu(n_vertices);
  for (const auto& e : edges)
    if (!dsu.unite(e.u, e.v)) return false;
  return true;
}

// Unique-path products on a forest: reach[v] = product of edge probabilities
// along the unique internal path from the source, 0 if unreachable.
inline std::vector<double> forest_reach_products(std::size_t n_vertices,
                                                 const std::vector<IndexedEdge>& edges,
                                                 std::int32_t source) {
  std::vector<std::vector<std::pair<std::int32_t, double>>> adj(n_vertices);
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back({e.v, e.p});
    adj[static_cast<std::size_t>(e.v)].push_back({e.u, e.p});
  }
  std::vector<double> reach(n_vertices, 0.0);
  std::vector<std::int32_t> stack{source};
  reach[static_cast<std::size_t>(source)] = 1.0;
  while (!stack.empty()) {
    const std::int32_t v = stack.back();
    stack.pop_back();
    for (const auto& [u, p] : adj[static_cast<std::size_t>(v)]) {
      if (reach[static_cast<std::size_t>(u)] != 0.0) continue;
      reach[static_cast<std::size_t>(u)] = reach[static_cast<std::size_t>(v)] * p;
      if (reach[static_cast<std::size_t>(u)] != 0.0) stack.push_back(u);
    }
  }
  return reach;
}

}  // namespace detail

struct ConnectionProbabilities {
  std::vector<double> prob;  // aligned with the targets argument
  double weight_sum = 1.0;   // total configuration mass seen by the enumeration
  bool forest_path = false;  // true when unique-path products were used
};

// Exact P(x <->_S y) for each target y under independent colour-wise edge
// retention on the region's internal edges.
inline ConnectionProbabilities connection_probability_within(const Region& region,
                                                             const ParamVector& params,
                                                             const Vertex& x,
                                                             const std::vector<Vertex>& targets,
                                                             std::size_t limit = kDefaultEnumLimit) {
  const int xi = region.index_of(x);
  if (xi < 0) throw std::invalid_argument("connection_probability_within: x is outside the region");
  std::vector<std::int32_t> target_idx;
  target_idx.reserve(targets.size());
  for (const Vertex& t : targets) {
    const int ti = region.index_of(t);
    if (ti < 0)
      throw std::invalid_argument("connection_probability_within: target is outside the region");
    target_idx.push_back(static_cast<std::int32_t>(ti));
  }

  auto edges = detail::index_edges(region, params);

  ConnectionProbabilities result;
  if (detail::edges_form_forest(region.size(), edges)) {
    const auto reach = detail::forest_reach_products(region.size(), edges,
                                                     static_cast<std::int32_t>(xi));
    result.prob.reserve(target_idx.size());
    for (std::int32_t t : target_idx) result.prob.push_back(reach[static_cast<std::size_t>(t)]);
    result.weight_sum = 1.0;
    result.forest_path = true;
    return result;
  }

  if (edges.size() > limit) throw enumeration_limit_error(edges.size(), limit);
  detail::ConfigEnumerator en(region.size(), std::move(edges), static_cast<std::int32_t>(xi),
                              std::move(target_idx));
  en.run();
  result.prob = en.accumulated();
  result.weight_sum = en.weight_sum();
  result.forest_path = false;
  return result;
}

struct PsiTerm {
  BoundaryEdge edge;
  double connection_probability = 0.0;  // P(x <->_S inside endpoint)
};

struct PsiResult {
  double value = 0.0;
  std::vector<PsiTerm> per_edge_terms;
  std::size_t region_edge_count = 0;
};

// psi(x,S): each boundary edge {y,z} of colour i contributes
// p_i * P(x <->_S y). Connection probabilities are evaluated in one
// enumeration pass over the distinct inside endpoints.
inline PsiResult psi_value(const Region& region, const ParamVector& params, const Vertex& x,
                           std::size_t limit = kDefaultEnumLimit) {
  std::vector<Vertex> targets;
  targets.reserve(region.boundary_edges.size());
  for (const BoundaryEdge& e : region.boundary_edges) targets.push_back(e.inside);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  const auto conn = connection_probability_within(region, params, x, targets, limit);

  PsiResult result;
  result.region_edge_count = region.internal_edges.size();
  result.per_edge_terms.reserve(region.boundary_edges.size());
  for (const BoundaryEdge& e : region.boundary_edges) {
    const auto it = std::lower_bound(targets.begin(), targets.end(), e.inside);
    const double pr = conn.prob[static_cast<std::size_t>(it - targets.begin())];
    result.per_edge_terms.push_back(PsiTerm{e, pr});
    result.value += params.colour_prob(e.colour) * pr;
  }
  return result;
}

// Reference implementation: the plainest possible loop over all 2^m internal
// configurations, rebuilding connectivity from scratch by BFS each time.
// Test oracle for the fast engine; shares nothing with the enumeration path
// above.
inline double naive_oracle(const Region& region, const ParamVector& params, const Vertex& x,
                           const Vertex& y, std::size_t limit = kOracleEnumLimit) {
  const int xi = region.index_of(x);
  const int yi = region.index_of(y);
  if (xi < 0 || yi < 0) throw std::invalid_argument("naive_oracle: vertex outside the region");
  const std::size_t m = region.internal_edges.size();
  if (m > limit) throw enumeration_limit_error(m, limit);

  std::vector<int> eu, ev;
  std::vector<double> ep;
  for (const Edge& e : region.internal_edges) {
    eu.push_back(region.index_of(e.u));
    ev.push_back(region.index_of(e.v));
    ep.push_back(params.colour_prob(e.colour));
  }

  const std::size_t n = region.size();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double w = 1.0;
    for (std::size_t j = 0; j < m; ++j) w *= (mask & (std::uint64_t{1} << j)) ? ep[j] : 1.0 - ep[j];

    std::vector<bool> reached(n, false);
    reached[static_cast<std::size_t>(xi)] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t j = 0; j < m; ++j) {
        if (!(mask & (std::uint64_t{1} << j))) continue;
        const bool ru = reached[static_cast<std::size_t>(eu[j])];
        const bool rv = reached[static_cast<std::size_t>(ev[j])];
        if (ru != rv) {
          reached[static_cast<std::size_t>(eu[j])] = reached[static_cast<std::size_t>(ev[j])] = true;
          grew = true;
        }
      }
    }
    if (reached[static_cast<std::size_t>(yi)]) total += w;
  }
  return total;
}

}  // namespace percert
