#pragma once

// Finite descriptions of infinite quasi-transitive edge-coloured graphs and
// materialization of balls, shells, and arbitrary finite regions.
//
// Two families are supported:
//   * periodic lattices: a typed unit cell repeated over Z^d, with edge rules
//     (type_a, type_b, cell offset, colour);
//   * coloured regular trees: every vertex carries the same set of involutive
//     generators, one per (colour, multiplicity) rule. Vertices are reduced
//     generator words relative to the root.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "percert/errors.hpp"
#include "percert/rng.hpp"

namespace percert {

enum class GraphKind { periodic_lattice, coloured_tree };

// Canonical vertex coordinates. Lattices use (cell in Z^d, type index); trees
// use a reduced generator word in `coord` with type fixed at 0. Shortlex
// ordering on (type, word length, entries) makes the encoding a total order.
struct Vertex {
  std::vector<std::int32_t> coord;
  std::int32_t type = 0;

  friend bool operator==(const Vertex& a, const Vertex& b) {
    return a.type == b.type && a.coord == b.coord;
  }
  friend bool operator!=(const Vertex& a, const Vertex& b) { return !(a == b); }
  friend bool operator<(const Vertex& a, const Vertex& b) {
    if (a.type != b.type) return a.type < b.type;
    if (a.coord.size() != b.coord.size()) return a.coord.size() < b.coord.size();
    return a.coord < b.coord;
  }

  std::uint64_t key() const {
    std::uint64_t h = hash_combine(0x56455254ULL, static_cast<std::uint64_t>(type));
    h = hash_combine(h, coord.size());
    for (std::int32_t c : coord)
      h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)));
    return h;
  }
};

struct VertexHash {
  std::size_t operator()(const Vertex& v) const { return static_cast<std::size_t>(v.key()); }
};

// Lattice rule: for every cell z, vertex (z, a) is joined to (z + offset, b)
// by an edge of the given colour. Identified with (b, a, -offset, colour).
struct EdgeRule {
  int a = 0;
  int b = 0;
  std::vector<std::int32_t> offset;
  int colour = 1;
};

// Tree rule: every vertex carries `multiplicity` involutive generators of the
// given colour.
struct TreeRule {
  int colour = 1;
  int multiplicity = 1;
};

namespace detail {

inline bool rule_tuple_less(int a1, int b1, const std::vector<std::int32_t>& o1, int a2, int b2,
                            const std::vector<std::int32_t>& o2) {
  if (a1 != a2) return a1 < a2;
  if (b1 != b2) return b1 < b2;
  return o1 < o2;
}

inline EdgeRule canonical_rule(const EdgeRule& r) {
  std::vector<std::int32_t> neg(r.offset.size());
  for (std::size_t i = 0; i < r.offset.size(); ++i) neg[i] = -r.offset[i];
  if (rule_tuple_less(r.b, r.a, neg, r.a, r.b, r.offset)) return EdgeRule{r.b, r.a, neg, r.colour};
  return r;
}

}  // namespace detail

class GraphSpec {
public:
  GraphKind kind = GraphKind::periodic_lattice;
  int dimension = 1;
  std::vector<std::string> vertex_types;
  std::vector<EdgeRule> edge_rules;  // lattice only; canonicalized by validate()
  std::vector<TreeRule> tree_rules;  // tree only
  int colour_count = 1;

  // Tree generators expanded from the rules; gen_colour[g] is the colour of
  // generator g. Filled by validate().
  std::vector<int> gen_colour;

  int type_count() const { return static_cast<int>(vertex_types.size()); }

  int degree_of_type(int t) const {
    if (kind == GraphKind::coloured_tree) return static_cast<int>(gen_colour.size());
    int d = 0;
    for (const auto& r : edge_rules) d += (r.a == t) + (r.b == t);
    return d;
  }

  // Number of colour-c edges incident to a type-t vertex.
  int colour_degree_of_type(int t, int c) const {
    if (kind == GraphKind::coloured_tree) {
      int d = 0;
      for (int gc : gen_colour) d += (gc == c);
      return d;
    }
    int d = 0;
    for (const auto& r : edge_rules)
      if (r.colour == c) d += (r.a == t) + (r.b == t);
    return d;
  }

  Vertex origin_vertex(int type = 0) const {
    if (kind == GraphKind::coloured_tree) return Vertex{{}, 0};
    return Vertex{std::vector<std::int32_t>(static_cast<std::size_t>(dimension), 0),
                  static_cast<std::int32_t>(type)};
  }

  bool is_valid_vertex(const Vertex& v) const {
    if (kind == GraphKind::coloured_tree) {
      if (v.type != 0) return false;
      const int gens = static_cast<int>(gen_colour.size());
      for (std::size_t i = 0; i < v.coord.size(); ++i) {
        if (v.coord[i] < 0 || v.coord[i] >= gens) return false;
        if (i > 0 && v.coord[i] == v.coord[i - 1]) return false;  // word must be reduced
      }
      return true;
    }
    return v.type >= 0 && v.type < type_count() &&
           v.coord.size() == static_cast<std::size_t>(dimension);
  }

  // Enumerates (neighbour, colour) pairs of v in canonical rule order.
  template <typename Fn>
  void for_each_neighbour(const Vertex& v, Fn&& fn) const {
    if (kind == GraphKind::coloured_tree) {
      for (int g = 0; g < static_cast<int>(gen_colour.size()); ++g) {
        Vertex u = v;
        if (!u.coord.empty() && u.coord.back() == g) {
          u.coord.pop_back();
        } else {
          u.coord.push_back(g);
        }
        fn(std::move(u), gen_colour[static_cast<std::size_t>(g)]);
      }
      return;
    }
    for (const auto& r : edge_rules) {
      if (r.a == v.type) {
        Vertex u = v;
        for (int i = 0; i < dimension; ++i)
          u.coord[static_cast<std::size_t>(i)] += r.offset[static_cast<std::size_t>(i)];
        u.type = r.b;
        fn(std::move(u), r.colour);
      }
      if (r.b == v.type) {
        Vertex u = v;
        for (int i = 0; i < dimension; ++i)
          u.coord[static_cast<std::size_t>(i)] -= r.offset[static_cast<std::size_t>(i)];
        u.type = r.a;
        fn(std::move(u), r.colour);
      }
    }
  }

  // Checks structural invariants, canonicalizes rules, and verifies the
  // realized graph on a finite window (connectivity, type coverage).
  void validate();

private:
  void validate_realization() const;
};

// Undirected internal edge with endpoints ordered canonically (u < v).
struct Edge {
  Vertex u, v;
  int colour = 1;
};

// Edge with exactly one endpoint in the region; `inside` is that endpoint.
struct BoundaryEdge {
  Vertex inside, outside;
  int colour = 1;
};

inline std::uint64_t edge_key(const Vertex& a, const Vertex& b, int colour) {
  const Vertex* lo = &a;
  const Vertex* hi = &b;
  if (*hi < *lo) std::swap(lo, hi);
  std::uint64_t h = hash_combine(0x45444745ULL, lo->key());
  h = hash_combine(h, hi->key());
  return hash_combine(h, static_cast<std::uint64_t>(colour));
}

inline std::uint64_t edge_key(const Edge& e) { return edge_key(e.u, e.v, e.colour); }

// A finite vertex set S with its induced internal edges and edge boundary.
// Vertices are sorted; edge lists are sorted and duplicate-free under the
// undirected identification. Immutable after construction.
struct Region {
  std::vector<Vertex> vertices;
  std::vector<Edge> internal_edges;
  std::vector<BoundaryEdge> boundary_edges;

  bool contains(const Vertex& v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
  }
  // Index into `vertices`, or -1.
  int index_of(const Vertex& v) const {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || !(*it == v)) return -1;
    return static_cast<int>(it - vertices.begin());
  }
  std::size_t size() const { return vertices.size(); }
};

// Ball with per-vertex distances from the root (aligned with region.vertices).
struct Ball {
  Region region;
  Vertex root;
  int radius = 0;
  std::vector<int> dist;
};

inline constexpr std::size_t kDefaultVertexBudget = 1000000;

namespace detail {

inline void check_vertex(const GraphSpec& spec, const Vertex& v, const char* what) {
  if (!spec.is_valid_vertex(v))
    throw std::invalid_argument(std::string(what) + ": not a valid vertex of this graph spec");
}

}  // namespace detail

// Builds the induced region on an explicit vertex set.
inline Region region_from_vertices(const GraphSpec& spec, std::vector<Vertex> verts) {
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  Region region;
  region.vertices = std::move(verts);
  for (const Vertex& v : region.vertices) {
    spec.for_each_neighbour(v, [&](Vertex u, int colour) {
      if (region.contains(u)) {
        if (v < u) region.internal_edges.push_back(Edge{v, std::move(u), colour});
      } else {
        region.boundary_edges.push_back(BoundaryEdge{v, std::move(u), colour});
      }
    });
  }
  auto edge_less = [](const Edge& x, const Edge& y) {
    if (!(x.u == y.u)) return x.u < y.u;
    if (!(x.v == y.v)) return x.v < y.v;
    return x.colour < y.colour;
  };
  auto bedge_less = [](const BoundaryEdge& x, const BoundaryEdge& y) {
    if (!(x.inside == y.inside)) return x.inside < y.inside;
    if (!(x.outside == y.outside)) return x.outside < y.outside;
    return x.colour < y.colour;
  };
  std::sort(region.internal_edges.begin(), region.internal_edges.end(), edge_less);
  std::sort(region.boundary_edges.begin(), region.boundary_edges.end(), bedge_less);
  return region;
}

// BFS ball of radius k around root; throws budget_error if the vertex count
// passes the budget.
inline Ball make_ball(const GraphSpec& spec, const Vertex& root, int k,
                      std::size_t budget = kDefaultVertexBudget) {
  if (k < 0) throw std::invalid_argument("make_ball: radius must be >= 0");
  detail::check_vertex(spec, root, "make_ball");

  std::unordered_map<Vertex, int, VertexHash> dist;
  dist.emplace(root, 0);
  std::queue<Vertex> frontier;
  frontier.push(root);
  while (!frontier.empty()) {
    Vertex v = std::move(frontier.front());
    frontier.pop();
    const int dv = dist.at(v);
    if (dv == k) continue;
    spec.for_each_neighbour(v, [&](Vertex u, int) {
      if (dist.find(u) != dist.end()) return;
      if (dist.size() + 1 > budget) throw budget_error(dist.size() + 1, budget);
      dist.emplace(u, dv + 1);
      frontier.push(std::move(u));
    });
  }

  std::vector<Vertex> verts;
  verts.reserve(dist.size());
  for (const auto& [v, d] : dist) verts.push_back(v);

  Ball ball;
  ball.root = root;
  ball.radius = k;
  ball.region = region_from_vertices(spec, std::move(verts));
  ball.dist.resize(ball.region.vertices.size());
  for (std::size_t i = 0; i < ball.region.vertices.size(); ++i)
    ball.dist[i] = dist.at(ball.region.vertices[i]);
  return ball;
}

inline Region generate_ball(const GraphSpec& spec, const Vertex& root, int k,
                            std::size_t budget = kDefaultVertexBudget) {
  return make_ball(spec, root, k, budget).region;
}

// The vertex shell of radius k: ball(k) minus ball(k-1).
inline std::vector<Vertex> shell(const GraphSpec& spec, const Vertex& root, int k,
                                 std::size_t budget = kDefaultVertexBudget) {
  if (k < 1) throw std::invalid_argument("shell: radius must be >= 1");
  Ball ball = make_ball(spec, root, k, budget);
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < ball.region.vertices.size(); ++i)
    if (ball.dist[i] == ball.radius) out.push_back(ball.region.vertices[i]);
  return out;
}

// One representative per declared vertex type: the origin-cell vertices for a
// lattice, the root for a tree.
inline std::vector<Vertex> vertex_orbits(const GraphSpec& spec) {
  if (spec.kind == GraphKind::coloured_tree) return {spec.origin_vertex()};
  std::vector<Vertex> reps;
  for (int t = 0; t < spec.type_count(); ++t) reps.push_back(spec.origin_vertex(t));
  return reps;
}

inline void GraphSpec::validate() {
  if (colour_count < 1) throw spec_error("colour_count must be >= 1");
  if (vertex_types.empty()) throw spec_error("vertex_types must be non-empty");

  std::vector<bool> colour_seen(static_cast<std::size_t>(colour_count), false);

  if (kind == GraphKind::coloured_tree) {
    if (vertex_types.size() != 1) throw spec_error("coloured_tree requires exactly one vertex type");
    if (!edge_rules.empty()) throw spec_error("coloured_tree takes (colour, multiplicity) rules only");
    if (tree_rules.empty()) throw spec_error("coloured_tree requires at least one generator rule");
    gen_colour.clear();
    for (const auto& r : tree_rules) {
      if (r.colour < 1 || r.colour > colour_count)
        throw spec_error("tree rule colour " + std::to_string(r.colour) + " out of range 1.." +
                         std::to_string(colour_count));
      if (r.multiplicity < 1) throw spec_error("tree rule multiplicity must be >= 1");
      colour_seen[static_cast<std::size_t>(r.colour - 1)] = true;
      for (int m = 0; m < r.multiplicity; ++m) gen_colour.push_back(r.colour);
    }
  } else {
    if (dimension < 1) throw spec_error("lattice dimension must be >= 1");
    if (!tree_rules.empty()) throw spec_error("periodic_lattice takes (a,b,offset,colour) rules only");
    if (edge_rules.empty()) throw spec_error("periodic_lattice requires at least one edge rule");

    std::vector<EdgeRule> canon;
    for (const auto& r : edge_rules) {
      if (r.a < 0 || r.a >= type_count() || r.b < 0 || r.b >= type_count())
        throw spec_error("edge rule references a vertex type out of range");
      if (r.offset.size() != static_cast<std::size_t>(dimension))
        throw spec_error("edge rule offset length must equal dimension");
      if (r.colour < 1 || r.colour > colour_count)
        throw spec_error("edge rule colour " + std::to_string(r.colour) + " out of range 1.." +
                         std::to_string(colour_count));
      const bool zero =
          std::all_of(r.offset.begin(), r.offset.end(), [](std::int32_t x) { return x == 0; });
      if (r.a == r.b && zero)
        throw spec_error("self-loop edge rule (a == b, zero offset) is not allowed");
      canon.push_back(detail::canonical_rule(r));
    }
    std::sort(canon.begin(), canon.end(), [](const EdgeRule& x, const EdgeRule& y) {
      if (x.a != y.a) return x.a < y.a;
      if (x.b != y.b) return x.b < y.b;
      if (x.offset != y.offset) return x.offset < y.offset;
      return x.colour < y.colour;
    });
    canon.erase(std::unique(canon.begin(), canon.end(),
                            [](const EdgeRule& x, const EdgeRule& y) {
                              return x.a == y.a && x.b == y.b && x.offset == y.offset &&
                                     x.colour == y.colour;
                            }),
                canon.end());
    for (std::size_t i = 1; i < canon.size(); ++i) {
      const auto& p = canon[i - 1];
      const auto& c = canon[i];
      if (p.a == c.a && p.b == c.b && p.offset == c.offset)
        throw spec_error("edge rules assign two colours to the same vertex pair");
    }
    edge_rules = std::move(canon);
    for (const auto& r : edge_rules) colour_seen[static_cast<std::size_t>(r.colour - 1)] = true;
  }

  for (int c = 0; c < colour_count; ++c)
    if (!colour_seen[static_cast<std::size_t>(c)])
      throw spec_error("colour " + std::to_string(c + 1) + " appears in no edge rule");

  validate_realization();
}

// Connectivity and local-finiteness check on a finite window of the realized
// graph. Full verification is not decidable from rules alone; a window of
// cell-radius 3 * max offset catches rule-level errors (disconnected
// sublattices, unreachable types) for the supported families.
inline void GraphSpec::validate_realization() const {
  if (kind == GraphKind::coloured_tree) return;  // connected by construction

  std::int64_t max_off = 1;
  for (const auto& r : edge_rules)
    for (std::int32_t o : r.offset) max_off = std::max<std::int64_t>(max_off, std::abs(static_cast<std::int64_t>(o)));
  std::int64_t box = 3 * max_off;
  auto window_count = [&](std::int64_t b) {
    double n = static_cast<double>(type_count());
    for (int i = 0; i < dimension; ++i) n *= static_cast<double>(2 * b + 1);
    return n;
  };
  while (box > 3 && window_count(box) > 250000.0) box /= 2;
  if (window_count(box) > 250000.0) return;  // window too large to check; skip

  std::vector<Vertex> verts;
  std::vector<std::int32_t> cell(static_cast<std::size_t>(dimension), static_cast<std::int32_t>(-box));
  for (;;) {
    for (int t = 0; t < type_count(); ++t) verts.push_back(Vertex{cell, t});
    int i = 0;
    for (; i < dimension; ++i) {
      if (cell[static_cast<std::size_t>(i)] < box) {
        ++cell[static_cast<std::size_t>(i)];
        break;
      }
      cell[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(-box);
    }
    if (i == dimension) break;
  }

  std::sort(verts.begin(), verts.end());
  auto index_of = [&](const Vertex& v) -> int {
    auto it = std::lower_bound(verts.begin(), verts.end(), v);
    if (it == verts.end() || !(*it == v)) return -1;
    return static_cast<int>(it - verts.begin());
  };

  std::vector<int> comp(verts.size(), -1);
  std::queue<int> q;
  comp[0] = 0;
  q.push(0);
  std::size_t reached = 1;
  while (!q.empty()) {
    int i = q.front();
    q.pop();
    for_each_neighbour(verts[static_cast<std::size_t>(i)], [&](Vertex u, int) {
      int j = index_of(u);
      if (j < 0 || comp[static_cast<std::size_t>(j)] == 0) return;
      comp[static_cast<std::size_t>(j)] = 0;
      ++reached;
      q.push(j);
    });
  }
  if (reached != verts.size())
    throw spec_error("realized graph is disconnected on the validation window (" +
                     std::to_string(reached) + " of " + std::to_string(verts.size()) +
                     " vertices reachable)");
}

}  // namespace percert
