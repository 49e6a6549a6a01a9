#pragma once

// Seeded Monte Carlo estimators on finite balls: one-arm probabilities,
// truncated susceptibility, decay-rate fits, and the Russo-formula
// consistency check.
//
// Every edge draw is a pure function of (replica stream, canonical edge key),
// so results do not depend on exploration order, thread count, or whether the
// ball was materialized. Lattice balls are materialized once (they grow
// polynomially); tree balls grow exponentially, so tree replicas explore the
// open cluster lazily and never build the ball. Replica statistics are
// aggregated as exact integer sums, which keeps estimates bit-identical under
// any thread partitioning.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <unordered_set>
#include <vector>

#include "percert/errors.hpp"
#include "percert/exact.hpp"
#include "percert/graph.hpp"
#include "percert/rng.hpp"

namespace percert {

enum class Statistic { one_arm, chi_truncated, theta_proxy, pivotal_count, crossing };

struct MCEstimate {
  Statistic statistic = Statistic::one_arm;
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(replicas)
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
};

struct MeanSE {
  double mean = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline MeanSE moments(std::uint64_t n, double sum, double sum_sq) {
  MeanSE out;
  if (n == 0) return out;
  out.mean = sum / static_cast<double>(n);
  if (n >= 2) {
    const double ss = sum_sq - sum * out.mean;
    const double var = ss > 0.0 ? ss / static_cast<double>(n - 1) : 0.0;
    out.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

// Runs `replicas` independent replicas split into contiguous chunks, one per
// thread. make_worker() is invoked once per thread; the returned callable is
// applied as worker(acc, replica_index). Acc must merge commutatively (all
// accumulators here are integer sums).
template <typename Acc, typename WorkerFactory>
Acc run_replicas(std::uint64_t replicas, int threads, WorkerFactory&& make_worker) {
  const int T = std::max(1, std::min<int>(resolve_threads(threads),
                                          static_cast<int>(std::min<std::uint64_t>(
                                              replicas, std::uint64_t{256}))));
  if (T <= 1) {
    Acc acc;
    auto worker = make_worker();
    for (std::uint64_t r = 0; r < replicas; ++r) worker(acc, r);
    return acc;
  }
  std::vector<Acc> parts(static_cast<std::size_t>(T));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(T));
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (replicas + static_cast<std::uint64_t>(T) - 1) / static_cast<std::uint64_t>(T);
  for (int t = 0; t < T; ++t) {
    pool.emplace_back([&, t] {
      try {
        auto worker = make_worker();
        const std::uint64_t lo = static_cast<std::uint64_t>(t) * chunk;
        const std::uint64_t hi = std::min(replicas, lo + chunk);
        for (std::uint64_t r = lo; r < hi; ++r) worker(parts[static_cast<std::size_t>(t)], r);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  Acc acc;
  for (const auto& p : parts) acc.merge(p);
  return acc;
}

struct CountSums {
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;
  void add(std::uint64_t v) {
    sum += v;
    sum_sq += v * v;
  }
  void merge(const CountSums& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
};

}  // namespace detail

// A region with its deterministic simulation order: edges paired with their
// colour parameters and canonical keys, sorted by canonical encoding, plus
// adjacency in CSR form.
struct SimRegion {
  Region region;
  std::vector<std::int32_t> edge_u, edge_v;
  std::vector<int> edge_colour;
  std::vector<std::uint64_t> edge_key;
  std::vector<std::int32_t> adj_start;   // size n+1
  std::vector<std::int32_t> adj_vertex;  // neighbour index
  std::vector<std::int32_t> adj_edge;    // index into edge_* arrays

  explicit SimRegion(Region r) : region(std::move(r)) {
    const std::size_t n = region.size();
    const std::size_t m = region.internal_edges.size();
    edge_u.reserve(m);
    edge_v.reserve(m);
    edge_colour.reserve(m);
    edge_key.reserve(m);
    std::vector<std::int32_t> deg(n, 0);
    for (const Edge& e : region.internal_edges) {
      const std::int32_t u = static_cast<std::int32_t>(region.index_of(e.u));
      const std::int32_t v = static_cast<std::int32_t>(region.index_of(e.v));
      edge_u.push_back(u);
      edge_v.push_back(v);
      edge_colour.push_back(e.colour);
      edge_key.push_back(percert::edge_key(e));
      ++deg[static_cast<std::size_t>(u)];
      ++deg[static_cast<std::size_t>(v)];
    }
    adj_start.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) adj_start[i + 1] = adj_start[i] + deg[i];
    adj_vertex.resize(2 * m);
    adj_edge.resize(2 * m);
    std::vector<std::int32_t> fill(adj_start.begin(), adj_start.end() - 1);
    for (std::size_t j = 0; j < m; ++j) {
      const std::int32_t u = edge_u[j];
      const std::int32_t v = edge_v[j];
      adj_vertex[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)])] = v;
      adj_edge[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = static_cast<std::int32_t>(j);
      adj_vertex[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)])] = u;
      adj_edge[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = static_cast<std::int32_t>(j);
    }
  }

  std::size_t vertex_count() const { return region.size(); }
  std::size_t edge_count() const { return edge_u.size(); }

  bool edge_open(std::size_t j, const ParamVector& params, std::uint64_t stream) const {
    return keyed_uniform(stream, edge_key[j]) < params.values[static_cast<std::size_t>(edge_colour[j] - 1)];
  }
};

namespace detail {

// Reusable per-thread scratch for cluster BFS over a SimRegion.
struct ClusterScratch {
  std::vector<std::uint32_t> mark;
  std::vector<std::int32_t> queue;
  std::uint32_t epoch = 0;

  void prepare(std::size_t n) {
    if (mark.size() != n) {
      mark.assign(n, 0);
      epoch = 0;
    }
    if (++epoch == 0) {
      std::fill(mark.begin(), mark.end(), 0);
      epoch = 1;
    }
    queue.clear();
  }
  bool visited(std::int32_t v) const { return mark[static_cast<std::size_t>(v)] == epoch; }
  void visit(std::int32_t v) { mark[static_cast<std::size_t>(v)] = epoch; }
};

}  // namespace detail

// One-arm event {x <-> shell of Lambda_k^x} under colour-wise retention.
class OneArmSimulator {
public:
  OneArmSimulator(const GraphSpec& spec, const Vertex& x, int k,
                  std::size_t budget = kDefaultVertexBudget)
      : spec_(&spec), x_(x), k_(k), budget_(budget) {
    if (k < 0) throw std::invalid_argument("one-arm: k must be >= 0");
    detail::check_vertex(spec, x, "one-arm");
    if (spec.kind == GraphKind::periodic_lattice) {
      Ball ball = make_ball(spec, x, k, budget);
      dist_ = std::move(ball.dist);
      sim_.emplace(std::move(ball.region));
      x_index_ = static_cast<std::int32_t>(sim_->region.index_of(x));
    }
  }

  // True when the open cluster of x reaches graph distance exactly k.
  bool replica(const ParamVector& params, std::uint64_t stream,
               detail::ClusterScratch& scratch) const {
    if (k_ == 0) return true;
    if (sim_) return dense_replica(params, stream, scratch);
    return tree_replica(params, stream);
  }

  bool replica(const ParamVector& params, std::uint64_t stream) const {
    detail::ClusterScratch scratch;
    return replica(params, stream, scratch);
  }

private:
  bool dense_replica(const ParamVector& params, std::uint64_t stream,
                     detail::ClusterScratch& scratch) const {
    const SimRegion& sim = *sim_;
    scratch.prepare(sim.vertex_count());
    scratch.visit(x_index_);
    scratch.queue.push_back(x_index_);
    for (std::size_t head = 0; head < scratch.queue.size(); ++head) {
      const std::int32_t v = scratch.queue[head];
      for (std::int32_t a = sim.adj_start[static_cast<std::size_t>(v)];
           a < sim.adj_start[static_cast<std::size_t>(v) + 1]; ++a) {
        const std::int32_t u = sim.adj_vertex[static_cast<std::size_t>(a)];
        if (scratch.visited(u)) continue;
        const std::int32_t j = sim.adj_edge[static_cast<std::size_t>(a)];
        if (!sim.edge_open(static_cast<std::size_t>(j), params, stream)) continue;
        if (dist_[static_cast<std::size_t>(u)] == k_) return true;
        scratch.visit(u);
        scratch.queue.push_back(u);
      }
    }
    return false;
  }

  // Lazy exploration for trees: depth from x equals BFS depth because open
  // clusters in a tree are subtrees. Only the open cluster (plus its closed
  // frontier) is ever touched, so radius-k balls with ~3*2^k vertices cost
  // nothing in the subcritical regime.
  bool tree_replica(const ParamVector& params, std::uint64_t stream) const {
    std::unordered_set<Vertex, VertexHash> visited;
    std::vector<std::pair<Vertex, int>> queue;
    visited.insert(x_);
    queue.push_back({x_, 0});
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Vertex v = queue[head].first;
      const int d = queue[head].second;
      bool hit = false;
      spec_->for_each_neighbour(v, [&](Vertex u, int colour) {
        if (hit || visited.count(u)) return;
        const double p = params.values[static_cast<std::size_t>(colour - 1)];
        if (keyed_uniform(stream, edge_key(v, u, colour)) >= p) return;
        if (d + 1 == k_) {
          hit = true;
          return;
        }
        if (visited.size() + 1 > budget_) throw budget_error(visited.size() + 1, budget_);
        visited.insert(u);
        queue.push_back({std::move(u), d + 1});
      });
      if (hit) return true;
    }
    return false;
  }

  const GraphSpec* spec_;
  Vertex x_;
  int k_;
  std::size_t budget_;
  std::optional<SimRegion> sim_;  // lattice backend
  std::vector<int> dist_;
  std::int32_t x_index_ = 0;
};

// |cluster of x within Lambda_m^x|.
class ChiSimulator {
public:
  ChiSimulator(const GraphSpec& spec, const Vertex& x, int m,
               std::size_t budget = kDefaultVertexBudget)
      : spec_(&spec), x_(x), m_(m), budget_(budget) {
    if (m < 0) throw std::invalid_argument("chi: m must be >= 0");
    detail::check_vertex(spec, x, "chi");
    if (spec.kind == GraphKind::periodic_lattice) {
      Ball ball = make_ball(spec, x, m, budget);
      sim_.emplace(std::move(ball.region));
      x_index_ = static_cast<std::int32_t>(sim_->region.index_of(x));
    }
  }

  std::uint64_t replica(const ParamVector& params, std::uint64_t stream,
                        detail::ClusterScratch& scratch) const {
    if (sim_) {
      const SimRegion& sim = *sim_;
      scratch.prepare(sim.vertex_count());
      scratch.visit(x_index_);
      scratch.queue.push_back(x_index_);
      for (std::size_t head = 0; head < scratch.queue.size(); ++head) {
        const std::int32_t v = scratch.queue[head];
        for (std::int32_t a = sim.adj_start[static_cast<std::size_t>(v)];
             a < sim.adj_start[static_cast<std::size_t>(v) + 1]; ++a) {
          const std::int32_t u = sim.adj_vertex[static_cast<std::size_t>(a)];
          if (scratch.visited(u)) continue;
          const std::int32_t j = sim.adj_edge[static_cast<std::size_t>(a)];
          if (!sim.edge_open(static_cast<std::size_t>(j), params, stream)) continue;
          scratch.visit(u);
          scratch.queue.push_back(u);
        }
      }
      return scratch.queue.size();
    }
    // Lazy tree cluster restricted to depth <= m; paths in a tree never
    // overshoot their endpoint's depth, so the depth cap is exact.
    std::unordered_set<Vertex, VertexHash> visited;
    std::vector<std::pair<Vertex, int>> queue;
    visited.insert(x_);
    queue.push_back({x_, 0});
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Vertex v = queue[head].first;
      const int d = queue[head].second;
      if (d == m_) continue;
      spec_->for_each_neighbour(v, [&](Vertex u, int colour) {
        if (visited.count(u)) return;
        const double p = params.values[static_cast<std::size_t>(colour - 1)];
        if (keyed_uniform(stream, edge_key(v, u, colour)) >= p) return;
        if (visited.size() + 1 > budget_) throw budget_error(visited.size() + 1, budget_);
        visited.insert(u);
        queue.push_back({std::move(u), d + 1});
      });
    }
    return visited.size();
  }

  std::uint64_t replica(const ParamVector& params, std::uint64_t stream) const {
    detail::ClusterScratch scratch;
    return replica(params, stream, scratch);
  }

private:
  const GraphSpec* spec_;
  Vertex x_;
  int m_;
  std::size_t budget_;
  std::optional<SimRegion> sim_;
  std::int32_t x_index_ = 0;
};

inline MCEstimate estimate_one_arm(const GraphSpec& spec, const ParamVector& params,
                                   const Vertex& x, int k, std::uint64_t replicas,
                                   std::uint64_t seed, int threads = 1,
                                   std::size_t budget = kDefaultVertexBudget,
                                   bool as_theta_proxy = false) {
  if (replicas < 1) throw std::invalid_argument("one-arm: replicas must be >= 1");
  params.validate(spec.colour_count);
  const OneArmSimulator sim(spec, x, k, budget);
  auto sums = detail::run_replicas<detail::CountSums>(replicas, threads, [&] {
    return [&, scratch = detail::ClusterScratch{}](detail::CountSums& acc,
                                                   std::uint64_t r) mutable {
      acc.add(sim.replica(params, replica_seed(seed, r), scratch) ? 1 : 0);
    };
  });
  const auto m = detail::moments(replicas, static_cast<double>(sums.sum),
                                 static_cast<double>(sums.sum_sq));
  return MCEstimate{as_theta_proxy ? Statistic::theta_proxy : Statistic::one_arm, m.mean,
                    m.std_error, replicas, seed};
}

inline MCEstimate estimate_chi_truncated(const GraphSpec& spec, const ParamVector& params,
                                         const Vertex& x, int m, std::uint64_t replicas,
                                         std::uint64_t seed, int threads = 1,
                                         std::size_t budget = kDefaultVertexBudget) {
  if (replicas < 1) throw std::invalid_argument("chi: replicas must be >= 1");
  params.validate(spec.colour_count);
  const ChiSimulator sim(spec, x, m, budget);
  auto sums = detail::run_replicas<detail::CountSums>(replicas, threads, [&] {
    return [&, scratch = detail::ClusterScratch{}](detail::CountSums& acc,
                                                   std::uint64_t r) mutable {
      acc.add(sim.replica(params, replica_seed(seed, r), scratch));
    };
  });
  const auto mo = detail::moments(replicas, static_cast<double>(sums.sum),
                                  static_cast<double>(sums.sum_sq));
  return MCEstimate{Statistic::chi_truncated, mo.mean, mo.std_error, replicas, seed};
}

// MC frequency of {x <->_S y} on an explicit region; cross-check against the
// exact engine.
inline MeanSE estimate_connection_within(const Region& region, const ParamVector& params,
                                         const Vertex& x, const Vertex& y, std::uint64_t replicas,
                                         std::uint64_t seed, int threads = 1) {
  const int xi = region.index_of(x);
  const int yi = region.index_of(y);
  if (xi < 0 || yi < 0)
    throw std::invalid_argument("estimate_connection_within: vertex outside the region");
  const SimRegion sim(region);
  auto sums = detail::run_replicas<detail::CountSums>(replicas, threads, [&] {
    return [&, scratch = detail::ClusterScratch{}](detail::CountSums& acc,
                                                   std::uint64_t r) mutable {
      const std::uint64_t stream = replica_seed(seed, r);
      scratch.prepare(sim.vertex_count());
      scratch.visit(static_cast<std::int32_t>(xi));
      scratch.queue.push_back(static_cast<std::int32_t>(xi));
      bool hit = xi == yi;
      for (std::size_t head = 0; head < scratch.queue.size() && !hit; ++head) {
        const std::int32_t v = scratch.queue[head];
        for (std::int32_t a = sim.adj_start[static_cast<std::size_t>(v)];
             a < sim.adj_start[static_cast<std::size_t>(v) + 1]; ++a) {
          const std::int32_t u = sim.adj_vertex[static_cast<std::size_t>(a)];
          if (scratch.visited(u)) continue;
          const std::int32_t j = sim.adj_edge[static_cast<std::size_t>(a)];
          if (!sim.edge_open(static_cast<std::size_t>(j), params, stream)) continue;
          if (u == yi) {
            hit = true;
            break;
          }
          scratch.visit(u);
          scratch.queue.push_back(u);
        }
      }
      acc.add(hit ? 1 : 0);
    };
  });
  return detail::moments(replicas, static_cast<double>(sums.sum),
                         static_cast<double>(sums.sum_sq));
}

struct DecayFit {
  double rate = 0.0;       // magnitude of the fitted slope of log(mean) vs k
  double intercept = 0.0;  // fitted log(mean) at k = 0
  double rms_residual = 0.0;
  std::size_t points_used = 0;
  std::vector<int> excluded;  // radii with non-positive means
};

// Weighted least squares of log(mean) against k. Weights are inverse delta-
// method variances (mean/std_error)^2; exact inputs (std_error 0) get a
// uniform dominant weight.
inline DecayFit fit_decay_rate(const std::vector<std::pair<int, MCEstimate>>& samples) {
  DecayFit fit;
  std::vector<double> ks, ys, ws;
  for (const auto& [k, est] : samples) {
    if (!(est.mean > 0.0)) {
      fit.excluded.push_back(k);
      continue;
    }
    const double rel = est.std_error / est.mean;
    ks.push_back(static_cast<double>(k));
    ys.push_back(std::log(est.mean));
    ws.push_back(1.0 / (rel * rel + 1e-30));
  }
  if (ks.size() < 3)
    throw std::invalid_argument("fit_decay_rate: need at least 3 radii with positive means, have " +
                                std::to_string(ks.size()));
  double sw = 0, swk = 0, swy = 0, swkk = 0, swky = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sw += ws[i];
    swk += ws[i] * ks[i];
    swy += ws[i] * ys[i];
    swkk += ws[i] * ks[i] * ks[i];
    swky += ws[i] * ks[i] * ys[i];
  }
  const double denom = sw * swkk - swk * swk;
  if (denom == 0.0) throw std::invalid_argument("fit_decay_rate: degenerate radii");
  const double slope = (sw * swky - swk * swy) / denom;
  fit.intercept = (swy - slope * swk) / sw;
  fit.rate = -slope;
  double ssr = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = ys[i] - (fit.intercept + slope * ks[i]);
    ssr += ws[i] * r * r;
  }
  fit.rms_residual = std::sqrt(ssr / sw);
  fit.points_used = ks.size();
  return fit;
}

struct RussoReport {
  MeanSE finite_difference;  // central difference of the one-arm probability in p_i
  MeanSE pivotal_sum;        // (1/(1-p_i)) * E[#(colour-i pivotal edges), arm absent]
  double discrepancy_sigma = 0.0;
  bool crn_used = true;  // common random numbers across p_i +/- h
  int colour = 1;
  double h = 0.0;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
};

// Consistency check of Russo's formula for A = {x <-> shell(Lambda_n^x)}:
// the p_i-derivative estimated by central finite differences must agree with
// (1/(1-p_i)) * sum over colour-i edges of P(edge pivotal, A fails).
class RussoSimulator {
public:
  RussoSimulator(const GraphSpec& spec, const Vertex& x, int n,
                 std::size_t budget = kDefaultVertexBudget)
      : sim_(make_ball_region(spec, x, n, budget)) {
    if (n < 1) throw std::invalid_argument("russo: n must be >= 1");
    Ball ball = make_ball(spec, x, n, budget);
    shell_.assign(ball.region.size(), 0);
    bool any_shell = false;
    for (std::size_t i = 0; i < ball.dist.size(); ++i) {
      if (ball.dist[i] == n) {
        shell_[i] = 1;
        any_shell = true;
      }
    }
    if (!any_shell) throw std::invalid_argument("russo: shell of Lambda_n is empty");
    x_index_ = static_cast<std::int32_t>(sim_.region.index_of(x));
  }

  struct Outcome {
    bool arm_plus = false;   // A at p_i + h
    bool arm_minus = false;  // A at p_i - h
    std::uint32_t pivotal = 0;
  };

  Outcome replica(const ParamVector& params, int colour, double h, std::uint64_t stream) const {
    const std::size_t m = sim_.edge_count();
    std::vector<double> u(m);
    for (std::size_t j = 0; j < m; ++j) u[j] = keyed_uniform(stream, sim_.edge_key[j]);

    auto open_at = [&](std::size_t j, double shift) {
      double p = params.values[static_cast<std::size_t>(sim_.edge_colour[j] - 1)];
      if (sim_.edge_colour[j] == colour) p += shift;
      return u[j] < p;
    };

    Outcome out;
    out.arm_plus = arm_event(open_at, h);
    out.arm_minus = arm_event(open_at, -h);

    // Base configuration: component structure, shell marks, pivotal count.
    detail::RollbackDsu dsu(sim_.vertex_count());
    for (std::size_t j = 0; j < m; ++j)
      if (open_at(j, 0.0)) dsu.unite(sim_.edge_u[j], sim_.edge_v[j]);
    std::vector<std::uint8_t> comp_shell(sim_.vertex_count(), 0);
    for (std::size_t i = 0; i < sim_.vertex_count(); ++i)
      if (shell_[i]) comp_shell[static_cast<std::size_t>(dsu.find(static_cast<std::int32_t>(i)))] = 1;
    const std::int32_t rx = dsu.find(x_index_);
    if (!comp_shell[static_cast<std::size_t>(rx)]) {
      // A fails; a closed colour-i edge is pivotal iff opening it joins the
      // cluster of x to a shell-reaching cluster.
      for (std::size_t j = 0; j < m; ++j) {
        if (sim_.edge_colour[j] != colour || open_at(j, 0.0)) continue;
        const std::int32_t ru = dsu.find(sim_.edge_u[j]);
        const std::int32_t rv = dsu.find(sim_.edge_v[j]);
        if ((ru == rx && comp_shell[static_cast<std::size_t>(rv)]) ||
            (rv == rx && comp_shell[static_cast<std::size_t>(ru)]))
          ++out.pivotal;
      }
    }
    return out;
  }

private:
  static Region make_ball_region(const GraphSpec& spec, const Vertex& x, int n,
                                 std::size_t budget) {
    if (n < 1) throw std::invalid_argument("russo: n must be >= 1");
    detail::check_vertex(spec, x, "russo");
    return generate_ball(spec, x, n, budget);
  }

  template <typename OpenAt>
  bool arm_event(OpenAt&& open_at, double shift) const {
    detail::RollbackDsu dsu(sim_.vertex_count());
    for (std::size_t j = 0; j < sim_.edge_count(); ++j)
      if (open_at(j, shift)) dsu.unite(sim_.edge_u[j], sim_.edge_v[j]);
    const std::int32_t rx = dsu.find(x_index_);
    for (std::size_t i = 0; i < sim_.vertex_count(); ++i)
      if (shell_[i] && dsu.find(static_cast<std::int32_t>(i)) == rx) return true;
    return false;
  }

  SimRegion sim_;
  std::vector<std::uint8_t> shell_;
  std::int32_t x_index_ = 0;
};

inline RussoReport russo_consistency(const GraphSpec& spec, const ParamVector& params,
                                     const Vertex& x, int n, int colour, double h,
                                     std::uint64_t replicas, std::uint64_t seed, int threads = 1,
                                     std::size_t budget = kDefaultVertexBudget) {
  if (replicas < 1) throw std::invalid_argument("russo: replicas must be >= 1");
  params.validate(spec.colour_count);
  if (colour < 1 || colour > spec.colour_count)
    throw std::invalid_argument("russo: colour out of range");
  const double p = params.colour_prob(colour);
  if (!(h > 0.0) || !(p - h > 0.0) || !(p + h < 1.0))
    throw std::invalid_argument(
        "russo: need 0 < p_i - h and p_i + h < 1 (derivative and pivotal flip both need interior "
        "p_i)");

  const RussoSimulator sim(spec, x, n, budget);

  struct Acc {
    std::int64_t d_sum = 0;  // arm_plus - arm_minus, in {-1,0,1}
    std::uint64_t d_abs = 0;
    std::uint64_t piv_sum = 0;
    std::uint64_t piv_sq = 0;
    void merge(const Acc& o) {
      d_sum += o.d_sum;
      d_abs += o.d_abs;
      piv_sum += o.piv_sum;
      piv_sq += o.piv_sq;
    }
  };
  auto acc = detail::run_replicas<Acc>(replicas, threads, [&] {
    return [&](Acc& a, std::uint64_t r) {
      const auto out = sim.replica(params, colour, h, replica_seed(seed, r));
      const int d = static_cast<int>(out.arm_plus) - static_cast<int>(out.arm_minus);
      a.d_sum += d;
      a.d_abs += static_cast<std::uint64_t>(d * d);
      a.piv_sum += out.pivotal;
      a.piv_sq += static_cast<std::uint64_t>(out.pivotal) * out.pivotal;
    };
  });

  RussoReport report;
  report.colour = colour;
  report.h = h;
  report.replicas = replicas;
  report.seed = seed;

  const auto d_m = detail::moments(replicas, static_cast<double>(acc.d_sum),
                                   static_cast<double>(acc.d_abs));
  report.finite_difference = MeanSE{d_m.mean / (2.0 * h), d_m.std_error / (2.0 * h)};

  const auto p_m = detail::moments(replicas, static_cast<double>(acc.piv_sum),
                                   static_cast<double>(acc.piv_sq));
  report.pivotal_sum = MeanSE{p_m.mean / (1.0 - p), p_m.std_error / (1.0 - p)};

  const double se2 = report.finite_difference.std_error * report.finite_difference.std_error +
                     report.pivotal_sum.std_error * report.pivotal_sum.std_error;
  const double gap = std::abs(report.finite_difference.mean - report.pivotal_sum.mean);
  report.discrepancy_sigma = se2 > 0.0 ? gap / std::sqrt(se2)
                                        : (gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return report;
}

}  // namespace percert
