#pragma once

// Critical-surface mapping: per grid point of fixed parameters, a certified
// lower bound on q (bisect_q_psi) paired with an MC transition estimate (the
// q where the one-arm probability at fixed k crosses 0.5). The MC proxy has
// finite-size bias left uncorrected; the certified column is a rigorous lower
// bound and must sit below the estimated transition.

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "percert/certificate.hpp"
#include "percert/monte_carlo.hpp"

namespace percert {

struct TransitionEstimate {
  MCEstimate estimate;  // statistic = crossing; mean = q, std_error = q uncertainty
  std::vector<std::string> flags;
  int k = 0;
  std::uint64_t replicas_per_eval = 0;
  double tol = 0.0;
  int evaluations = 0;
};

// Bisection in q of the one-arm probability at radius k against threshold
// 0.5. Every evaluation reuses the same seed, so the empirical one-arm
// frequency is pointwise monotone in q (shared edge uniforms) and the
// bisection bracket is exact for the empirical function; the reported error
// adds the binomial noise converted through the local slope.
inline TransitionEstimate mc_transition_estimate(const GraphSpec& spec,
                                                 const std::vector<double>& p_fixed, int k,
                                                 std::uint64_t replicas, double tol,
                                                 std::uint64_t seed, int threads = 1,
                                                 std::size_t budget = kDefaultVertexBudget) {
  if (!(tol > 0.0)) throw std::invalid_argument("mc_transition_estimate: tol must be > 0");
  if (p_fixed.size() + 1 != static_cast<std::size_t>(spec.colour_count))
    throw std::invalid_argument("mc_transition_estimate: expected " +
                                std::to_string(spec.colour_count - 1) + " fixed parameters");
  const Vertex x = vertex_orbits(spec).front();
  const OneArmSimulator sim(spec, x, k, budget);

  TransitionEstimate out;
  out.k = k;
  out.replicas_per_eval = replicas;
  out.tol = tol;

  auto eval = [&](double q) {
    ParamVector params{p_fixed};
    params.values.push_back(q);
    params.validate(spec.colour_count);
    auto sums = detail::run_replicas<detail::CountSums>(replicas, threads, [&] {
      return [&, scratch = detail::ClusterScratch{}](detail::CountSums& acc,
                                                     std::uint64_t r) mutable {
        acc.add(sim.replica(params, replica_seed(seed, r), scratch) ? 1 : 0);
      };
    });
    ++out.evaluations;
    return detail::moments(replicas, static_cast<double>(sums.sum),
                           static_cast<double>(sums.sum_sq));
  };

  constexpr double threshold = 0.5;
  const MeanSE at_zero = eval(0.0);
  if (at_zero.mean >= threshold) {
    out.flags.push_back("crossing_at_or_below_q0");
    out.estimate = MCEstimate{Statistic::crossing, 0.0, at_zero.std_error, replicas, seed};
    return out;
  }
  const MeanSE at_one = eval(1.0);
  if (at_one.mean < threshold) {
    out.flags.push_back("no_crossing_below_q1");
    out.estimate = MCEstimate{Statistic::crossing, 1.0, at_one.std_error, replicas, seed};
    return out;
  }

  double lo = 0.0, hi = 1.0;
  double val_lo = at_zero.mean, val_hi = at_one.mean;
  MeanSE last = at_one;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    last = eval(mid);
    if (last.mean < threshold) {
      lo = mid;
      val_lo = last.mean;
    } else {
      hi = mid;
      val_hi = last.mean;
    }
  }
  const double q = 0.5 * (lo + hi);
  const double slope = (val_hi - val_lo) / (hi - lo);
  const double noise = slope > 1e-9 ? std::min(1.0, last.std_error / slope) : 1.0;
  out.estimate =
      MCEstimate{Statistic::crossing, q, 0.5 * (hi - lo) + noise, replicas, seed};
  return out;
}

struct SweepRecord {
  std::size_t grid_index = 0;
  std::vector<double> p_fixed;
  double q_certified = 0.0;
  double q_mc = 0.0;
  double q_mc_err = 0.0;
  int max_radius_used = 0;
  int k_used = 0;
  std::uint64_t replicas = 0;
  std::uint64_t point_seed = 0;
  std::vector<std::string> flags;
  bool ok = true;
};

struct SweepConfig {
  int max_radius = 2;
  int k = 32;
  std::uint64_t replicas = 20000;
  double certify_tol = 1e-3;
  double transition_tol = 5e-3;
  std::uint64_t master_seed = 1;
  int threads = 1;  // worker threads over grid points
  std::size_t vertex_budget = kDefaultVertexBudget;
  CertifyOptions certify;
};

inline SweepRecord sweep_point(const GraphSpec& spec, std::size_t index,
                               const std::vector<double>& p_fixed, const SweepConfig& config) {
  SweepRecord rec;
  rec.grid_index = index;
  rec.p_fixed = p_fixed;
  rec.max_radius_used = config.max_radius;
  rec.k_used = config.k;
  rec.replicas = config.replicas;
  rec.point_seed = replica_seed(config.master_seed, index);
  try {
    const auto bound =
        bisect_q_psi(spec, p_fixed, config.max_radius, config.certify_tol, config.certify);
    rec.q_certified = bound.q_lower;
    if (bound.failed_at_zero) rec.flags.push_back("no_certificate_at_q0");

    const auto transition = mc_transition_estimate(spec, p_fixed, config.k, config.replicas,
                                                   config.transition_tol, rec.point_seed,
                                                   /*threads=*/1, config.vertex_budget);
    rec.q_mc = transition.estimate.mean;
    rec.q_mc_err = transition.estimate.std_error;
    rec.flags.insert(rec.flags.end(), transition.flags.begin(), transition.flags.end());
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.flags.push_back(std::string("error:") + e.what());
  }
  return rec;
}

// Runs every grid point not listed in `skip` (indices of already-completed
// rows when resuming). Points are independent jobs on a work queue; each
// point draws its own seed from (master seed, grid index), so results are
// identical no matter how the queue is scheduled. Records are returned in
// grid order.
inline std::vector<SweepRecord> sweep_surface(const GraphSpec& spec,
                                              const std::vector<std::vector<double>>& grid,
                                              const SweepConfig& config,
                                              const std::vector<std::size_t>& skip = {}) {
  std::vector<bool> skip_mask(grid.size(), false);
  for (std::size_t s : skip)
    if (s < grid.size()) skip_mask[s] = true;

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!skip_mask[i]) todo.push_back(i);

  std::vector<SweepRecord> records(todo.size());
  const int workers =
      std::max(1, std::min<int>(detail::resolve_threads(config.threads),
                                static_cast<int>(std::min<std::size_t>(todo.size(), 64))));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const std::size_t slot = next.fetch_add(1);
          if (slot >= todo.size()) break;
          records[slot] = sweep_point(spec, todo[slot], grid[todo[slot]], config);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

}  // namespace percert
