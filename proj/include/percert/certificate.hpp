#pragma once

// Subcriticality certificates: per-orbit sets S_x with psi(x,S_x) < 1, and
// the rigorous consequences — exponential one-arm decay with rate
// -log(1-eps) per L steps, and the susceptibility bound
// max|S_x| / (1 - max psi). Candidate sets are balls around the orbit
// representatives, searched in increasing radius.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "percert/exact.hpp"
#include "percert/graph.hpp"

namespace percert {

inline constexpr double kDefaultMarginFloor = 1e-9;

struct CertificateEntry {
  int orbit = 0;   // index into vertex_orbits(spec)
  Region region;   // the certifying set S_x
  int radius = 0;  // ball radius of S_x around its representative
  double psi = 0.0;
  double margin = 0.0;  // 1 - psi
};

struct Certificate {
  ParamVector params;
  std::vector<CertificateEntry> entries;
  double epsilon = 0.0;   // 1 - max_x psi(x, S_x)
  int radius_L = 1;       // smallest L >= 1 with every S_x inside Lambda_L^x;
                          // singleton sets still move the arm one edge, so L
                          // is never reported below 1
  double decay_rate_per_L = 0.0;       // -log(1 - epsilon)
  double susceptibility_bound = 0.0;   // max|S_x| / (1 - max psi)
  double margin_floor = kDefaultMarginFloor;
  std::size_t enumeration_limit = kDefaultEnumLimit;
};

struct OrbitDiagnostic {
  int orbit = 0;
  std::vector<int> radii_evaluated;
  double min_psi = 0.0;  // smallest psi over the evaluated radii
  int best_radius = -1;  // radius attaining min_psi
  bool limit_hit = false;
  bool budget_hit = false;
  bool certified = false;
};

struct CertificationResult {
  bool certified = false;
  std::optional<Certificate> certificate;
  std::vector<OrbitDiagnostic> diagnostics;
};

struct CertifyOptions {
  double margin_floor = kDefaultMarginFloor;
  std::size_t enumeration_limit = kDefaultEnumLimit;
  std::size_t vertex_budget = kDefaultVertexBudget;
};

// For each orbit representative x, evaluates psi(x, Lambda_r^x) for
// r = 0..max_radius and keeps the first radius with psi < 1 - margin_floor.
// Failure is an outcome, not an error: the diagnostics report the minimal psi
// per orbit and the radii that were actually evaluated (the radius scan stops
// early if a ball exceeds the enumeration limit or vertex budget).
inline CertificationResult find_certifying_sets(const GraphSpec& spec, const ParamVector& params,
                                                int max_radius,
                                                const CertifyOptions& options = {}) {
  if (max_radius < 0) throw std::invalid_argument("find_certifying_sets: max_radius must be >= 0");
  params.validate(spec.colour_count);

  const auto reps = vertex_orbits(spec);
  CertificationResult result;
  result.certified = true;

  std::vector<CertificateEntry> entries;
  for (std::size_t o = 0; o < reps.size(); ++o) {
    OrbitDiagnostic diag;
    diag.orbit = static_cast<int>(o);
    std::optional<CertificateEntry> found;
    for (int r = 0; r <= max_radius; ++r) {
      Ball ball;
      try {
        ball = make_ball(spec, reps[o], r, options.vertex_budget);
      } catch (const budget_error&) {
        diag.budget_hit = true;
        break;
      }
      PsiResult psi;
      try {
        psi = psi_value(ball.region, params, reps[o], options.enumeration_limit);
      } catch (const enumeration_limit_error&) {
        diag.limit_hit = true;
        break;  // balls only grow with r
      }
      diag.radii_evaluated.push_back(r);
      if (diag.best_radius < 0 || psi.value < diag.min_psi) {
        diag.min_psi = psi.value;
        diag.best_radius = r;
      }
      if (psi.value < 1.0 - options.margin_floor) {
        found = CertificateEntry{static_cast<int>(o), std::move(ball.region), r, psi.value,
                                 1.0 - psi.value};
        break;
      }
    }
    if (found) {
      diag.certified = true;
      entries.push_back(std::move(*found));
    } else {
      result.certified = false;
    }
    result.diagnostics.push_back(std::move(diag));
  }

  if (result.certified) {
    Certificate cert;
    cert.params = params;
    cert.margin_floor = options.margin_floor;
    cert.enumeration_limit = options.enumeration_limit;
    double max_psi = 0.0;
    std::size_t max_size = 0;
    int max_r = 0;
    for (const auto& e : entries) {
      max_psi = std::max(max_psi, e.psi);
      max_size = std::max(max_size, e.region.size());
      max_r = std::max(max_r, e.radius);
    }
    cert.entries = std::move(entries);
    cert.epsilon = 1.0 - max_psi;
    cert.radius_L = std::max(1, max_r);
    cert.decay_rate_per_L = -std::log(1.0 - cert.epsilon);
    cert.susceptibility_bound = static_cast<double>(max_size) / (1.0 - max_psi);
    result.certificate = std::move(cert);
  }
  return result;
}

// chi(p,q) <= max|S_x| / (1 - max psi(x,S_x)) for any valid certificate.
inline double susceptibility_upper_bound(const Certificate& cert) {
  double max_psi = 0.0;
  std::size_t max_size = 0;
  for (const auto& e : cert.entries) {
    max_psi = std::max(max_psi, e.psi);
    max_size = std::max(max_size, e.region.size());
  }
  return static_cast<double>(max_size) / (1.0 - max_psi);
}

// P(x <-> shell at distance k) <= (1-eps)^floor(k/L).
inline double one_arm_upper_bound(const Certificate& cert, std::int64_t k) {
  if (k < 0) throw std::invalid_argument("one_arm_upper_bound: k must be >= 0");
  const std::int64_t L = std::max(1, cert.radius_L);
  return std::pow(1.0 - cert.epsilon, static_cast<double>(k / L));
}

struct QPsiBound {
  double q_lower = 0.0;  // certified: the psi-critical surface is >= q_lower
  bool failed_at_zero = false;
  std::optional<Certificate> certificate;  // certificate at q_lower
  int max_radius = 0;
  double tol = 0.0;
  CertificationResult zero_diagnostics;  // populated when failed_at_zero
};

// Largest q (within tol, by bisection) at which certification succeeds with
// balls of radius <= max_radius. Since psi is increasing in every parameter,
// certification success is a decreasing event in q and the bisection bracket
// is valid; the lower endpoint is returned as the conservative bound.
inline QPsiBound bisect_q_psi(const GraphSpec& spec, const std::vector<double>& p_fixed,
                              int max_radius, double tol, const CertifyOptions& options = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisect_q_psi: tol must be > 0");
  if (p_fixed.size() + 1 != static_cast<std::size_t>(spec.colour_count))
    throw std::invalid_argument("bisect_q_psi: expected " + std::to_string(spec.colour_count - 1) +
                                " fixed parameters");

  auto try_q = [&](double q) {
    ParamVector params{p_fixed};
    params.values.push_back(q);
    return find_certifying_sets(spec, params, max_radius, options);
  };

  QPsiBound bound;
  bound.max_radius = max_radius;
  bound.tol = tol;

  auto at_zero = try_q(0.0);
  if (!at_zero.certified) {
    bound.failed_at_zero = true;
    bound.zero_diagnostics = std::move(at_zero);
    return bound;
  }

  auto at_one = try_q(1.0);
  if (at_one.certified) {
    bound.q_lower = 1.0;
    bound.certificate = std::move(at_one.certificate);
    return bound;
  }

  double lo = 0.0;
  double hi = 1.0;
  std::optional<Certificate> best = std::move(at_zero.certificate);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    auto at_mid = try_q(mid);
    if (at_mid.certified) {
      lo = mid;
      best = std::move(at_mid.certificate);
    } else {
      hi = mid;
    }
  }
  bound.q_lower = lo;
  bound.certificate = std::move(best);
  return bound;
}

}  // namespace percert
