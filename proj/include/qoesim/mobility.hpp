#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/topology.hpp"
#include "qoesim/visit_matrix.hpp"

namespace qoesim {

/// Exploration / preferential-return mobility parameters.
///
/// Jump and wait laws are truncated power laws with density proportional to
/// v^(-1-exponent). Unset bounds are filled in by resolve():
///   wait in [T/1e3, T], jump in [median nearest-neighbour distance, extent diagonal].
struct MobilityParams {
  double rho = 0.6;
  double gamma = 0.21;
  double alpha = 0.55;
  double beta = 0.8;
  std::optional<double> jump_min;
  std::optional<double> jump_max;
  std::optional<double> wait_min;
  std::optional<double> wait_max;
  double horizon = 1.0;

  /// Song et al. fitted constants (gamma = 0.21).
  static MobilityParams s1() { return MobilityParams{}; }

  /// Low-exploration scenario fitted on operator data (gamma = 3).
  static MobilityParams s2() {
    MobilityParams p;
    p.gamma = 3.0;
    return p;
  }

  /// Copy with all optional bounds set, validated against the topology scale.
  MobilityParams resolve(const Topology& topo) const {
    MobilityParams p = *this;
    detail::require(horizon > 0.0 && std::isfinite(horizon), "mobility: horizon must be > 0");
    if (!p.wait_min) p.wait_min = horizon * 1e-3;
    if (!p.wait_max) p.wait_max = horizon;
    if (!p.jump_max) p.jump_max = topo.extent().diagonal();
    if (!p.jump_min) p.jump_min = median_nearest_neighbor_distance(topo);
    // Single-site or coincident layouts have no natural scale; any positive
    // jump lands on the same partition cell.
    if (*p.jump_max <= 0.0) p.jump_max = 1.0;
    if (*p.jump_min <= 0.0 || *p.jump_min >= *p.jump_max) p.jump_min = *p.jump_max * 1e-3;
    p.validate();
    return p;
  }

  void validate() const {
    detail::require(rho >= 0.0 && rho <= 1.0, "mobility: rho must be in [0, 1]");
    detail::require(gamma >= 0.0, "mobility: gamma must be >= 0");
    detail::require(alpha > 0.0, "mobility: alpha must be > 0");
    detail::require(beta > 0.0, "mobility: beta must be > 0");
    detail::require(horizon > 0.0, "mobility: horizon must be > 0");
    detail::require(jump_min && jump_max && *jump_min > 0.0 && *jump_min < *jump_max,
                    "mobility: need 0 < jump_min < jump_max");
    detail::require(wait_min && wait_max && *wait_min > 0.0 && *wait_min < *wait_max,
                    "mobility: need 0 < wait_min < wait_max");
  }
};

/// rho * S^-gamma, clamped to [0, 1].
inline double exploration_probability(double rho, double gamma, std::uint64_t distinct_visited) {
  if (distinct_visited == 0) throw InputError("exploration_probability: S must be >= 1");
  const double p = rho * std::pow(static_cast<double>(distinct_visited), -gamma);
  return std::clamp(p, 0.0, 1.0);
}

/// Inverse-CDF draw from the power law with density proportional to
/// v^(-1-exponent) truncated to [lo, hi].
inline double sample_power_law(double exponent, double lo, double hi, Rng& rng) {
  if (!(exponent > 0.0) || !(lo > 0.0) || !(lo < hi))
    throw InputError("sample_power_law: need exponent > 0 and 0 < lo < hi");
  const double a = std::pow(lo, -exponent);
  const double b = std::pow(hi, -exponent);
  const double u = uniform01(rng);
  const double v = std::pow(a - u * (a - b), -1.0 / exponent);
  return std::clamp(v, lo, hi);
}

/// Picks an index with probability counts[j] / sum(counts).
inline std::size_t preferential_return_choice(std::span<const std::uint64_t> counts, Rng& rng) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw InputError("preferential_return_choice: all visit counts are zero");
  std::uint64_t target = uniform_index(rng, total);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (target < counts[j]) return j;
    target -= counts[j];
  }
  return counts.size() - 1;  // unreachable
}

/// Per-user trajectory bookkeeping.
struct UserTrajectoryState {
  std::vector<std::uint64_t> visit_counts;  // per site
  std::vector<SiteId> visited;              // in order of first visit
  std::uint64_t visit_total = 0;
  SiteId current_site = 0;
  double elapsed = 0.0;

  std::uint64_t distinct_visited() const { return visited.size(); }

  void visit(SiteId j) {
    if (visit_counts[j]++ == 0) visited.push_back(j);
    ++visit_total;
    current_site = j;
  }
};

/// One user's row of the visit matrix. Deterministic in `user_seed`.
/// `params` must already be resolved against `topo`.
inline std::vector<double> simulate_user(const Topology& topo, const MobilityParams& params,
                                         std::uint64_t user_seed) {
  params.validate();
  const std::size_t m = topo.size();
  const double horizon = params.horizon;
  Rng rng = make_rng(user_seed);

  std::vector<double> row(m, 0.0);
  UserTrajectoryState st;
  st.visit_counts.assign(m, 0);
  st.visit(static_cast<SiteId>(uniform_index(rng, m)));

  while (true) {
    const double wait = sample_power_law(params.beta, *params.wait_min, *params.wait_max, rng);
    if (st.elapsed + wait >= horizon) {
      row[st.current_site] += horizon - st.elapsed;
      st.elapsed = horizon;
      break;
    }
    row[st.current_site] += wait;
    st.elapsed += wait;

    const double p_new = exploration_probability(params.rho, params.gamma, st.distinct_visited());
    if (uniform01(rng) < p_new) {
      const double theta = 2.0 * std::numbers::pi * uniform01(rng);
      const double r = sample_power_law(params.alpha, *params.jump_min, *params.jump_max, rng);
      const Site& here = topo.site(st.current_site);
      st.visit(nearest_site(topo, Point{here.x + r * std::cos(theta), here.y + r * std::sin(theta)}));
    } else {
      // Proportional to visit counts over the visited set (current site included).
      std::uint64_t target = uniform_index(rng, st.visit_total);
      SiteId pick = st.visited.back();
      for (SiteId j : st.visited) {
        if (target < st.visit_counts[j]) {
          pick = j;
          break;
        }
        target -= st.visit_counts[j];
      }
      st.visit(pick);
    }
  }
  return row;
}

inline std::uint64_t user_seed(std::uint64_t master_seed, UserId i) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(i)});
}

/// N independent users; user i draws from a stream derived from
/// (master_seed, i), so the matrix does not depend on the thread count.
inline VisitMatrix simulate_population(const Topology& topo, const MobilityParams& params, std::size_t users,
                                       std::uint64_t master_seed, unsigned threads = 0) {
  detail::require(users >= 1, "simulate_population: N must be >= 1");
  const MobilityParams resolved = params.resolve(topo);
  VisitMatrix out(users, topo.size(), resolved.horizon);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (UserId i = begin; i < end; ++i) {
      const auto row = simulate_user(topo, resolved, user_seed(master_seed, i));
      std::copy(row.begin(), row.end(), out.row(i).begin());
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, users));
  if (threads <= 1) {
    work(0, users);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (users + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(users, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();  // joins
  return out;
}

}  // namespace qoesim
