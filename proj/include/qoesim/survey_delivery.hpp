#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/text.hpp"
#include "qoesim/topology.hpp"
#include "qoesim/visit_matrix.hpp"

namespace qoesim {

enum class DeliveryStrategy { kRandom, kOptimized, kExact };

inline std::string_view to_string(DeliveryStrategy s) {
  switch (s) {
    case DeliveryStrategy::kRandom: return "random";
    case DeliveryStrategy::kOptimized: return "optimized";
    case DeliveryStrategy::kExact: return "exact";
  }
  return "?";
}

inline DeliveryStrategy parse_delivery_strategy(std::string_view s) {
  if (s == "random" || s == "rd") return DeliveryStrategy::kRandom;
  if (s == "optimized" || s == "od" || s == "greedy") return DeliveryStrategy::kOptimized;
  if (s == "exact") return DeliveryStrategy::kExact;
  throw InputError("unknown delivery strategy '" + std::string(s) + "'");
}

struct DeliveryConfig {
  std::size_t budget = 1;
  DeliveryStrategy strategy = DeliveryStrategy::kRandom;
  double xi = 0.2;
  std::size_t n_min = 3;

  void validate(std::size_t users) const {
    detail::require(budget >= 1 && budget <= users, "delivery: need 1 <= B <= N");
    detail::require(xi > 0.0 && xi < 1.0, "delivery: xi must be in (0, 1)");
    detail::require(n_min >= 1, "delivery: n_min must be >= 1");
  }
};

struct SurveyAssignment {
  std::vector<UserId> respondents;  // ascending
  std::vector<SiteId> covered_sites;  // ascending
  double coverage = 0.0;
};

/// Sites where user i spends at least xi * T, per user.
inline std::vector<std::vector<SiteId>> qualifying_sites(const VisitMatrix& visits, double xi) {
  const double threshold = xi * visits.horizon();
  std::vector<std::vector<SiteId>> q(visits.users());
  for (UserId i = 0; i < visits.users(); ++i) {
    const auto r = visits.row(i);
    for (SiteId j = 0; j < r.size(); ++j)
      if (r[j] >= threshold) q[i].push_back(j);
  }
  return q;
}

/// Sites with at least n_min respondents each spending >= xi * T there.
inline std::vector<SiteId> coverage_indicator(const VisitMatrix& visits, std::span<const UserId> respondents,
                                              double xi, std::size_t n_min) {
  const double threshold = xi * visits.horizon();
  std::vector<std::size_t> count(visits.sites(), 0);
  for (UserId i : respondents) {
    detail::require(i < visits.users(), "coverage_indicator: respondent id out of range");
    const auto r = visits.row(i);
    for (SiteId j = 0; j < r.size(); ++j) count[j] += r[j] >= threshold;
  }
  std::vector<SiteId> covered;
  for (SiteId j = 0; j < count.size(); ++j)
    if (count[j] >= n_min) covered.push_back(j);
  return covered;
}

inline SurveyAssignment make_assignment(const VisitMatrix& visits, std::vector<UserId> respondents, double xi,
                                        std::size_t n_min) {
  std::sort(respondents.begin(), respondents.end());
  SurveyAssignment a;
  a.covered_sites = coverage_indicator(visits, respondents, xi, n_min);
  a.coverage = visits.sites() ? static_cast<double>(a.covered_sites.size()) / static_cast<double>(visits.sites()) : 0.0;
  a.respondents = std::move(respondents);
  return a;
}

/// Uniform sample of B distinct user ids out of N, ascending.
inline std::vector<UserId> sample_respondents(std::size_t users, std::size_t budget, Rng& rng) {
  if (budget > users)
    throw InputError("random delivery: budget " + std::to_string(budget) + " exceeds population " +
                     std::to_string(users));
  std::vector<UserId> pool(users);
  std::iota(pool.begin(), pool.end(), UserId{0});
  for (std::size_t k = 0; k < budget; ++k) std::swap(pool[k], pool[k + uniform_index(rng, users - k)]);
  pool.resize(budget);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline SurveyAssignment random_delivery(const VisitMatrix& visits, std::size_t budget, double xi, std::size_t n_min,
                                        Rng& rng) {
  return make_assignment(visits, sample_respondents(visits.users(), budget, rng), xi, n_min);
}

/// Greedy budgeted maximum coverage.
///
/// Each step takes the user maximising, lexicographically:
///   sites newly covered, potential gain (qualifying sites still short of
///   n_min), total qualifying sites, lower id.
/// Stops after B users or once no user raises the potential
///   sum_j min(n_min, qualifying respondents of j) / n_min.
inline SurveyAssignment greedy_max_coverage(const VisitMatrix& visits, std::size_t budget, double xi,
                                            std::size_t n_min) {
  detail::require(budget >= 1, "greedy_max_coverage: B must be >= 1");
  detail::require(n_min >= 1, "greedy_max_coverage: n_min must be >= 1");
  const auto q = qualifying_sites(visits, xi);
  std::vector<std::size_t> count(visits.sites(), 0);
  std::vector<bool> taken(visits.users(), false);
  std::vector<UserId> chosen;

  // Users that can never contribute are skipped up front.
  std::vector<UserId> candidates;
  for (UserId i = 0; i < q.size(); ++i)
    if (!q[i].empty()) candidates.push_back(i);

  while (chosen.size() < budget) {
    using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
    Key best_key{0, 0, 0};
    UserId best = visits.users();
    for (UserId i : candidates) {
      if (taken[i]) continue;
      std::size_t gain_cov = 0;
      std::size_t gain_pot = 0;
      for (SiteId j : q[i]) {
        if (count[j] < n_min) ++gain_pot;
        if (count[j] + 1 == n_min) ++gain_cov;
      }
      const Key key{gain_cov, gain_pot, q[i].size()};
      if (best == visits.users() || key > best_key) {
        best_key = key;
        best = i;
      }
    }
    if (best == visits.users() || std::get<1>(best_key) == 0) break;
    taken[best] = true;
    chosen.push_back(best);
    for (SiteId j : q[best]) ++count[j];
  }
  return make_assignment(visits, std::move(chosen), xi, n_min);
}

inline constexpr std::size_t kDefaultExactUserLimit = 25;

/// Optimal budgeted maximum coverage by depth-first branch and bound.
///
/// Equivalent to the ILP with budget, minimum-time, user-activation and
/// n-visitor coverage constraints: only users with at least one qualifying
/// site may be selected, at most B of them, and a site counts once it has
/// n_min qualifying respondents. Among optimal sets the first one found in
/// include-first DFS order (users sorted by qualifying-site count, then id)
/// is returned.
inline SurveyAssignment exact_max_coverage(const VisitMatrix& visits, std::size_t budget, double xi,
                                           std::size_t n_min, std::size_t max_users = kDefaultExactUserLimit) {
  detail::require(n_min >= 1, "exact_max_coverage: n_min must be >= 1");
  if (visits.users() > max_users)
    throw TractabilityError("exact_max_coverage: " + std::to_string(visits.users()) + " users exceeds the limit of " +
                            std::to_string(max_users) + "; use the greedy solver for large instances");
  const auto q = qualifying_sites(visits, xi);
  const std::size_t m = visits.sites();

  std::vector<UserId> order;
  for (UserId i = 0; i < q.size(); ++i)
    if (!q[i].empty()) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](UserId a, UserId b) { return q[a].size() > q[b].size(); });
  const std::size_t n = order.size();

  // remaining[k][j]: candidates at positions >= k qualifying for site j.
  std::vector<std::vector<std::size_t>> remaining(n + 1, std::vector<std::size_t>(m, 0));
  for (std::size_t k = n; k-- > 0;) {
    remaining[k] = remaining[k + 1];
    for (SiteId j : q[order[k]]) ++remaining[k][j];
  }

  std::vector<std::size_t> count(m, 0);
  std::size_t covered = 0;
  std::vector<UserId> current;
  std::vector<UserId> best_set;
  std::size_t best = 0;

  std::vector<std::size_t> needs;
  std::vector<std::size_t> gains;
  auto upper_bound = [&](std::size_t k, std::size_t budget_left) {
    needs.clear();
    for (SiteId j = 0; j < m; ++j) {
      if (count[j] >= n_min) continue;
      const std::size_t need = n_min - count[j];
      if (need <= remaining[k][j] && need <= budget_left) needs.push_back(need);
    }
    if (needs.empty()) return covered;
    // Covering a set of sites consumes at least sum(need) qualifying
    // incidences, and B' more users bring at most the B' largest counts.
    gains.clear();
    for (std::size_t p = k; p < n; ++p) {
      std::size_t g = 0;
      for (SiteId j : q[order[p]]) g += count[j] < n_min;
      gains.push_back(g);
    }
    const std::size_t take = std::min(budget_left, gains.size());
    std::partial_sort(gains.begin(), gains.begin() + static_cast<std::ptrdiff_t>(take), gains.end(),
                      std::greater<>());
    std::size_t capacity = std::accumulate(gains.begin(), gains.begin() + static_cast<std::ptrdiff_t>(take),
                                           std::size_t{0});
    std::sort(needs.begin(), needs.end());
    std::size_t extra = 0;
    for (std::size_t need : needs) {
      if (need > capacity) break;
      capacity -= need;
      ++extra;
    }
    return covered + extra;
  };

  std::function<void(std::size_t, std::size_t)> search = [&](std::size_t k, std::size_t budget_left) {
    if (covered > best) {
      best = covered;
      best_set = current;
    }
    if (k == n || budget_left == 0) return;
    if (upper_bound(k, budget_left) <= best) return;

    const UserId u = order[k];
    current.push_back(u);
    for (SiteId j : q[u]) covered += (++count[j] == n_min);
    search(k + 1, budget_left - 1);
    for (SiteId j : q[u]) covered -= (count[j]-- == n_min);
    current.pop_back();

    search(k + 1, budget_left);
  };
  search(0, budget);

  return make_assignment(visits, std::move(best_set), xi, n_min);
}

inline SurveyAssignment deliver(const VisitMatrix& visits, const DeliveryConfig& cfg, Rng& rng) {
  cfg.validate(visits.users());
  switch (cfg.strategy) {
    case DeliveryStrategy::kRandom: return random_delivery(visits, cfg.budget, cfg.xi, cfg.n_min, rng);
    case DeliveryStrategy::kOptimized: return greedy_max_coverage(visits, cfg.budget, cfg.xi, cfg.n_min);
    case DeliveryStrategy::kExact: return exact_max_coverage(visits, cfg.budget, cfg.xi, cfg.n_min);
  }
  return {};
}

// File form:
//   # strategy,budget,xi,n_min,respondents,covered_sites,coverage
//   # optimized,10,0.2,3,10,2,0.0147059
//   user
//   <one respondent id per line>
inline void write_assignment(std::ostream& out, const SurveyAssignment& a, const DeliveryConfig& cfg) {
  out << "# strategy,budget,xi,n_min,respondents,covered_sites,coverage\n";
  out << "# " << to_string(cfg.strategy) << ',' << cfg.budget << ',' << text::format_sig6(cfg.xi) << ','
      << cfg.n_min << ',' << a.respondents.size() << ',' << a.covered_sites.size() << ','
      << text::format_sig6(a.coverage) << '\n';
  out << "user\n";
  for (UserId i : a.respondents) out << i << '\n';
}

struct AssignmentFile {
  DeliveryConfig config;
  std::vector<UserId> respondents;
  std::size_t covered_sites = 0;
  double coverage = 0.0;
};

inline AssignmentFile read_assignment(std::istream& in) {
  AssignmentFile f;
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto summary = text::split(text::trim(std::string_view(line).substr(std::min<std::size_t>(line.size(), 1))), ',');
  if (summary.size() != 7) throw InputError("assignment file: malformed summary record");
  f.config.strategy = parse_delivery_strategy(summary[0]);
  f.config.budget = static_cast<std::size_t>(text::parse_integer(summary[1]).value_or(0));
  f.config.xi = text::parse_double(summary[2]).value_or(0.0);
  f.config.n_min = static_cast<std::size_t>(text::parse_integer(summary[3]).value_or(0));
  f.covered_sites = static_cast<std::size_t>(text::parse_integer(summary[5]).value_or(0));
  f.coverage = text::parse_double(summary[6]).value_or(0.0);
  std::getline(in, line);
  if (text::trim(line) != "user") throw InputError("assignment file: expected 'user' header");
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto id = text::parse_integer(line);
    if (!id || *id < 0) throw InputError("assignment file: bad user id '" + line + "'");
    f.respondents.push_back(static_cast<UserId>(*id));
  }
  return f;
}

}  // namespace qoesim
