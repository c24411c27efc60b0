#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qoesim/experiment.hpp"

namespace qoesim {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline void run_check(std::vector<CheckResult>& out, std::string name, const std::function<std::string()>& body) {
  // An empty detail string means the check passed.
  try {
    std::string msg = body();
    out.push_back({std::move(name), msg.empty(), msg.empty() ? "ok" : std::move(msg)});
  } catch (const std::exception& e) {
    out.push_back({std::move(name), false, std::string("exception: ") + e.what()});
  }
}

}  // namespace detail

/// Structural invariants of one seeded scenario, evaluated on each
/// repetition.
inline std::vector<CheckResult> validate_scenario(const ScenarioConfig& cfg, unsigned threads = 0) {
  std::vector<CheckResult> out;
  ScenarioRunner runner(cfg, threads);
  const double horizon = cfg.mobility.horizon;

  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::string tag = "rep" + std::to_string(rep) + ".";
    const Repetition r = runner.prepare(rep);
    const VisitMatrix& v = *r.visits;

    detail::run_check(out, tag + "visit_rows_sum_to_horizon", [&]() -> std::string {
      for (UserId i = 0; i < v.users(); ++i) {
        const auto row = v.row(i);
        if (std::any_of(row.begin(), row.end(), [](double t) { return t < 0.0; }))
          return "negative time for user " + std::to_string(i);
        if (std::abs(v.row_total(i) - horizon) > 1e-9 * horizon)
          return "user " + std::to_string(i) + " total " + text::format_exact(v.row_total(i));
      }
      return {};
    });

    detail::run_check(out, tag + "underperforming_set", [&]() -> std::string {
      const auto ju = r.topology.underperforming();
      if (ju.size() != runner.omega()) return "size " + std::to_string(ju.size());
      if (!std::is_sorted(ju.begin(), ju.end()) || std::adjacent_find(ju.begin(), ju.end()) != ju.end())
        return "not sorted/unique";
      if (ju.back() >= r.topology.size()) return "id out of range";
      return {};
    });

    detail::run_check(out, tag + "mobility_deterministic", [&]() -> std::string {
      ScenarioRunner again(cfg, threads);
      return *again.prepare(rep).visits == v ? std::string{} : "re-simulation differs";
    });

    const UserProfile prof = runner.profile(r, cfg.profile.mu);
    detail::run_check(out, tag + "tolerances_in_unit_interval", [&]() -> std::string {
      for (double u : prof.truth.tolerances)
        if (!(u > 0.0 && u < 1.0)) return "tolerance " + text::format_exact(u);
      return {};
    });
    if (!cfg.profile.sigma && cfg.profile.psi == 0.0 && !cfg.profile.best_effort) {
      detail::run_check(out, tag + "dissatisfied_fraction_in_target", [&]() -> std::string {
        const double f = prof.truth.dissatisfied_fraction();
        if (f < cfg.profile.target_lo || f > cfg.profile.target_hi) return "fraction " + text::format_sig6(f);
        return {};
      });
    }

    const auto ranking = rank_sites(v, prof.truth.labels, cfg.detection_xi());
    detail::run_check(out, tag + "ranking_is_sorted_permutation", [&]() -> std::string {
      std::vector<SiteId> ids = ranking.ranked_ids;
      std::sort(ids.begin(), ids.end());
      for (SiteId j = 0; j < ids.size(); ++j)
        if (ids[j] != j) return "not a permutation";
      for (std::size_t p = 1; p < ranking.ranked_ids.size(); ++p) {
        const double a = ranking.scores[ranking.ranked_ids[p - 1]], b = ranking.scores[ranking.ranked_ids[p]];
        if (a < b || (a == b && ranking.ranked_ids[p - 1] > ranking.ranked_ids[p])) return "order broken at " + std::to_string(p);
      }
      return {};
    });

    detail::run_check(out, tag + "metric_ranges", [&]() -> std::string {
      const auto m = compute_metrics(ranking.ranked_ids, r.topology.underperforming());
      for (std::size_t k = 0; k < m.precision_at_k.size(); ++k) {
        if (m.precision_at_k[k] < 0.0 || m.precision_at_k[k] > 1.0) return "P@k out of range";
        if (k && m.recall_at_k[k] < m.recall_at_k[k - 1]) return "R@k decreasing";
      }
      if (m.recall_at_k.back() != 1.0) return "R@M != 1";
      if (m.auc_pr < 0.0 || m.auc_pr > 1.0) return "AUC out of range";
      return {};
    });

    if (!cfg.delivery.enabled()) continue;
    const SurveyAssignment a = runner.deliver(r, runner.delivery_config().strategy);
    detail::run_check(out, tag + "assignment_within_budget", [&]() -> std::string {
      const std::size_t budget = runner.delivery_config().budget;
      if (a.respondents.size() > budget) return "too many respondents";
      if (std::adjacent_find(a.respondents.begin(), a.respondents.end()) != a.respondents.end())
        return "duplicate respondent";
      const auto recomputed = coverage_indicator(v, a.respondents, cfg.delivery.xi, cfg.delivery.n_min);
      if (recomputed != a.covered_sites) return "covered sites do not match the respondents";
      if (a.coverage < 0.0 || a.coverage > 1.0) return "coverage out of range";
      return {};
    });

    detail::run_check(out, tag + "gt_only_equals_zero_rates", [&]() -> std::string {
      const PartialLabels gt = ScenarioRunner::ground_truth(prof.truth, a);
      const auto k = runner.selected_k();
      const auto base = detect(v, gt, std::nullopt, cfg.detection_xi(), k);
      const auto zero = detect(v, gt, runner.predict(r, prof.truth, a, ClassifierSpec{0.0, 0.0}), cfg.detection_xi(), k);
      if (base.ranking.ranked_ids != zero.ranking.ranked_ids || base.ranking.scores != zero.ranking.scores)
        return "rankings differ";
      return {};
    });
  }
  return out;
}

}  // namespace qoesim
