#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/satisfaction.hpp"
#include "qoesim/text.hpp"
#include "qoesim/topology.hpp"
#include "qoesim/visit_matrix.hpp"

namespace qoesim {

enum class LabelProvenance { kGtOnly, kGtPlusPredicted, kFullTruth };

inline std::string_view to_string(LabelProvenance p) {
  switch (p) {
    case LabelProvenance::kGtOnly: return "gt_only";
    case LabelProvenance::kGtPlusPredicted: return "gt_plus_predicted";
    case LabelProvenance::kFullTruth: return "full_truth";
  }
  return "?";
}

struct RankingResult {
  std::vector<double> scores;      // r_j per site
  std::vector<SiteId> ranked_ids;  // descending score, ascending id on ties
  LabelProvenance provenance = LabelProvenance::kFullTruth;

  std::vector<SiteId> top(std::size_t k) const {
    k = std::min(k, ranked_ids.size());
    return {ranked_ids.begin(), ranked_ids.begin() + static_cast<std::ptrdiff_t>(k)};
  }
};

struct DetectionMetrics {
  std::vector<double> precision_at_k;  // index k-1
  std::vector<double> recall_at_k;
  double auc_pr = 0.0;
  double recall_at_omega = 0.0;
};

/// Dissatisfied users spending strictly more than xi of their own total time
/// at site j.
inline std::vector<UserId> dissatisfied_visitors(const VisitMatrix& visits, std::span<const Label> labels, SiteId j,
                                                 double xi) {
  detail::require(labels.size() == visits.users(), "dissatisfied_visitors: one label per user required");
  detail::require(j < visits.sites(), "dissatisfied_visitors: site id out of range");
  std::vector<UserId> out;
  for (UserId i = 0; i < visits.users(); ++i)
    if (labels[i] && visits(i, j) > xi * visits.row_total(i)) out.push_back(i);
  return out;
}

/// r_j = sum over dissatisfied visitors of t_ij / sum_j t_ij, with visitors
/// filtered by the xi activation threshold. Sites are returned in descending
/// score order, ties by ascending id.
inline RankingResult rank_sites(const VisitMatrix& visits, std::span<const Label> labels, double xi,
                                LabelProvenance provenance = LabelProvenance::kFullTruth) {
  detail::require(labels.size() == visits.users(), "rank_sites: one label per user required");
  detail::require(xi > 0.0 && xi < 1.0, "rank_sites: xi must be in (0, 1)");
  RankingResult out;
  out.provenance = provenance;
  out.scores.assign(visits.sites(), 0.0);
  for (UserId i = 0; i < visits.users(); ++i) {
    if (!labels[i]) continue;
    const auto r = visits.row(i);
    const double total = visits.row_total(i);
    if (total <= 0.0) continue;
    for (SiteId j = 0; j < r.size(); ++j)
      if (r[j] > xi * total) out.scores[j] += r[j] / total;
  }
  out.ranked_ids.resize(visits.sites());
  std::iota(out.ranked_ids.begin(), out.ranked_ids.end(), SiteId{0});
  std::stable_sort(out.ranked_ids.begin(), out.ranked_ids.end(),
                   [&](SiteId a, SiteId b) { return out.scores[a] > out.scores[b]; });
  return out;
}

namespace detail {

inline std::vector<bool> membership(std::span<const SiteId> ids, std::size_t m) {
  std::vector<bool> in(m, false);
  for (SiteId j : ids) {
    require(j < m, "under-performing id out of range");
    in[j] = true;
  }
  return in;
}

}  // namespace detail

/// (P@k, R@k) for one k in [1, M].
inline std::pair<double, double> precision_recall_at_k(std::span<const SiteId> ranked,
                                                       std::span<const SiteId> underperforming, std::size_t k) {
  if (k < 1 || k > ranked.size())
    throw InputError("precision_recall_at_k: k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(ranked.size()) + "]");
  detail::require(!underperforming.empty(), "precision_recall_at_k: empty under-performing set");
  const auto in = detail::membership(underperforming, ranked.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < k; ++p) hits += in[ranked[p]];
  return {static_cast<double>(hits) / static_cast<double>(k),
          static_cast<double>(hits) / static_cast<double>(underperforming.size())};
}

/// Area under the precision-recall curve traced by k = 1..M.
///
/// Each distinct positive recall value contributes the point at the first k
/// reaching it; the curve is extended to recall 0 at the precision of its
/// first point and integrated with the trapezoid rule.
inline double auc_precision_recall(std::span<const SiteId> ranked, std::span<const SiteId> underperforming) {
  if (underperforming.empty()) throw InputError("auc_precision_recall: empty under-performing set");
  detail::require(!ranked.empty(), "auc_precision_recall: empty ranking");
  const auto in = detail::membership(underperforming, ranked.size());
  const double omega = static_cast<double>(underperforming.size());

  std::vector<std::pair<double, double>> curve;  // (recall, precision)
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    if (!in[ranked[k - 1]]) continue;
    ++hits;
    curve.emplace_back(static_cast<double>(hits) / omega, static_cast<double>(hits) / static_cast<double>(k));
  }
  if (curve.empty()) return 0.0;
  double area = 0.0;
  std::pair<double, double> prev{0.0, curve.front().second};
  for (const auto& pt : curve) {
    area += (pt.first - prev.first) * 0.5 * (pt.second + prev.second);
    prev = pt;
  }
  return area;
}

inline DetectionMetrics compute_metrics(std::span<const SiteId> ranked, std::span<const SiteId> underperforming) {
  if (underperforming.empty()) throw InputError("compute_metrics: empty under-performing set");
  const auto in = detail::membership(underperforming, ranked.size());
  DetectionMetrics m;
  const double omega = static_cast<double>(underperforming.size());
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    hits += in[ranked[k - 1]];
    m.precision_at_k.push_back(static_cast<double>(hits) / static_cast<double>(k));
    m.recall_at_k.push_back(static_cast<double>(hits) / omega);
  }
  m.auc_pr = auc_precision_recall(ranked, underperforming);
  m.recall_at_omega = m.recall_at_k.at(underperforming.size() - 1);
  return m;
}

/// Labels known for a subset of users.
struct PartialLabels {
  std::vector<UserId> users;
  std::vector<Label> labels;
};

struct Detection {
  RankingResult ranking;
  std::vector<SiteId> top_k;
};

/// Ranks sites from survey answers plus optional predictions for the other
/// users. Users with no label count as satisfied.
inline Detection detect(const VisitMatrix& visits, const PartialLabels& gt, const std::optional<PartialLabels>& predicted,
                        double xi, std::size_t k) {
  detail::require(k >= 1 && k <= visits.sites(), "detect: k must be in [1, M]");
  std::vector<Label> labels(visits.users(), 0);
  std::vector<bool> assigned(visits.users(), false);
  auto assign = [&](const PartialLabels& part, const char* what) {
    detail::require(part.users.size() == part.labels.size(), std::string("detect: ") + what + " size mismatch");
    for (std::size_t p = 0; p < part.users.size(); ++p) {
      const UserId i = part.users[p];
      detail::require(i < visits.users(), std::string("detect: ") + what + " user id out of range");
      if (assigned[i]) throw InputError("detect: user " + std::to_string(i) + " labelled twice");
      assigned[i] = true;
      labels[i] = part.labels[p];
    }
  };
  assign(gt, "ground-truth");
  if (predicted) assign(*predicted, "predicted");
  Detection d;
  d.ranking = rank_sites(visits, labels, xi,
                         predicted ? LabelProvenance::kGtPlusPredicted : LabelProvenance::kGtOnly);
  d.top_k = d.ranking.top(k);
  return d;
}

inline Detection detect_full_truth(const VisitMatrix& visits, std::span<const Label> labels, double xi, std::size_t k) {
  detail::require(k >= 1 && k <= visits.sites(), "detect: k must be in [1, M]");
  Detection d;
  d.ranking = rank_sites(visits, labels, xi, LabelProvenance::kFullTruth);
  d.top_k = d.ranking.top(k);
  return d;
}

/// Midpoint of the mean time shares of each user's most and second most
/// visited site; a reasonable default activation threshold.
inline double xi_rule_of_thumb(const VisitMatrix& visits) {
  const auto curve = mean_rank_shares(visits);
  if (curve.size() < 2) return curve.empty() ? 0.2 : curve[0] / 2.0;
  return 0.5 * (curve[0] + curve[1]);
}

inline void write_ranking(std::ostream& out, const RankingResult& r) {
  out << "site,score,rank\n";
  for (std::size_t p = 0; p < r.ranked_ids.size(); ++p)
    out << r.ranked_ids[p] << ',' << text::format_sig6(r.scores[r.ranked_ids[p]]) << ',' << p + 1 << '\n';
}

inline void write_metrics(std::ostream& out, const DetectionMetrics& m, double coverage) {
  out << "# auc,recall_at_omega,coverage\n";
  out << "# " << text::format_sig6(m.auc_pr) << ',' << text::format_sig6(m.recall_at_omega) << ','
      << text::format_sig6(coverage) << '\n';
  out << "k,precision,recall\n";
  for (std::size_t k = 0; k < m.precision_at_k.size(); ++k)
    out << k + 1 << ',' << text::format_sig6(m.precision_at_k[k]) << ',' << text::format_sig6(m.recall_at_k[k])
        << '\n';
}

}  // namespace qoesim
