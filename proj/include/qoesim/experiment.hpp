#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qoesim/classifier_sim.hpp"
#include "qoesim/config.hpp"
#include "qoesim/detection.hpp"
#include "qoesim/mobility.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/satisfaction.hpp"
#include "qoesim/survey_delivery.hpp"
#include "qoesim/table.hpp"
#include "qoesim/topology.hpp"

namespace qoesim {

/// One evaluated (repetition, working point) of a scenario.
struct RunRecord {
  std::string config_hash;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::size_t users = 0;
  std::size_t sites = 0;
  std::size_t omega = 0;
  std::size_t budget = 0;
  std::size_t respondents = 0;
  double sigma = 0.0;
  double dissatisfied_fraction = 0.0;
  double coverage = 0.0;
  std::string strategy;  // none | random | optimized | exact
  std::optional<ClassifierSpec> classifier;
  std::string provenance;
  double xi = 0.0;
  std::size_t k = 0;
  double precision_at_selected_k = 0.0;
  double recall_at_selected_k = 0.0;
  double auc = 0.0;
  double recall_at_omega = 0.0;
  std::vector<double> precision_at_k;
  std::vector<double> recall_at_k;
  double wall_time_s = 0.0;
};

struct Repetition {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Topology topology;  // with the planted under-performing set
  std::shared_ptr<const VisitMatrix> visits;
};

struct UserProfile {
  double sigma = 0.0;
  SatisfactionVector truth;
};

/// Stateful driver for one scenario: owns the site layout and the mobility
/// cache; every random quantity is derived from (seed, repetition, stage).
class ScenarioRunner {
 public:
  explicit ScenarioRunner(ScenarioConfig cfg, unsigned threads = 0) : cfg_(std::move(cfg)), threads_(threads) {
    cfg_.validate();
    if (!cfg_.topology.file.empty()) {
      layout_ = load_topology(cfg_.topology.file, cfg_.topology.delimiter.front());
    } else {
      layout_ = generate_topology(cfg_.topology.sites, Box::square_of_area(cfg_.topology.area),
                                  stage_seed(cfg_.seed, 0, Stage::kTopology));
    }
    omega_ = cfg_.omega(layout_.size());
    if (omega_ == 0 || omega_ >= layout_.size())
      throw InputError("scenario: floor(omega_fraction * M) = " + std::to_string(omega_) +
                       " must be in [1, M-1] for M = " + std::to_string(layout_.size()));
    mobility_ = cfg_.mobility.params().resolve(layout_);
  }

  const ScenarioConfig& config() const { return cfg_; }
  const Topology& layout() const { return layout_; }
  std::size_t omega() const { return omega_; }

  Repetition prepare(std::size_t rep) {
    Repetition r;
    r.index = rep;
    r.seed = derive_seed(cfg_.seed, {rep});
    r.topology = plant_underperforming(layout_, omega_, stage_seed(cfg_.seed, rep, Stage::kUnderperforming));
    if (cfg_.mobility.reuse) {
      if (!shared_visits_)
        shared_visits_ = std::make_shared<const VisitMatrix>(simulate_population(
            layout_, mobility_, cfg_.users, stage_seed(cfg_.seed, 0, Stage::kMobility), threads_));
      r.visits = shared_visits_;
    } else {
      r.visits = std::make_shared<const VisitMatrix>(simulate_population(
          layout_, mobility_, cfg_.users, stage_seed(cfg_.seed, rep, Stage::kMobility), threads_));
    }
    return r;
  }

  /// Tolerances and ground-truth labels for mean tolerance `mu`. Sigma is
  /// either fixed by the config or calibrated so the dissatisfied share
  /// falls in the configured target.
  UserProfile profile(const Repetition& r, double mu) const {
    const auto& p = cfg_.profile;
    const VisitMatrix& visits = *r.visits;
    UserProfile out;
    if (p.sigma) {
      out.sigma = *p.sigma;
    } else {
      CalibrationOptions opts;
      opts.redraws = p.redraws;
      opts.best_effort = p.best_effort;
      out.sigma = calibrate_sigma(visits, r.topology.underperforming(), mu, p.target_lo, p.target_hi,
                                  stage_seed(cfg_.seed, r.index, Stage::kCalibration), opts)
                      .sigma;
    }
    const std::size_t tol_rep = p.freeze_tolerances ? 0 : r.index;
    Rng tol_rng = make_rng(stage_seed(cfg_.seed, tol_rep, Stage::kTolerance));
    const auto tolerances = draw_tolerances(visits.users(), mu, out.sigma, tol_rng);
    out.truth = compute_satisfaction(visits, r.topology.underperforming(), tolerances);
    if (p.psi > 0.0) {
      Rng noise_rng = make_rng(stage_seed(cfg_.seed, r.index, Stage::kLabelNoise));
      out.truth = apply_label_noise(std::move(out.truth), p.psi, noise_rng);
    }
    return out;
  }

  DeliveryConfig delivery_config() const {
    DeliveryConfig d;
    d.strategy = parse_delivery_strategy(cfg_.delivery.strategy);
    d.budget = cfg_.delivery.resolved_budget(cfg_.users);
    d.xi = cfg_.delivery.xi;
    d.n_min = cfg_.delivery.n_min;
    return d;
  }

  SurveyAssignment deliver(const Repetition& r, DeliveryStrategy strategy) const {
    DeliveryConfig d = delivery_config();
    d.strategy = strategy;
    Rng rng = make_rng(stage_seed(cfg_.seed, r.index, Stage::kDelivery));
    return qoesim::deliver(*r.visits, d, rng);
  }

  /// Predictions for the non-respondents at one working point. The stream
  /// depends only on the repetition, so all working points share it.
  PartialLabels predict(const Repetition& r, const SatisfactionVector& truth, const SurveyAssignment& a,
                        const ClassifierSpec& spec) const {
    PartialLabels out;
    out.users = non_respondents(truth.size(), a.respondents);
    std::vector<Label> true_na;
    true_na.reserve(out.users.size());
    for (UserId i : out.users) true_na.push_back(truth.labels[i]);
    Rng rng = make_rng(stage_seed(cfg_.seed, r.index, Stage::kClassifier));
    out.labels = predict_labels(true_na, spec, rng);
    return out;
  }

  static PartialLabels ground_truth(const SatisfactionVector& truth, const SurveyAssignment& a) {
    PartialLabels gt;
    gt.users = a.respondents;
    for (UserId i : a.respondents) gt.labels.push_back(truth.labels[i]);
    return gt;
  }

  static std::vector<UserId> non_respondents(std::size_t users, const std::vector<UserId>& respondents) {
    std::vector<UserId> out;
    out.reserve(users - respondents.size());
    std::size_t p = 0;
    for (UserId i = 0; i < users; ++i) {
      if (p < respondents.size() && respondents[p] == i) {
        ++p;
        continue;
      }
      out.push_back(i);
    }
    return out;
  }

  std::size_t selected_k() const { return cfg_.detection.k_policy == "omega" ? omega_ : layout_.size(); }

  RunRecord make_record(const Repetition& r, const UserProfile& prof, const RankingResult& ranking,
                        const std::optional<SurveyAssignment>& a, std::optional<ClassifierSpec> spec) const {
    RunRecord rec;
    rec.config_hash = config_hash(cfg_);
    rec.repetition = r.index;
    rec.seed = r.seed;
    rec.users = cfg_.users;
    rec.sites = layout_.size();
    rec.omega = omega_;
    rec.sigma = prof.sigma;
    rec.dissatisfied_fraction = prof.truth.dissatisfied_fraction();
    rec.strategy = a ? cfg_.delivery.strategy : "none";
    rec.budget = a ? cfg_.delivery.resolved_budget(cfg_.users) : 0;
    rec.respondents = a ? a->respondents.size() : 0;
    rec.coverage = a ? a->coverage : 1.0;
    rec.classifier = spec;
    rec.provenance = std::string(to_string(ranking.provenance));
    rec.xi = cfg_.detection_xi();
    rec.k = selected_k();
    const auto metrics = compute_metrics(ranking.ranked_ids, r.topology.underperforming());
    rec.precision_at_k = metrics.precision_at_k;
    rec.recall_at_k = metrics.recall_at_k;
    rec.precision_at_selected_k = metrics.precision_at_k.at(rec.k - 1);
    rec.recall_at_selected_k = metrics.recall_at_k.at(rec.k - 1);
    rec.auc = metrics.auc_pr;
    rec.recall_at_omega = metrics.recall_at_omega;
    return rec;
  }

  /// All records of one repetition: full truth when delivery is disabled,
  /// otherwise ground truth alone (no classifier) or one record per
  /// configured working point.
  std::vector<RunRecord> run_repetition(std::size_t rep) {
    const auto start = std::chrono::steady_clock::now();
    const Repetition r = prepare(rep);
    const UserProfile prof = profile(r, cfg_.profile.mu);
    const double xi = cfg_.detection_xi();
    const std::size_t k = selected_k();
    std::vector<RunRecord> out;
    if (!cfg_.delivery.enabled()) {
      const auto d = detect_full_truth(*r.visits, prof.truth.labels, xi, k);
      out.push_back(make_record(r, prof, d.ranking, std::nullopt, std::nullopt));
    } else {
      const SurveyAssignment a = deliver(r, delivery_config().strategy);
      const PartialLabels gt = ground_truth(prof.truth, a);
      const auto points = cfg_.classifier.working_points();
      if (points.empty()) {
        const auto d = detect(*r.visits, gt, std::nullopt, xi, k);
        out.push_back(make_record(r, prof, d.ranking, a, std::nullopt));
      }
      for (const auto& spec : points) {
        const auto d = detect(*r.visits, gt, predict(r, prof.truth, a, spec), xi, k);
        out.push_back(make_record(r, prof, d.ranking, a, spec));
      }
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& rec : out) rec.wall_time_s = elapsed;
    return out;
  }

 private:
  ScenarioConfig cfg_;
  unsigned threads_ = 0;
  Topology layout_;
  std::size_t omega_ = 0;
  MobilityParams mobility_;
  std::shared_ptr<const VisitMatrix> shared_visits_;
};

inline std::vector<RunRecord> run_scenario(const ScenarioConfig& cfg, unsigned threads = 0) {
  ScenarioRunner runner(cfg, threads);
  std::vector<RunRecord> out;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    auto recs = runner.run_repetition(rep);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

namespace detail {

struct RunningStats {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double sd() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1)));
  }
  double se() const { return n ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweeps

struct XiMuCell {
  double mu = 0.0;
  double xi = 0.0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  std::size_t repetitions = 0;
  double mean_sigma = 0.0;
  double mean_dissatisfied = 0.0;
};

/// Mean AUC per (mu, xi) with full-truth labels (survey sampling disabled).
/// Trajectories and under-performing sets are shared across cells within a
/// repetition. Rows are ordered by mu then xi, in input order.
inline std::vector<XiMuCell> sweep_xi_mu(ScenarioConfig cfg, const std::vector<double>& xi_values,
                                         const std::vector<double>& mu_values, unsigned threads = 0) {
  detail::require(!xi_values.empty() && !mu_values.empty(), "sweep_xi_mu: empty grid");
  for (double xi : xi_values) detail::require(xi > 0.0 && xi < 1.0, "sweep_xi_mu: xi must be in (0, 1)");
  cfg.delivery.strategy = "none";
  cfg.classifier.mode = "none";
  ScenarioRunner runner(cfg, threads);
  const std::size_t nx = xi_values.size();
  std::vector<detail::RunningStats> auc(mu_values.size() * nx), sigma(mu_values.size()), frac(mu_values.size());
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const Repetition r = runner.prepare(rep);
    for (std::size_t a = 0; a < mu_values.size(); ++a) {
      const UserProfile prof = runner.profile(r, mu_values[a]);
      sigma[a].add(prof.sigma);
      frac[a].add(prof.truth.dissatisfied_fraction());
      for (std::size_t b = 0; b < nx; ++b) {
        const auto ranking = rank_sites(*r.visits, prof.truth.labels, xi_values[b]);
        auc[a * nx + b].add(auc_precision_recall(ranking.ranked_ids, r.topology.underperforming()));
      }
    }
  }
  std::vector<XiMuCell> out;
  for (std::size_t a = 0; a < mu_values.size(); ++a)
    for (std::size_t b = 0; b < nx; ++b) {
      const auto& s = auc[a * nx + b];
      out.push_back(XiMuCell{mu_values[a], xi_values[b], s.mean(), s.sd(), s.n, sigma[a].mean(), frac[a].mean()});
    }
  return out;
}

struct CloudPoint {
  std::string kind;  // "grid" or "gt_only"
  double fpr = 0.0;
  double tpr = 0.0;
  double mean_recall_at_omega = 0.0;
  double se_recall_at_omega = 0.0;
  std::size_t repetitions = 0;
  bool in_reference_count = false;
  double mean_coverage = 0.0;
};

/// Mean R@Omega per classifier working point on the inclusive grid, plus the
/// ground-truth-only baseline as the final row.
inline std::vector<CloudPoint> sweep_performance_cloud(ScenarioConfig cfg, double grid_step, unsigned threads = 0) {
  detail::require(cfg.delivery.enabled(), "sweep_performance_cloud: needs a delivery strategy");
  cfg.classifier.mode = "grid";
  cfg.classifier.grid_step = grid_step;
  const auto grid = working_point_grid(grid_step);
  ScenarioRunner runner(cfg, threads);
  std::vector<detail::RunningStats> recall(grid.size()), baseline(1), coverage(1);
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const Repetition r = runner.prepare(rep);
    const UserProfile prof = runner.profile(r, cfg.profile.mu);
    const SurveyAssignment a = runner.deliver(r, runner.delivery_config().strategy);
    coverage[0].add(a.coverage);
    const PartialLabels gt = ScenarioRunner::ground_truth(prof.truth, a);
    const double xi = cfg.detection_xi();
    const std::size_t omega = runner.omega();
    const auto ju = r.topology.underperforming();
    baseline[0].add(precision_recall_at_k(detect(*r.visits, gt, std::nullopt, xi, omega).ranking.ranked_ids, ju,
                                          omega)
                        .second);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto d = detect(*r.visits, gt, runner.predict(r, prof.truth, a, grid[g].spec), xi, omega);
      recall[g].add(precision_recall_at_k(d.ranking.ranked_ids, ju, omega).second);
    }
  }
  std::vector<CloudPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g)
    out.push_back(CloudPoint{"grid", grid[g].spec.fpr, grid[g].spec.tpr, recall[g].mean(), recall[g].se(),
                             recall[g].n, grid[g].in_reference_count, coverage[0].mean()});
  out.push_back(CloudPoint{"gt_only", 0.0, 0.0, baseline[0].mean(), baseline[0].se(), baseline[0].n, false,
                           coverage[0].mean()});
  return out;
}

struct DensityRow {
  double density = 0.0;  // ground-truth users per site
  std::string tag;       // Low | Medium | High
  std::size_t users = 0;
  std::size_t budget = 0;
  std::string strategy;
  double r_gt = 0.0;  // mean R@Omega, ground truth only
  double r_c = 0.0;   // best mean R@Omega over the classifier working points
  double best_fpr = 0.0;
  double best_tpr = 0.0;
  double mean_coverage = 0.0;
  bool critical = false;  // first density where ground truth alone is at least as good
};

inline std::string density_tag(double density) {
  // Geometric midpoints between the 1k / 10k / 100k-user densities at M = 136.
  if (density < 0.2325) return "Low";
  if (density < 2.325) return "Medium";
  return "High";
}

/// Ground-truth-only vs classifier-assisted detection as the survey density
/// grows. Density d means d * M respondents; at a fixed response rate the
/// population is d * M / rate users. The classifier working points come from
/// the config, or the reference points when none are configured.
inline std::vector<DensityRow> sweep_gt_density(ScenarioConfig cfg, const std::vector<double>& densities,
                                                const std::vector<std::string>& strategies, unsigned threads = 0) {
  detail::require(!densities.empty() && !strategies.empty(), "sweep_gt_density: empty grid");
  if (cfg.classifier.mode == "none") cfg.classifier.mode = "reference";
  if (!cfg.delivery.enabled()) cfg.delivery.strategy = strategies.front();
  const auto points = cfg.classifier.working_points();
  std::vector<DensityRow> out;
  for (double d : densities) {
    ScenarioConfig c = cfg;
    const std::size_t sites = ScenarioRunner(c, threads).layout().size();
    const double budget_real = d * static_cast<double>(sites);
    c.users = static_cast<std::size_t>(std::llround(budget_real / c.delivery.response_rate));
    c.delivery.budget = static_cast<std::size_t>(std::llround(budget_real));
    if (c.users < 1 || *c.delivery.budget < 1 || *c.delivery.budget > c.users)
      throw InputError("sweep_gt_density: density " + text::format_sig6(d) + " is not realisable");
    ScenarioRunner runner(c, threads);
    std::vector<std::vector<detail::RunningStats>> rc(strategies.size(), std::vector<detail::RunningStats>(points.size()));
    std::vector<detail::RunningStats> rgt(strategies.size()), cov(strategies.size());
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
      const Repetition r = runner.prepare(rep);
      const UserProfile prof = runner.profile(r, c.profile.mu);
      const double xi = c.detection_xi();
      const std::size_t omega = runner.omega();
      const auto ju = r.topology.underperforming();
      for (std::size_t s = 0; s < strategies.size(); ++s) {
        const SurveyAssignment a = runner.deliver(r, parse_delivery_strategy(strategies[s]));
        cov[s].add(a.coverage);
        const PartialLabels gt = ScenarioRunner::ground_truth(prof.truth, a);
        rgt[s].add(precision_recall_at_k(detect(*r.visits, gt, std::nullopt, xi, omega).ranking.ranked_ids, ju,
                                         omega)
                       .second);
        for (std::size_t p = 0; p < points.size(); ++p) {
          const auto det = detect(*r.visits, gt, runner.predict(r, prof.truth, a, points[p]), xi, omega);
          rc[s][p].add(precision_recall_at_k(det.ranking.ranked_ids, ju, omega).second);
        }
      }
    }
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      DensityRow row;
      row.density = d;
      row.tag = density_tag(d);
      row.users = c.users;
      row.budget = *c.delivery.budget;
      row.strategy = std::string(to_string(parse_delivery_strategy(strategies[s])));
      row.r_gt = rgt[s].mean();
      row.mean_coverage = cov[s].mean();
      row.r_c = -1.0;
      for (std::size_t p = 0; p < points.size(); ++p)
        if (rc[s][p].mean() > row.r_c) {
          row.r_c = rc[s][p].mean();
          row.best_fpr = points[p].fpr;
          row.best_tpr = points[p].tpr;
        }
      out.push_back(row);
    }
  }
  // Critical density per strategy, scanning densities in input order.
  for (const auto& strategy : strategies) {
    const std::string name(to_string(parse_delivery_strategy(strategy)));
    bool classifier_was_better = false;
    for (auto& row : out) {
      if (row.strategy != name) continue;
      if (row.r_gt < row.r_c) {
        classifier_was_better = true;
      } else if (classifier_was_better) {
        row.critical = true;
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

inline Json table_metadata(const ScenarioConfig& cfg, const std::string& kind) {
  Json meta = Json::object();
  meta["config"] = to_json(cfg);
  meta["config_hash"] = config_hash(cfg);
  meta["kind"] = kind;
  return meta;
}

namespace detail {

inline std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ';';
    out += text::format_sig6(v[k]);
  }
  return out;
}

inline std::vector<double> split_values(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (auto f : text::split(s, ';')) {
    const auto v = text::parse_double(f);
    if (!v) throw InputError("table: bad value list '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

inline Cell opt_double(const std::optional<ClassifierSpec>& spec, double ClassifierSpec::*field) {
  return spec ? Cell{(*spec).*field} : Cell{};
}

}  // namespace detail

inline const std::vector<std::string>& run_record_columns() {
  static const std::vector<std::string> cols = {
      "config_hash", "repetition", "seed",   "users",       "sites",          "omega",
      "budget",      "respondents", "sigma", "dissatisfied_fraction", "coverage", "strategy",
      "fpr",         "tpr",        "provenance", "xi",       "k",              "precision_at_selected_k",
      "recall_at_selected_k", "auc", "recall_at_omega", "precision_at_k", "recall_at_k"};
  return cols;
}

/// Records as a table. Wall time is environment-dependent and only included
/// on request, so default output is byte-reproducible.
inline Table records_to_table(const std::vector<RunRecord>& records, const ScenarioConfig& cfg,
                              bool include_timing = false) {
  Table t;
  t.metadata = table_metadata(cfg, "run_records");
  t.columns = run_record_columns();
  if (include_timing) t.columns.push_back("wall_time_s");
  for (const auto& r : records) {
    std::vector<Cell> row = {r.config_hash,
                             static_cast<std::uint64_t>(r.repetition),
                             r.seed,
                             static_cast<std::uint64_t>(r.users),
                             static_cast<std::uint64_t>(r.sites),
                             static_cast<std::uint64_t>(r.omega),
                             static_cast<std::uint64_t>(r.budget),
                             static_cast<std::uint64_t>(r.respondents),
                             r.sigma,
                             r.dissatisfied_fraction,
                             r.coverage,
                             r.strategy,
                             detail::opt_double(r.classifier, &ClassifierSpec::fpr),
                             detail::opt_double(r.classifier, &ClassifierSpec::tpr),
                             r.provenance,
                             r.xi,
                             static_cast<std::uint64_t>(r.k),
                             r.precision_at_selected_k,
                             r.recall_at_selected_k,
                             r.auc,
                             r.recall_at_omega,
                             detail::join_values(r.precision_at_k),
                             detail::join_values(r.recall_at_k)};
    if (include_timing) row.emplace_back(r.wall_time_s);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<RunRecord> records_from_table(const Table& t) {
  std::vector<RunRecord> out;
  auto col = [&](const char* name) { return t.column(name); };
  const bool timing = std::find(t.columns.begin(), t.columns.end(), "wall_time_s") != t.columns.end();
  for (const auto& row : t.rows) {
    RunRecord r;
    r.config_hash = cell_string(row[col("config_hash")]);
    r.repetition = cell_uint(row[col("repetition")]);
    r.seed = cell_uint(row[col("seed")]);
    r.users = cell_uint(row[col("users")]);
    r.sites = cell_uint(row[col("sites")]);
    r.omega = cell_uint(row[col("omega")]);
    r.budget = cell_uint(row[col("budget")]);
    r.respondents = cell_uint(row[col("respondents")]);
    r.sigma = cell_double(row[col("sigma")]);
    r.dissatisfied_fraction = cell_double(row[col("dissatisfied_fraction")]);
    r.coverage = cell_double(row[col("coverage")]);
    r.strategy = cell_string(row[col("strategy")]);
    if (!cell_is_null(row[col("fpr")]))
      r.classifier = ClassifierSpec{cell_double(row[col("fpr")]), cell_double(row[col("tpr")])};
    r.provenance = cell_string(row[col("provenance")]);
    r.xi = cell_double(row[col("xi")]);
    r.k = cell_uint(row[col("k")]);
    r.precision_at_selected_k = cell_double(row[col("precision_at_selected_k")]);
    r.recall_at_selected_k = cell_double(row[col("recall_at_selected_k")]);
    r.auc = cell_double(row[col("auc")]);
    r.recall_at_omega = cell_double(row[col("recall_at_omega")]);
    r.precision_at_k = detail::split_values(cell_string(row[col("precision_at_k")]));
    r.recall_at_k = detail::split_values(cell_string(row[col("recall_at_k")]));
    if (timing) r.wall_time_s = cell_double(row[col("wall_time_s")]);
    out.push_back(std::move(r));
  }
  return out;
}

inline Table xi_mu_table(const std::vector<XiMuCell>& cells, const ScenarioConfig& cfg) {
  Table t;
  t.metadata = table_metadata(cfg, "xi_mu_auc");
  t.columns = {"mu", "xi", "mean_auc", "sd_auc", "repetitions", "mean_sigma", "mean_dissatisfied_fraction"};
  for (const auto& c : cells)
    t.rows.push_back({c.mu, c.xi, c.mean_auc, c.sd_auc, static_cast<std::uint64_t>(c.repetitions), c.mean_sigma,
                      c.mean_dissatisfied});
  return t;
}

inline Table cloud_table(const std::vector<CloudPoint>& points, const ScenarioConfig& cfg, double grid_step) {
  Table t;
  t.metadata = table_metadata(cfg, "performance_cloud");
  const auto grid_points = working_point_grid(grid_step);
  const auto in_count = std::count_if(grid_points.begin(), grid_points.end(),
                                      [](const GridPoint& g) { return g.in_reference_count; });
  t.metadata["grid"] = {{"step", grid_step},
                        {"inclusive_points", grid_points.size()},
                        {"in_reference_count_points", in_count},
                        {"note", "in_reference_count marks the sub-grid with both rates below 1"}};
  t.columns = {"kind", "fpr", "tpr", "mean_recall_at_omega", "se_recall_at_omega", "repetitions",
               "in_reference_count", "mean_coverage"};
  for (const auto& p : points)
    t.rows.push_back({p.kind, p.fpr, p.tpr, p.mean_recall_at_omega, p.se_recall_at_omega,
                      static_cast<std::uint64_t>(p.repetitions), std::int64_t{p.in_reference_count ? 1 : 0},
                      p.mean_coverage});
  return t;
}

inline Table density_table(const std::vector<DensityRow>& rows, const ScenarioConfig& cfg) {
  Table t;
  t.metadata = table_metadata(cfg, "gt_density_tradeoff");
  Json crossover = Json::object();
  for (const auto& r : rows)
    if (r.critical) crossover[r.strategy] = r.density;
  t.metadata["crossover_density"] = crossover;
  t.columns = {"density", "tag",   "users", "budget",   "strategy", "r_gt_at_omega", "r_c_at_omega",
               "best_fpr", "best_tpr", "mean_coverage", "critical"};
  for (const auto& r : rows)
    t.rows.push_back({r.density, r.tag, static_cast<std::uint64_t>(r.users), static_cast<std::uint64_t>(r.budget),
                      r.strategy, r.r_gt, r.r_c, r.best_fpr, r.best_tpr, r.mean_coverage,
                      std::int64_t{r.critical ? 1 : 0}});
  return t;
}

/// Writes run records to `path` in the requested format.
inline void emit_results(const std::vector<RunRecord>& records, const ScenarioConfig& cfg, OutputFormat format,
                         const std::string& path, bool include_timing = false) {
  write_table_file(path, records_to_table(records, cfg, include_timing), format);
}

}  // namespace qoesim
