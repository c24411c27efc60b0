// qoesim: command-line driver for scenarios, sweeps and coverage solves.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qoesim/experiment.hpp"
#include "qoesim/validate.hpp"

namespace {

using namespace qoesim;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> users;
  std::optional<std::size_t> repetitions;
  std::optional<std::string> preset;
  std::optional<std::string> strategy;
  std::optional<double> mu;
  std::string out = "-";
  std::string format = "csv";
  unsigned threads = 0;
  bool timing = false;
};

ScenarioConfig resolve_config(const GlobalOptions& g) {
  ScenarioConfig cfg = g.config_path.empty() ? ScenarioConfig{} : load_config(g.config_path);
  for (const auto& o : g.overrides) cfg = apply_override(cfg, o);
  if (g.seed) cfg.seed = *g.seed;
  if (g.users) cfg.users = *g.users;
  if (g.repetitions) cfg.repetitions = *g.repetitions;
  if (g.preset) cfg.mobility.preset = *g.preset;
  if (g.strategy) cfg.delivery.strategy = *g.strategy;
  if (g.mu) cfg.profile.mu = *g.mu;
  cfg.validate();
  return cfg;
}

void emit(const Table& t, const GlobalOptions& g) {
  const OutputFormat format = parse_output_format(g.format);
  if (g.out == "-") {
    write_table(std::cout, t, format);
    std::cout.flush();
  } else {
    write_table_file(g.out, t, format);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate QoE-driven detection of under-performing network sites"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("-c,--config", g.config_path, "JSON scenario config")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a config field, e.g. --set profile.mu=0.15 (repeatable)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--users", g.users, "Population size N");
  app.add_option("--repetitions", g.repetitions, "Repetitions R");
  app.add_option("--preset", g.preset, "Mobility preset (S1 or S2)");
  app.add_option("--strategy", g.strategy, "Survey delivery: none, random, optimized, exact");
  app.add_option("--mu", g.mu, "Mean user tolerance");
  app.add_option("-o,--out", g.out, "Output file ('-' for stdout)");
  app.add_option("-f,--format", g.format, "Output format: csv or json-lines");
  app.add_option("--threads", g.threads, "Worker threads for mobility (0 = hardware)");
  app.add_flag("--timing", g.timing, "Add wall-clock time per record (output is then not reproducible)");

  auto* simulate = app.add_subcommand("simulate", "Run one scenario and write per-repetition records");
  std::string visits_out;
  simulate->add_option("--visits-out", visits_out, "Also write repetition 0's visit matrix (text form)");

  auto* sweep_xi_mu_cmd = app.add_subcommand("sweep-xi-mu", "Mean full-truth AUC over a (mu, xi) grid");
  std::vector<double> xi_values = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> mu_values = {0.05, 0.15, 0.25, 0.35};
  sweep_xi_mu_cmd->add_option("--xi", xi_values, "Activation thresholds")->delimiter(',')->capture_default_str();
  sweep_xi_mu_cmd->add_option("--mu-values", mu_values, "Mean tolerances")->delimiter(',')->capture_default_str();

  auto* cloud_cmd = app.add_subcommand("sweep-cloud", "Mean R@Omega over a grid of classifier working points");
  std::optional<double> grid_step;
  cloud_cmd->add_option("--grid-step", grid_step, "FPR/TPR grid step (default: classifier.grid_step)");

  auto* density_cmd = app.add_subcommand("sweep-density", "Ground-truth-only vs classifier-assisted detection by density");
  std::vector<double> densities = {0.0735, 0.735, 7.35};
  std::vector<std::string> strategies = {"random", "optimized"};
  density_cmd->add_option("--densities", densities, "Ground-truth users per site")->delimiter(',')->capture_default_str();
  density_cmd->add_option("--strategies", strategies, "Delivery strategies")->delimiter(',')->capture_default_str();

  auto* solve_cmd = app.add_subcommand("solve-coverage", "Select survey respondents on a visit-matrix file");
  std::string visits_path;
  std::size_t budget = 0;
  double xi = 0.2;
  std::size_t n_min = 3;
  std::string solve_strategy = "optimized";
  solve_cmd->add_option("--visits", visits_path, "Visit matrix (text or binary)")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--budget", budget, "Respondent budget B")->required();
  solve_cmd->add_option("--xi", xi, "Qualification threshold")->capture_default_str();
  solve_cmd->add_option("--n-min", n_min, "Respondents needed to cover a site")->capture_default_str();
  solve_cmd->add_option("--solver", solve_strategy, "random, optimized or exact")->capture_default_str();

  auto* validate_cmd = app.add_subcommand("validate", "Check structural invariants on a seeded scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    (void)parse_output_format(g.format);
    if (solve_cmd->parsed()) {
      const VisitMatrix visits = load_visit_matrix(visits_path);
      DeliveryConfig d{budget, parse_delivery_strategy(solve_strategy), xi, n_min};
      Rng rng = make_rng(stage_seed(g.seed.value_or(1), 0, Stage::kDelivery));
      const SurveyAssignment a = deliver(visits, d, rng);
      Table t;
      t.metadata["kind"] = "coverage_solution";
      t.metadata["solver"] = std::string(to_string(d.strategy));
      t.metadata["budget"] = budget;
      t.metadata["xi"] = xi;
      t.metadata["n_min"] = n_min;
      t.metadata["covered_sites"] = a.covered_sites;
      t.metadata["coverage"] = text::round_sig6(a.coverage);
      t.columns = {"user"};
      for (UserId i : a.respondents) t.rows.push_back({static_cast<std::uint64_t>(i)});
      emit(t, g);
      return 0;
    }

    const ScenarioConfig cfg = resolve_config(g);
    if (simulate->parsed()) {
      const auto records = run_scenario(cfg, g.threads);
      emit(records_to_table(records, cfg, g.timing), g);
      if (!visits_out.empty()) {
        ScenarioRunner runner(cfg, g.threads);
        std::ofstream vo(visits_out, std::ios::binary | std::ios::trunc);
        if (!vo) throw InputError("cannot open '" + visits_out + "' for writing");
        write_visit_matrix_text(vo, *runner.prepare(0).visits);
      }
    } else if (sweep_xi_mu_cmd->parsed()) {
      emit(xi_mu_table(sweep_xi_mu(cfg, xi_values, mu_values, g.threads), cfg), g);
    } else if (cloud_cmd->parsed()) {
      const double step = grid_step.value_or(cfg.classifier.grid_step);
      emit(cloud_table(sweep_performance_cloud(cfg, step, g.threads), cfg, step), g);
    } else if (density_cmd->parsed()) {
      emit(density_table(sweep_gt_density(cfg, densities, strategies, g.threads), cfg), g);
    } else if (validate_cmd->parsed()) {
      const auto checks = validate_scenario(cfg, g.threads);
      Table t;
      t.metadata = table_metadata(cfg, "validation");
      t.columns = {"check", "status", "detail"};
      std::size_t failed = 0;
      for (const auto& c : checks) {
        failed += !c.passed;
        t.rows.push_back({c.name, std::string(c.passed ? "PASS" : "FAIL"), c.detail});
      }
      emit(t, g);
      if (failed) {
        std::cerr << "validate: " << failed << " of " << checks.size() << " checks failed\n";
        return 1;
      }
    }
  } catch (const TractabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
