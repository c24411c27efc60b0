#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qoesim/classifier_sim.hpp"
#include "qoesim/error.hpp"
#include "qoesim/mobility.hpp"
#include "qoesim/survey_delivery.hpp"
#include "qoesim/text.hpp"

namespace qoesim {

using Json = nlohmann::json;

struct TopologySection {
  std::string file;  // empty: synthetic layout
  std::string delimiter = ",";
  std::size_t sites = 136;
  double area = 180.0;  // synthetic square side = sqrt(area)
};

struct MobilitySection {
  std::string preset = "S1";
  std::optional<double> rho, gamma, alpha, beta;
  std::optional<double> jump_min, jump_max, wait_min, wait_max;
  double horizon = 1.0;
  // Reuse repetition 0's trajectories in every repetition.
  bool reuse = false;

  MobilityParams params() const {
    MobilityParams p;
    if (preset == "S1" || preset == "s1") p = MobilityParams::s1();
    else if (preset == "S2" || preset == "s2") p = MobilityParams::s2();
    else throw InputError("unknown mobility preset '" + preset + "' (expected S1 or S2)");
    if (rho) p.rho = *rho;
    if (gamma) p.gamma = *gamma;
    if (alpha) p.alpha = *alpha;
    if (beta) p.beta = *beta;
    p.jump_min = jump_min;
    p.jump_max = jump_max;
    p.wait_min = wait_min;
    p.wait_max = wait_max;
    p.horizon = horizon;
    return p;
  }
};

struct ProfileSection {
  double mu = 0.25;
  std::optional<double> sigma;  // unset: calibrate into [target_lo, target_hi]
  double target_lo = 0.15;
  double target_hi = 0.30;
  std::size_t redraws = 5;
  bool best_effort = false;
  double psi = 0.0;
  bool freeze_tolerances = false;
};

struct DeliverySection {
  std::string strategy = "random";  // none | random | optimized | exact
  double response_rate = 0.01;
  std::optional<std::size_t> budget;
  std::size_t n_min = 3;
  double xi = 0.2;

  bool enabled() const { return strategy != "none"; }
  std::size_t resolved_budget(std::size_t users) const {
    if (budget) return *budget;
    const auto b = static_cast<std::size_t>(std::floor(response_rate * static_cast<double>(users) + 1e-9));
    return std::max<std::size_t>(1, b);
  }
};

struct ClassifierSection {
  std::string mode = "none";  // none | spec | grid | reference
  double fpr = 0.0;
  double tpr = 0.0;
  double grid_step = 0.05;

  std::vector<ClassifierSpec> working_points() const {
    std::vector<ClassifierSpec> out;
    if (mode == "spec") out.push_back(ClassifierSpec{fpr, tpr});
    else if (mode == "grid")
      for (const auto& g : working_point_grid(grid_step)) out.push_back(g.spec);
    else if (mode == "reference")
      for (const auto& r : reference_working_points()) out.push_back(r.spec);
    else if (mode != "none") throw InputError("unknown classifier mode '" + mode + "'");
    for (const auto& s : out) s.validate();
    return out;
  }
};

struct DetectionSection {
  std::optional<double> xi;  // unset: same as delivery.xi
  std::string k_policy = "all";  // all | omega
};

struct ScenarioConfig {
  TopologySection topology;
  MobilitySection mobility;
  std::size_t users = 1000;
  double omega_fraction = 0.1;
  ProfileSection profile;
  DeliverySection delivery;
  ClassifierSection classifier;
  DetectionSection detection;
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;

  double detection_xi() const { return detection.xi.value_or(delivery.xi); }

  std::size_t omega(std::size_t sites) const {
    return static_cast<std::size_t>(std::floor(omega_fraction * static_cast<double>(sites) + 1e-9));
  }

  void validate() const {
    detail::require(users >= 1, "config: users must be >= 1");
    detail::require(repetitions >= 1, "config: repetitions must be >= 1");
    detail::require(omega_fraction > 0.0 && omega_fraction < 1.0, "config: omega_fraction must be in (0, 1)");
    detail::require(topology.delimiter.size() == 1, "config: topology.delimiter must be one character");
    detail::require(!topology.file.empty() || (topology.sites >= 1 && topology.area > 0.0),
                    "config: synthetic topology needs sites >= 1 and area > 0");
    (void)mobility.params();
    detail::require(profile.mu > 0.0 && profile.mu < 1.0, "config: profile.mu must be in (0, 1)");
    detail::require(!profile.sigma || *profile.sigma > 0.0, "config: profile.sigma must be > 0");
    detail::require(profile.psi >= 0.0 && profile.psi <= 1.0, "config: profile.psi must be in [0, 1]");
    detail::require(profile.target_lo < profile.target_hi, "config: calibration target needs lo < hi");
    if (delivery.enabled()) (void)parse_delivery_strategy(delivery.strategy);
    detail::require(delivery.response_rate > 0.0 && delivery.response_rate <= 1.0,
                    "config: delivery.response_rate must be in (0, 1]");
    detail::require(delivery.n_min >= 1, "config: delivery.n_min must be >= 1");
    detail::require(delivery.xi > 0.0 && delivery.xi < 1.0, "config: delivery.xi must be in (0, 1)");
    detail::require(detection_xi() > 0.0 && detection_xi() < 1.0, "config: detection.xi must be in (0, 1)");
    detail::require(detection.k_policy == "all" || detection.k_policy == "omega",
                    "config: detection.k_policy must be 'all' or 'omega'");
    const auto points = classifier.working_points();
    detail::require(points.empty() || delivery.enabled(),
                    "config: a classifier needs survey delivery (delivery.strategy != none)");
  }
};

namespace detail {

template <class T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Reads keys present in `j` into the fields; unknown keys are rejected so
// typos in config files surface as errors.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InputError("config: '" + where_ + "' must be an object");
  }
  void done() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw InputError("config: unknown key '" + prefix() + key + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InputError("config: bad value for '" + prefix() + key + "'");
    }
  }
  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }
  const Json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string prefix() const { return where_.empty() ? "" : where_ + "."; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline Json to_json(const ScenarioConfig& c) {
  using detail::opt_json;
  Json j;
  j["topology"] = {{"file", c.topology.file}, {"delimiter", c.topology.delimiter},
                   {"sites", c.topology.sites}, {"area", c.topology.area}};
  const auto& m = c.mobility;
  j["mobility"] = {{"preset", m.preset},         {"rho", opt_json(m.rho)},
                   {"gamma", opt_json(m.gamma)}, {"alpha", opt_json(m.alpha)},
                   {"beta", opt_json(m.beta)},   {"jump_min", opt_json(m.jump_min)},
                   {"jump_max", opt_json(m.jump_max)}, {"wait_min", opt_json(m.wait_min)},
                   {"wait_max", opt_json(m.wait_max)}, {"horizon", m.horizon},
                   {"reuse", m.reuse}};
  j["users"] = c.users;
  j["omega_fraction"] = c.omega_fraction;
  const auto& p = c.profile;
  j["profile"] = {{"mu", p.mu},         {"sigma", opt_json(p.sigma)}, {"target_lo", p.target_lo},
                  {"target_hi", p.target_hi}, {"redraws", p.redraws}, {"best_effort", p.best_effort},
                  {"psi", p.psi},       {"freeze_tolerances", p.freeze_tolerances}};
  const auto& d = c.delivery;
  j["delivery"] = {{"strategy", d.strategy}, {"response_rate", d.response_rate},
                   {"budget", opt_json(d.budget)}, {"n_min", d.n_min}, {"xi", d.xi}};
  j["classifier"] = {{"mode", c.classifier.mode}, {"fpr", c.classifier.fpr}, {"tpr", c.classifier.tpr},
                     {"grid_step", c.classifier.grid_step}};
  j["detection"] = {{"xi", opt_json(c.detection.xi)}, {"k_policy", c.detection.k_policy}};
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  return j;
}

inline ScenarioConfig config_from_json(const Json& j) {
  ScenarioConfig c;
  detail::Reader root(j, "");
  if (const Json* t = root.child("topology")) {
    detail::Reader r(*t, "topology");
    r.get("file", c.topology.file);
    r.get("delimiter", c.topology.delimiter);
    r.get("sites", c.topology.sites);
    r.get("area", c.topology.area);
    r.done();
  }
  if (const Json* t = root.child("mobility")) {
    detail::Reader r(*t, "mobility");
    auto& m = c.mobility;
    r.get("preset", m.preset);
    r.get("rho", m.rho);
    r.get("gamma", m.gamma);
    r.get("alpha", m.alpha);
    r.get("beta", m.beta);
    r.get("jump_min", m.jump_min);
    r.get("jump_max", m.jump_max);
    r.get("wait_min", m.wait_min);
    r.get("wait_max", m.wait_max);
    r.get("horizon", m.horizon);
    r.get("reuse", m.reuse);
    r.done();
  }
  root.get("users", c.users);
  root.get("omega_fraction", c.omega_fraction);
  if (const Json* t = root.child("profile")) {
    detail::Reader r(*t, "profile");
    auto& p = c.profile;
    r.get("mu", p.mu);
    r.get("sigma", p.sigma);
    r.get("target_lo", p.target_lo);
    r.get("target_hi", p.target_hi);
    r.get("redraws", p.redraws);
    r.get("best_effort", p.best_effort);
    r.get("psi", p.psi);
    r.get("freeze_tolerances", p.freeze_tolerances);
    r.done();
  }
  if (const Json* t = root.child("delivery")) {
    detail::Reader r(*t, "delivery");
    auto& d = c.delivery;
    r.get("strategy", d.strategy);
    r.get("response_rate", d.response_rate);
    r.get("budget", d.budget);
    r.get("n_min", d.n_min);
    r.get("xi", d.xi);
    r.done();
  }
  if (const Json* t = root.child("classifier")) {
    detail::Reader r(*t, "classifier");
    r.get("mode", c.classifier.mode);
    r.get("fpr", c.classifier.fpr);
    r.get("tpr", c.classifier.tpr);
    r.get("grid_step", c.classifier.grid_step);
    r.done();
  }
  if (const Json* t = root.child("detection")) {
    detail::Reader r(*t, "detection");
    r.get("xi", c.detection.xi);
    r.get("k_policy", c.detection.k_policy);
    r.done();
  }
  root.get("repetitions", c.repetitions);
  root.get("seed", c.seed);
  root.done();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

/// Applies "a.b.c=value" to a config. The value is parsed as JSON when it
/// parses (numbers, booleans, null), otherwise taken as a string.
inline ScenarioConfig apply_override(const ScenarioConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw InputError("override '" + std::string(assignment) + "' is not key=value");
  const std::string path(text::trim(assignment.substr(0, eq)));
  const std::string raw(text::trim(assignment.substr(eq + 1)));
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  Json j = to_json(c);
  Json* node = &j;
  std::string_view rest = path;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (!node->is_object() || !node->contains(key)) throw InputError("override: unknown key '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  *node = value;
  return config_from_json(j);
}

/// FNV-1a of the canonical JSON form, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qoesim
