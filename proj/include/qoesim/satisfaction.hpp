#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/text.hpp"
#include "qoesim/topology.hpp"
#include "qoesim/visit_matrix.hpp"

namespace qoesim {

using Label = std::uint8_t;  // 1 = dissatisfied, 0 = satisfied

inline constexpr double kToleranceEpsilon = 1e-6;

struct UserProfileParams {
  double mu = 0.25;
  double sigma = 0.029;
  double psi = 0.0;

  void validate() const {
    detail::require(mu > 0.0 && mu < 1.0, "user profile: mu must be in (0, 1)");
    detail::require(sigma > 0.0, "user profile: sigma must be > 0");
    detail::require(psi >= 0.0 && psi <= 1.0, "user profile: psi must be in [0, 1]");
  }
};

struct SatisfactionVector {
  std::vector<Label> labels;
  std::vector<double> tolerances;

  std::size_t size() const { return labels.size(); }
  std::size_t dissatisfied() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1}));
  }
  double dissatisfied_fraction() const {
    return labels.empty() ? 0.0 : static_cast<double>(dissatisfied()) / static_cast<double>(labels.size());
  }

  friend bool operator==(const SatisfactionVector&, const SatisfactionVector&) = default;
};

/// N i.i.d. Normal(mu, sigma^2) tolerances clamped into [eps, 1 - eps].
inline std::vector<double> draw_tolerances(std::size_t users, double mu, double sigma, Rng& rng) {
  detail::require(mu > 0.0 && mu < 1.0, "draw_tolerances: mu must be in (0, 1)");
  detail::require(sigma >= 0.0, "draw_tolerances: sigma must be >= 0");
  std::vector<double> u(users);
  for (double& v : u)
    v = std::clamp(mu + sigma * standard_normal(rng), kToleranceEpsilon, 1.0 - kToleranceEpsilon);
  return u;
}

/// Per-user time spent in the given sites.
inline std::vector<double> time_in_sites(const VisitMatrix& visits, std::span<const SiteId> sites) {
  std::vector<double> out(visits.users(), 0.0);
  for (SiteId j : sites) detail::require(j < visits.sites(), "site id out of range");
  for (UserId i = 0; i < visits.users(); ++i) {
    double s = 0.0;
    for (SiteId j : sites) s += visits(i, j);
    out[i] = s;
  }
  return out;
}

/// s_i = 1 iff time in under-performing sites >= u_i * T.
inline SatisfactionVector compute_satisfaction(const VisitMatrix& visits, std::span<const SiteId> underperforming,
                                               std::span<const double> tolerances) {
  detail::require(tolerances.size() == visits.users(), "compute_satisfaction: one tolerance per user required");
  const auto bad_time = time_in_sites(visits, underperforming);
  SatisfactionVector out;
  out.tolerances.assign(tolerances.begin(), tolerances.end());
  out.labels.resize(visits.users());
  for (UserId i = 0; i < visits.users(); ++i)
    out.labels[i] = bad_time[i] >= tolerances[i] * visits.horizon() ? 1 : 0;
  return out;
}

/// Redraws the labels of a uniformly chosen floor(psi * N) users as fair coin
/// flips; everyone else keeps their label.
inline SatisfactionVector apply_label_noise(SatisfactionVector s, double psi, Rng& rng) {
  detail::require(psi >= 0.0 && psi <= 1.0, "apply_label_noise: psi must be in [0, 1]");
  const std::size_t n = s.size();
  const auto noisy = static_cast<std::size_t>(std::floor(psi * static_cast<double>(n) + 1e-9));
  if (noisy == 0) return s;
  std::vector<UserId> pool(n);
  std::iota(pool.begin(), pool.end(), UserId{0});
  for (std::size_t k = 0; k < noisy; ++k) {
    const std::size_t pick = k + uniform_index(rng, n - k);
    std::swap(pool[k], pool[pick]);
    s.labels[pool[k]] = bernoulli(rng, 0.5) ? 1 : 0;
  }
  return s;
}

struct CalibrationOptions {
  double sigma_min = 1e-4;
  double sigma_max = 0.5;
  std::size_t redraws = 5;
  std::size_t scan_points = 32;
  std::size_t max_probes = 64;
  // Return the probe closest to the target instead of failing.
  bool best_effort = false;
  // Shrink the target by this much on each side first, falling back to the
  // full target when that is infeasible. Unset: min((hi - lo) / 4,
  // 3 sqrt(0.25 / N)), three binomial standard errors at p = 1/2.
  std::optional<double> margin;
};

struct CalibrationResult {
  double sigma = 0.0;
  double fraction = 0.0;  // mean dissatisfied fraction over the redraws
  bool in_target = false;
};

namespace detail {

// Smallest sigma in [sigma_min, sigma_max] whose mean dissatisfied fraction
// (over `opts.redraws` tolerance redraws) lands in [lo, hi]: a coarse scan
// brackets the first crossing into the target, bisection refines it.
inline CalibrationResult calibrate_in(const VisitMatrix& visits, std::span<const SiteId> underperforming, double mu,
                                      double lo, double hi, std::uint64_t seed, const CalibrationOptions& opts) {
  const std::size_t n = visits.users();
  const auto bad_time = time_in_sites(visits, underperforming);
  const double horizon = visits.horizon();

  Rng rng = make_rng(seed);
  std::vector<double> z(n * opts.redraws);
  for (double& v : z) v = standard_normal(rng);

  auto fraction_at = [&](double sigma) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < opts.redraws; ++r)
      for (UserId i = 0; i < n; ++i) {
        const double u = std::clamp(mu + sigma * z[r * n + i], kToleranceEpsilon, 1.0 - kToleranceEpsilon);
        hits += bad_time[i] >= u * horizon;
      }
    return static_cast<double>(hits) / static_cast<double>(n * opts.redraws);
  };

  double min_seen = 1.0;
  double max_seen = 0.0;
  CalibrationResult closest;
  double closest_gap = std::numeric_limits<double>::infinity();
  auto probe = [&](double sigma) {
    const double f = fraction_at(sigma);
    min_seen = std::min(min_seen, f);
    max_seen = std::max(max_seen, f);
    const double gap = f < lo ? lo - f : (f > hi ? f - hi : 0.0);
    if (gap < closest_gap) {
      closest_gap = gap;
      closest = CalibrationResult{sigma, f, gap == 0.0};
    }
    return f;
  };

  // Side of the target a fraction falls on: -1 below, 0 inside, +1 above.
  auto side = [&](double f) { return f < lo ? -1 : (f > hi ? 1 : 0); };

  // Smallest sigma first: it is the least noisy labelling.
  const double f_min = probe(opts.sigma_min);
  const int start_side = side(f_min);
  if (start_side == 0) return closest;

  // Coarse ascending scan for the first sigma that leaves the starting side,
  // then bisection on that bracket.
  double a = opts.sigma_min;
  double b = 0.0;
  bool bracketed = false;
  for (std::size_t g = 1; g <= opts.scan_points; ++g) {
    const double sigma = opts.sigma_min + (opts.sigma_max - opts.sigma_min) * static_cast<double>(g) /
                                              static_cast<double>(opts.scan_points);
    if (side(probe(sigma)) != start_side) {
      b = sigma;
      bracketed = true;
      break;
    }
    a = sigma;
  }
  if (bracketed) {
    for (std::size_t k = 0; k < opts.max_probes && b - a > 1e-12; ++k) {
      const double mid = 0.5 * (a + b);
      const int s = side(probe(mid));
      if (s == start_side) a = mid;
      else b = mid;
    }
    const double f_b = fraction_at(b);
    if (side(f_b) == 0) return CalibrationResult{b, f_b, true};
  }

  if (opts.best_effort) return closest;
  std::ostringstream msg;
  msg << "calibrate_sigma: no sigma in [" << opts.sigma_min << ", " << opts.sigma_max
      << "] gives a dissatisfied fraction in [" << lo << ", " << hi << "]; achieved fractions spanned ["
      << min_seen << ", " << max_seen << "]";
  throw InfeasibleError(msg.str());
}

}  // namespace detail

/// Smallest sigma whose dissatisfied fraction lands in [lo, hi], aiming
/// first at the target shrunk by `opts.margin`. The redraws share their
/// standard-normal draws across probes, so the fraction is a deterministic
/// function of sigma.
inline CalibrationResult calibrate_sigma(const VisitMatrix& visits, std::span<const SiteId> underperforming,
                                         double mu, double lo, double hi, std::uint64_t seed,
                                         const CalibrationOptions& opts = {}) {
  detail::require(lo >= 0.0 && hi <= 1.0 && lo < hi, "calibrate_sigma: need 0 <= lo < hi <= 1");
  detail::require(mu > 0.0 && mu < 1.0, "calibrate_sigma: mu must be in (0, 1)");
  detail::require(opts.redraws >= 1 && opts.sigma_min > 0.0 && opts.sigma_min < opts.sigma_max,
                  "calibrate_sigma: invalid options");
  detail::require(!opts.margin || *opts.margin >= 0.0, "calibrate_sigma: margin must be >= 0");
  const double margin = opts.margin.value_or(
      std::min(0.25 * (hi - lo), 3.0 * std::sqrt(0.25 / static_cast<double>(std::max<std::size_t>(1, visits.users())))));
  if (margin > 0.0 && 2.0 * margin < hi - lo) {
    CalibrationOptions strict = opts;
    strict.best_effort = false;
    try {
      return detail::calibrate_in(visits, underperforming, mu, lo + margin, hi - margin, seed, strict);
    } catch (const InfeasibleError&) {
    }
  }
  return detail::calibrate_in(visits, underperforming, mu, lo, hi, seed, opts);
}

/// Delimited text: header "user,label,tolerance" then one row per user.
inline void write_satisfaction(std::ostream& out, const SatisfactionVector& s) {
  out << "user,label,tolerance\n";
  for (UserId i = 0; i < s.size(); ++i)
    out << i << ',' << int(s.labels[i]) << ',' << text::format_exact(s.tolerances.empty() ? 0.0 : s.tolerances[i])
        << '\n';
}

inline SatisfactionVector read_satisfaction(std::istream& in) {
  SatisfactionVector s;
  std::string line;
  std::getline(in, line);
  if (text::trim(line) != "user,label,tolerance") throw InputError("satisfaction file: bad header");
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    const auto id = f.size() == 3 ? text::parse_integer(f[0]) : std::nullopt;
    const auto label = f.size() == 3 ? text::parse_integer(f[1]) : std::nullopt;
    const auto tol = f.size() == 3 ? text::parse_double(f[2]) : std::nullopt;
    if (!id || !label || !tol || *id != static_cast<std::int64_t>(s.size()) || (*label != 0 && *label != 1))
      throw InputError("satisfaction file: malformed row '" + line + "'");
    s.labels.push_back(static_cast<Label>(*label));
    s.tolerances.push_back(*tol);
  }
  return s;
}

}  // namespace qoesim
