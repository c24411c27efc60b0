#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/text.hpp"

namespace qoesim {

using SiteId = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Site {
  SiteId id = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned bounding box in abstract planar units.
struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double diagonal() const { return std::hypot(width(), height()); }
  bool contains(Point p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  /// Square centred at the origin-corner with the given area.
  static Box square_of_area(double area) {
    const double side = std::sqrt(area);
    return Box{0.0, 0.0, side, side};
  }
};

/// Site layout plus the hidden set of under-performing sites. Sites are
/// stored so that sites()[j].id == j.
class Topology {
 public:
  Topology() = default;

  explicit Topology(std::vector<Site> sites) : sites_(std::move(sites)) {
    detail::require(!sites_.empty(), "topology must contain at least one site");
    std::sort(sites_.begin(), sites_.end(),
              [](const Site& a, const Site& b) { return a.id < b.id; });
    for (std::size_t j = 0; j < sites_.size(); ++j) {
      if (j > 0 && sites_[j].id == sites_[j - 1].id)
        throw InputError("duplicate site id " + std::to_string(sites_[j].id));
      if (sites_[j].id != j)
        throw InputError("site ids must be contiguous 0..M-1; missing id " + std::to_string(j));
    }
    extent_ = Box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Site& s : sites_) {
      extent_.min_x = std::min(extent_.min_x, s.x);
      extent_.min_y = std::min(extent_.min_y, s.y);
      extent_.max_x = std::max(extent_.max_x, s.x);
      extent_.max_y = std::max(extent_.max_y, s.y);
    }
  }

  Topology(std::vector<Site> sites, Box extent) : Topology(std::move(sites)) { extent_ = extent; }

  std::size_t size() const { return sites_.size(); }
  std::span<const Site> sites() const { return sites_; }
  const Site& site(SiteId j) const { return sites_.at(j); }
  const Box& extent() const { return extent_; }

  /// Sorted ids of under-performing sites (empty until planted).
  std::span<const SiteId> underperforming() const { return underperforming_; }
  bool is_underperforming(SiteId j) const {
    return std::binary_search(underperforming_.begin(), underperforming_.end(), j);
  }

  Topology with_underperforming(std::vector<SiteId> ids) const {
    std::sort(ids.begin(), ids.end());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      detail::require(ids[k] < size(), "under-performing id out of range");
      detail::require(k == 0 || ids[k] != ids[k - 1], "duplicate under-performing id");
    }
    detail::require(ids.size() < size(), "under-performing set must be smaller than M");
    Topology out = *this;
    out.underperforming_ = std::move(ids);
    return out;
  }

 private:
  std::vector<Site> sites_;
  Box extent_;
  std::vector<SiteId> underperforming_;
};

/// Parses one site per record: id, x, y. A first line whose id field is not
/// an integer is treated as a header. Blank lines and '#' comments are skipped.
inline Topology parse_topology(std::istream& in, char delimiter = ',',
                               const std::string& source = "<stream>") {
  std::vector<Site> sites;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split(trimmed, delimiter);
    const auto where = source + ":" + std::to_string(line_no);
    const auto id = text::parse_integer(fields.empty() ? std::string_view{} : fields[0]);
    if (first_record && !id) {
      first_record = false;
      continue;  // header
    }
    first_record = false;
    if (fields.size() != 3) throw InputError(where + ": expected 3 fields (id, x, y), got " + std::to_string(fields.size()));
    if (!id || *id < 0) throw InputError(where + ": invalid site id '" + std::string(fields[0]) + "'");
    const auto x = text::parse_double(fields[1]);
    const auto y = text::parse_double(fields[2]);
    if (!x || !y) throw InputError(where + ": invalid coordinate");
    sites.push_back(Site{static_cast<SiteId>(*id), *x, *y});
  }
  if (sites.empty()) throw InputError(source + ": no site records");
  try {
    return Topology(std::move(sites));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

inline Topology load_topology(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open topology file '" + path + "'");
  return parse_topology(in, delimiter, path);
}

inline void write_topology(std::ostream& out, const Topology& topo, char delimiter = ',') {
  out << "id" << delimiter << "x" << delimiter << "y\n";
  for (const Site& s : topo.sites())
    out << s.id << delimiter << text::format_exact(s.x) << delimiter << text::format_exact(s.y) << '\n';
}

/// M sites uniformly distributed inside `extent`.
inline Topology generate_topology(std::size_t num_sites, const Box& extent, std::uint64_t seed) {
  detail::require(num_sites >= 1, "generate_topology: M must be at least 1");
  detail::require(extent.width() > 0.0 && extent.height() > 0.0,
                  "generate_topology: extent must be non-degenerate");
  Rng rng = make_rng(seed);
  std::vector<Site> sites(num_sites);
  for (std::size_t j = 0; j < num_sites; ++j) {
    sites[j].id = j;
    sites[j].x = extent.min_x + uniform01(rng) * extent.width();
    sites[j].y = extent.min_y + uniform01(rng) * extent.height();
  }
  return Topology(std::move(sites), extent);
}

/// Samples `omega` distinct sites without replacement. With no weights every
/// site is equally likely; otherwise each successive draw picks among the
/// remaining sites proportionally to weight.
inline Topology plant_underperforming(const Topology& topo, std::size_t omega, std::uint64_t seed,
                                      std::span<const double> weights = {}) {
  const std::size_t m = topo.size();
  if (omega == 0 || omega >= m)
    throw InputError("plant_underperforming: need 0 < omega < M (omega=" + std::to_string(omega) +
                     ", M=" + std::to_string(m) + ")");
  Rng rng = make_rng(seed);
  std::vector<SiteId> chosen;
  chosen.reserve(omega);
  if (weights.empty()) {
    std::vector<SiteId> pool(m);
    std::iota(pool.begin(), pool.end(), SiteId{0});
    for (std::size_t k = 0; k < omega; ++k) {
      const std::size_t pick = k + uniform_index(rng, m - k);
      std::swap(pool[k], pool[pick]);
      chosen.push_back(pool[k]);
    }
  } else {
    detail::require(weights.size() == m, "plant_underperforming: weight vector must have M entries");
    std::vector<double> w(weights.begin(), weights.end());
    std::size_t positive = 0;
    for (double v : w) {
      detail::require(v >= 0.0 && std::isfinite(v), "plant_underperforming: weights must be finite and >= 0");
      positive += v > 0.0;
    }
    detail::require(positive >= omega, "plant_underperforming: fewer positive weights than omega");
    for (std::size_t k = 0; k < omega; ++k) {
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      double target = uniform01(rng) * total;
      std::size_t pick = m;
      for (std::size_t j = 0; j < m; ++j) {
        if (w[j] <= 0.0) continue;
        pick = j;
        if (target < w[j]) break;
        target -= w[j];
      }
      chosen.push_back(pick);
      w[pick] = 0.0;
    }
  }
  return topo.with_underperforming(std::move(chosen));
}

/// Id of the site closest (Euclidean) to `p`; ties go to the lowest id.
inline SiteId nearest_site(const Topology& topo, Point p) {
  SiteId best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const Site& s : topo.sites()) {
    const double dx = s.x - p.x;
    const double dy = s.y - p.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = s.id;
    }
  }
  return best;
}

/// Median over sites of the distance to the nearest other site. Zero for a
/// single-site topology.
inline double median_nearest_neighbor_distance(const Topology& topo) {
  const auto sites = topo.sites();
  if (sites.size() < 2) return 0.0;
  std::vector<double> nn(sites.size(), std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < sites.size(); ++a)
    for (std::size_t b = 0; b < sites.size(); ++b)
      if (a != b) nn[a] = std::min(nn[a], std::hypot(sites[a].x - sites[b].x, sites[a].y - sites[b].y));
  const auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  if (nn.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(nn.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace qoesim
