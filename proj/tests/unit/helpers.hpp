#pragma once

#include <initializer_list>
#include <vector>

#include "qoesim/topology.hpp"
#include "qoesim/visit_matrix.hpp"

namespace qoesim::fixtures {

inline VisitMatrix matrix(std::initializer_list<std::initializer_list<double>> rows, double horizon = 1.0) {
  const std::size_t m = rows.begin()->size();
  VisitMatrix v(rows.size(), m, horizon);
  UserId i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double t : r) v(i, j++) = t;
    ++i;
  }
  return v;
}

inline Topology grid_topology(std::size_t side) {
  std::vector<Site> sites;
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t b = 0; b < side; ++b)
      sites.push_back(Site{a * side + b, static_cast<double>(b), static_cast<double>(a)});
  return Topology(std::move(sites));
}

}  // namespace qoesim::fixtures
