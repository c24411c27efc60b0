#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qoesim/error.hpp"
#include "qoesim/rng.hpp"
#include "qoesim/satisfaction.hpp"

namespace qoesim {

/// Operating point of a binary satisfaction classifier (positive class =
/// dissatisfied).
struct ClassifierSpec {
  double fpr = 0.0;
  double tpr = 0.0;

  void validate() const {
    detail::require(fpr >= 0.0 && fpr <= 1.0 && tpr >= 0.0 && tpr <= 1.0,
                    "classifier: fpr and tpr must be in [0, 1]");
  }
  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

/// Emulated predictions: each user draws one uniform v; a dissatisfied user
/// is predicted dissatisfied iff v < TPR, a satisfied one iff v < FPR.
/// Sharing v across working points couples the predictions, so for the same
/// stream a higher TPR or FPR only ever adds positive predictions.
inline std::vector<Label> predict_labels(std::span<const Label> truth, const ClassifierSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<Label> out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double v = uniform01(rng);
    out[i] = (truth[i] ? v < spec.tpr : v < spec.fpr) ? 1 : 0;
  }
  return out;
}

struct GridPoint {
  ClassifierSpec spec;
  // Member of the sub-grid with both rates below 1.
  bool in_reference_count = false;
};

/// Inclusive grid {0, step, 2 step, ...} x same, values capped at 1, ordered
/// by FPR then TPR.
inline std::vector<GridPoint> working_point_grid(double step) {
  detail::require(step > 0.0 && step <= 1.0, "working_point_grid: step must be in (0, 1]");
  const auto n = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  // When the step divides 1, k / n gives the correctly rounded grid values.
  const bool divides = std::abs(static_cast<double>(n) * step - 1.0) < 1e-9;
  std::vector<double> values;
  for (std::size_t k = 0; k <= n; ++k)
    values.push_back(divides ? static_cast<double>(k) / static_cast<double>(n)
                             : std::min(1.0, static_cast<double>(k) * step));
  std::vector<GridPoint> grid;
  for (double f : values)
    for (double t : values) grid.push_back(GridPoint{ClassifierSpec{f, t}, f < 1.0 && t < 1.0});
  return grid;
}

struct NamedWorkingPoint {
  std::string name;
  ClassifierSpec spec;
};

/// Working points of a real binary satisfaction classifier (FPR, TPR).
inline std::vector<NamedWorkingPoint> reference_working_points() {
  return {
      {"fpr20_tpr33", {0.20, 0.33}}, {"fpr35_tpr50", {0.35, 0.50}}, {"fpr15_tpr26", {0.15, 0.26}},
      {"fpr05_tpr09", {0.05, 0.09}}, {"fpr10_tpr16", {0.10, 0.16}},
  };
}

}  // namespace qoesim
