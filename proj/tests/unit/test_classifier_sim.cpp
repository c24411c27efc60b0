#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "qoesim/classifier_sim.hpp"

using namespace qoesim;

namespace {

std::vector<Label> half_and_half(std::size_t n) {
  std::vector<Label> t(n, 0);
  for (std::size_t i = 0; i < n; i += 2) t[i] = 1;
  return t;
}

}  // namespace

TEST(Classifier, PerfectClassifierReproducesTruth) {
  const auto truth = half_and_half(1001);
  Rng rng = make_rng(1);
  EXPECT_EQ(predict_labels(truth, ClassifierSpec{0.0, 1.0}, rng), truth);
}

TEST(Classifier, NeverPositiveClassifier) {
  const auto truth = half_and_half(1000);
  Rng rng = make_rng(2);
  for (Label l : predict_labels(truth, ClassifierSpec{0.0, 0.0}, rng)) ASSERT_EQ(l, 0);
  for (Label l : predict_labels(truth, ClassifierSpec{1.0, 1.0}, rng)) ASSERT_EQ(l, 1);
}

TEST(Classifier, EmpiricalRatesMatchSpec) {
  const std::size_t n = 100000;
  const auto truth = half_and_half(n);
  Rng rng = make_rng(3);
  const auto pred = predict_labels(truth, ClassifierSpec{0.2, 0.5}, rng);
  double tp = 0, fp = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i]) {
      ++pos;
      tp += pred[i];
    } else {
      ++neg;
      fp += pred[i];
    }
  }
  EXPECT_NEAR(tp / pos, 0.5, 0.01);
  EXPECT_NEAR(fp / neg, 0.2, 0.01);
}

TEST(Classifier, DeterministicAndCoupled) {
  const auto truth = half_and_half(5000);
  Rng a = make_rng(4), b = make_rng(4), c = make_rng(4);
  const auto low = predict_labels(truth, ClassifierSpec{0.1, 0.3}, a);
  EXPECT_EQ(low, predict_labels(truth, ClassifierSpec{0.1, 0.3}, b));
  const auto high = predict_labels(truth, ClassifierSpec{0.2, 0.6}, c);
  for (std::size_t i = 0; i < truth.size(); ++i) ASSERT_LE(low[i], high[i]);
}

TEST(Classifier, RejectsRatesOutsideUnitInterval) {
  const auto truth = half_and_half(4);
  Rng rng = make_rng(5);
  EXPECT_THROW(predict_labels(truth, ClassifierSpec{-0.1, 0.5}, rng), InputError);
  EXPECT_THROW(predict_labels(truth, ClassifierSpec{0.1, 1.5}, rng), InputError);
}

TEST(Grid, SizesAndReferenceSubset) {
  EXPECT_EQ(working_point_grid(1.0).size(), 4u);
  EXPECT_EQ(working_point_grid(0.5).size(), 9u);
  const auto g = working_point_grid(0.05);
  ASSERT_EQ(g.size(), 441u);
  std::size_t ref = 0;
  for (const auto& p : g) ref += p.in_reference_count;
  EXPECT_EQ(ref, 400u);
  EXPECT_DOUBLE_EQ(g.back().spec.fpr, 1.0);
  EXPECT_DOUBLE_EQ(g.back().spec.tpr, 1.0);
  EXPECT_DOUBLE_EQ(g[1].spec.tpr, 0.05);
  EXPECT_THROW(working_point_grid(0.0), InputError);
  EXPECT_THROW(working_point_grid(1.5), InputError);
}

TEST(Grid, OrderedByFprThenTpr) {
  const auto g = working_point_grid(0.25);
  ASSERT_EQ(g.size(), 25u);
  std::set<std::pair<double, double>> seen;
  for (std::size_t k = 1; k < g.size(); ++k) {
    const auto& a = g[k - 1].spec;
    const auto& b = g[k].spec;
    ASSERT_TRUE(a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr));
  }
  for (const auto& p : g) seen.insert({p.spec.fpr, p.spec.tpr});
  EXPECT_EQ(seen.size(), 25u);
}

TEST(Grid, NonDividingStepIsCapped) {
  const auto g = working_point_grid(0.3);
  ASSERT_EQ(g.size(), 16u);
  for (const auto& p : g) EXPECT_LE(p.spec.tpr, 1.0);
}

TEST(ReferencePoints, ContainKnownPairs) {
  const auto pts = reference_working_points();
  EXPECT_EQ(pts.size(), 5u);
  bool low = false, high = false;
  for (const auto& p : pts) {
    EXPECT_GT(p.spec.tpr, p.spec.fpr) << p.name;
    EXPECT_NO_THROW(p.spec.validate());
    low |= p.spec == ClassifierSpec{0.05, 0.09};
    high |= p.spec == ClassifierSpec{0.35, 0.50};
  }
  EXPECT_TRUE(low);
  EXPECT_TRUE(high);
}
