#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "qoesim/mobility.hpp"
#include "qoesim/visit_matrix.hpp"

using namespace qoesim;
using fixtures::matrix;

namespace {

VisitMatrix sample_matrix() {
  const Topology t = generate_topology(12, Box::square_of_area(20.0), 3);
  return simulate_population(t, MobilityParams::s1(), 25, 8, 1);
}

}  // namespace

TEST(VisitMatrix, AccessorsAndTotals) {
  const VisitMatrix v = matrix({{0.5, 0.25, 0.25}, {0.0, 1.0, 0.0}});
  EXPECT_EQ(v.users(), 2u);
  EXPECT_EQ(v.sites(), 3u);
  EXPECT_DOUBLE_EQ(v(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(v.row_total(0), 1.0);
  EXPECT_EQ(v.row(1)[1], 1.0);
}

TEST(VisitMatrix, TextRoundTripIsExact) {
  const VisitMatrix v = sample_matrix();
  std::stringstream buf;
  write_visit_matrix_text(buf, v);
  EXPECT_EQ(read_visit_matrix(buf), v);
}

TEST(VisitMatrix, BinaryRoundTripIsExact) {
  const VisitMatrix v = sample_matrix();
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_visit_matrix_binary(buf, v);
  EXPECT_EQ(read_visit_matrix(buf), v);
}

TEST(VisitMatrix, FileRoundTripAutoDetects) {
  const VisitMatrix v = sample_matrix();
  const auto path = ::testing::TempDir() + "vm.bin";
  {
    std::ofstream out(path, std::ios::binary);
    write_visit_matrix_binary(out, v);
  }
  EXPECT_EQ(load_visit_matrix(path), v);
  EXPECT_THROW(load_visit_matrix(::testing::TempDir() + "missing.vm"), InputError);
}

TEST(VisitMatrix, MalformedInputsAreRejected) {
  std::istringstream no_header("0.5,0.5\n");
  EXPECT_THROW(read_visit_matrix(no_header), InputError);
  std::istringstream short_rows("# visit-matrix 2 2 1\n0.5,0.5\n");
  EXPECT_THROW(read_visit_matrix(short_rows), InputError);
  std::istringstream wide("# visit-matrix 1 2 1\n0.5,0.25,0.25\n");
  EXPECT_THROW(read_visit_matrix(wide), InputError);
  std::istringstream negative("# visit-matrix 1 2 1\n1.5,-0.5\n");
  EXPECT_THROW(read_visit_matrix(negative), InputError);
  std::istringstream empty("");
  EXPECT_THROW(read_visit_matrix(empty), InputError);
}

TEST(VisitMatrix, RankSharesOracle) {
  const VisitMatrix v = matrix({{0.5, 0.3, 0.2}, {0.1, 0.0, 0.9}});
  const auto c = mean_rank_shares(v);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0], (0.5 + 0.9) / 2, 1e-12);
  EXPECT_NEAR(c[1], (0.3 + 0.1) / 2, 1e-12);
  EXPECT_NEAR(c[2], (0.2 + 0.0) / 2, 1e-12);
  EXPECT_NEAR(mean_top_k_share(v, 2), 0.9, 1e-12);
  EXPECT_NEAR(mean_top_k_share(v, 10), 1.0, 1e-12);
}

TEST(VisitMatrix, RankShareCurveIsNonIncreasing) {
  const auto c = mean_rank_shares(sample_matrix());
  for (std::size_t r = 1; r < c.size(); ++r) EXPECT_LE(c[r], c[r - 1] + 1e-15);
}
