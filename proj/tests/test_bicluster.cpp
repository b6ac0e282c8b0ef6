/*
 * Copyright 2026 The simkernel Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "simkernel/bicluster.hpp"

namespace {

using namespace simkernel;
using namespace simkernel::bicluster;

Matrix block_matrix() {
  return Matrix::from_rows({{3, 1, 0, 0}, {2, 2, 0, 0}, {0, 0, 1, 3}, {0, 0, 2, 2}});
}

Matrix compress_by(const Matrix& m, unsigned rows, unsigned cols) {
  Matrix j(2, 2);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) j((rows >> r) & 1u, (cols >> c) & 1u) += m(r, c);
  return j;
}

TEST(Cocluster, BlockDiagonalIsExactOptimum) {
  const Matrix m = block_matrix();
  double best = 0.0;
  for (unsigned r = 0; r < 16; ++r)
    for (unsigned c = 0; c < 16; ++c) best = std::max(best, oracle::mutual_information(compress_by(m, r, c)));
  const auto result = cocluster_best(m, {}, 5);
  EXPECT_EQ(result.rows, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(result.columns, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_NEAR(result.final_mi(), best, 1e-12);
  EXPECT_NEAR(result.final_mi(), std::log(2.0), 1e-12);
}

TEST(Cocluster, FullResolutionIsFixedPoint) {
  Rng rng(1);
  Matrix m(5, 4);
  for (double& v : m.data()) v = 1.0 + static_cast<double>(rng.index(9));
  CoclusterOptions o;
  o.row_clusters = 5;
  o.col_clusters = 4;
  const auto c = cocluster(m, o);
  EXPECT_EQ(c.rows, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(c.columns, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_NEAR(c.final_mi(), oracle::mutual_information(m), 1e-12);
}

TEST(Cocluster, ExternalDistanceDominatesAtLargeWeight) {
  // Counts group rows {0,1,2} and {3,4,5}; the external distance groups
  // even and odd rows. Odd group sizes keep balanced starts from tying.
  const Matrix m = Matrix::from_rows({{3, 1, 0, 0}, {2, 2, 0, 0}, {1, 3, 0, 0},
                                      {0, 0, 1, 3}, {0, 0, 2, 2}, {0, 0, 3, 1}});
  Matrix ext(6, 6);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b) ext(a, b) = (a % 2 == b % 2) ? 0.0 : 1.0;
  CoclusterOptions o;
  o.weight = 1e6;
  o.external = ext;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    o.seed = seed;
    EXPECT_EQ(cocluster(m, o).rows, (std::vector<std::size_t>{0, 1, 0, 1, 0, 1}));
  }
  o.weight = 0.0;
  o.external.reset();
  EXPECT_EQ(cocluster_best(m, o, 5).rows, (std::vector<std::size_t>{0, 0, 0, 1, 1, 1}));
}

TEST(Cocluster, MutualInformationNeverDecreasesWithoutBlend) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 3 + rng.index(8), cols = 3 + rng.index(8);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform() < 0.4 ? 0.0 : static_cast<double>(rng.index(10));
    for (std::size_t r = 0; r < rows; ++r) m(r, r % cols) += 1.0;
    for (std::size_t c = 0; c < cols; ++c) m(c % rows, c) += 1.0;
    CoclusterOptions o;
    o.row_clusters = 2 + rng.index(2);
    o.col_clusters = 2 + rng.index(2);
    o.seed = static_cast<std::uint64_t>(trial);
    const auto c = cocluster(m, o);
    for (std::size_t i = 1; i < c.mi_trace.size(); ++i) EXPECT_GE(c.mi_trace[i], c.mi_trace[i - 1] - 1e-12);
    Matrix joint(o.row_clusters, o.col_clusters);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < cols; ++k) joint(c.rows[r], c.columns[k]) += m(r, k);
    EXPECT_NEAR(c.final_mi(), oracle::mutual_information(joint), 1e-12);
  }
}

TEST(Cocluster, DeterministicAndScaleInvariant) {
  Rng rng(3);
  Matrix m(8, 7);
  for (double& v : m.data()) v = static_cast<double>(rng.index(6));
  for (std::size_t r = 0; r < 7; ++r) m(r, r) += 1.0;
  m(7, 0) += 1.0;
  CoclusterOptions o;
  o.row_clusters = 3;
  o.col_clusters = 3;
  o.seed = 42;
  const auto a = cocluster(m, o);
  const auto b = cocluster(m, o);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.mi_trace, b.mi_trace);
  Matrix scaled = m;
  for (double& v : scaled.data()) v *= 7.5;
  const auto s = cocluster(scaled, o);
  EXPECT_EQ(a.rows, s.rows);
  EXPECT_EQ(a.columns, s.columns);
  o.threads = 3;
  EXPECT_EQ(cocluster(m, o).rows, a.rows);
}

TEST(Cocluster, CanonicalLabels) {
  EXPECT_EQ(canonical_labels({2, 2, 0, 1, 0}), (std::vector<std::size_t>{0, 0, 1, 2, 1}));
}

TEST(Cocluster, ZeroColumnsDroppedZeroRowsRejected) {
  Matrix m = Matrix::from_rows({{1, 0, 2, 0}, {0, 0, 3, 1}, {4, 0, 0, 1}});
  const auto c = cocluster(m, {});
  EXPECT_EQ(c.dropped_columns, (std::vector<std::size_t>{1}));
  EXPECT_EQ(c.columns[1], 0u);
  m(1, 2) = m(1, 3) = 0.0;
  EXPECT_THROW(cocluster(m, {}), DataError);
  EXPECT_THROW(cocluster(Matrix(2, 2), {}), DataError);
}

TEST(Cocluster, RejectsBadOptions) {
  CoclusterOptions o;
  o.row_clusters = 9;
  EXPECT_THROW(cocluster(block_matrix(), o), std::invalid_argument);
  o = {};
  o.weight = 1.0;
  EXPECT_THROW(cocluster(block_matrix(), o), std::invalid_argument);
}

TEST(ClusterFeatures, HandComputedJs) {
  const Matrix protos = Matrix::from_rows({{0.5, 0.5}, {1.0, 0.0}});
  const Vector f = cluster_distance_features(protos, Vector{2.0, 0.0});
  // JS((1,0), (0.5,0.5)) with midpoint (0.75, 0.25).
  const double expected = 0.5 * std::log(1.0 / 0.75) + 0.5 * (0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(0.5 / 0.25));
  EXPECT_NEAR(f[0], expected, 1e-15);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_THROW(cluster_distance_features(protos, Vector{0.0, 0.0}), DataError);
  EXPECT_THROW(cluster_distance_features(protos, Vector{1.0}), std::invalid_argument);
}

TEST(ClusterFeatures, PrototypeRowsAreDistributionsAndBounded) {
  const Matrix m = block_matrix();
  const auto c = cocluster_best(m, {}, 3);
  const Matrix protos = cluster_prototypes(m, c);
  for (std::size_t a = 0; a < protos.rows(); ++a) {
    double s = 0.0;
    for (double v : protos.row(a)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    const Vector at_proto = cluster_distance_features(protos, protos.row(a));
    EXPECT_NEAR(at_proto[a], 0.0, 1e-15);
  }
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Vector row(4);
    for (double& v : row) v = rng.uniform();
    for (double v : cluster_distance_features(m, c, row)) EXPECT_LE(v, std::log(2.0) + 1e-15);
  }
}

}  // namespace
