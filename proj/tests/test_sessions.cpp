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

#include <algorithm>
#include <cmath>
#include <vector>

#include "simkernel/sessions.hpp"

namespace {

using namespace simkernel;
using namespace simkernel::sessions;

SessionRecord constant_session(std::size_t n) {
  SessionRecord s;
  s.id = "c";
  for (std::size_t k = 0; k < kSeriesCount; ++k) s.series[k] = Vector(n, kSeriesRanges[k].lo + kSeriesRanges[k].granularity * 3);
  return s;
}

TEST(Generator, DeterministicAndBalanced) {
  const auto a = generate_sessions(40, 60, 9);
  const auto b = generate_sessions(40, 60, 9);
  ASSERT_EQ(a.size(), 100u);
  int drops = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].series, b[i].series);
    drops += a[i].label;
  }
  EXPECT_EQ(drops, 40);
  EXPECT_NE(generate_sessions(40, 60, 10)[0].series, a[0].series);
}

TEST(Generator, ValuesWithinRangesAndLengths) {
  GeneratorOptions o;
  o.min_len = 12;
  o.max_len = 20;
  for (const auto& s : generate_sessions(100, 100, 3, o)) {
    EXPECT_NO_THROW(s.validate());
    EXPECT_GE(s.length(), 12u);
    EXPECT_LE(s.length(), 20u);
  }
}

TEST(Generator, DropsLoseSinrTowardsTheEnd) {
  int drops = 0, falling = 0;
  for (const auto& s : generate_sessions(500, 10, 4)) {
    if (!s.label) continue;
    ++drops;
    const auto& v = s.series[kSinr];
    const double head = (v[0] + v[1] + v[2]) / 3.0;
    const double tail = (v[v.size() - 1] + v[v.size() - 2] + v[v.size() - 3]) / 3.0;
    falling += tail < head;
  }
  EXPECT_GE(falling, 0.9 * drops);
}

TEST(Generator, RejectsBadCounts) {
  EXPECT_THROW(generate_sessions(0, 5, 1), std::invalid_argument);
  GeneratorOptions o;
  o.min_len = 10;
  o.max_len = 5;
  EXPECT_THROW(generate_sessions(1, 1, 1, o), std::invalid_argument);
}

TEST(Statistics, ConstantSeries) {
  const Vector d = describe_session(constant_session(6));
  ASSERT_EQ(d.size(), kDescriptorSize);
  for (std::size_t k = 0; k < kSeriesCount; ++k) {
    const double* s = &d[k * 10];
    EXPECT_EQ(s[0], s[1]);
    EXPECT_NEAR(s[2], s[0], 1e-12);
    EXPECT_NEAR(s[3], s[0], 1e-12);
    EXPECT_NEAR(s[4], 0.0, 1e-24);
    for (int g = 5; g < 10; ++g) EXPECT_EQ(s[g], 0.0);
  }
}

TEST(Statistics, RampGradient) {
  SessionRecord s = constant_session(3);
  s.series[kCqi] = {1, 2, 3};
  const Vector d = describe_session(s);
  const double* cqi = &d[kCqi * 10];
  EXPECT_EQ(cqi[0], 1.0);
  EXPECT_EQ(cqi[1], 3.0);
  EXPECT_EQ(cqi[3], 2.0);
  EXPECT_DOUBLE_EQ(cqi[4], 2.0 / 3.0);
  EXPECT_EQ(cqi[5 + 3], 1.0);  // gradient mean
  EXPECT_EQ(cqi[5 + 4], 0.0);  // gradient variance
}

TEST(Statistics, ModeRoundsAndPrefersSmallestOnTies) {
  // Rounded to hundredths: 0.12 twice, 0.30 twice; the smaller wins.
  const auto s = basic_statistics(Vector{0.301, 0.121, 0.119, 0.299, 0.5}, 0.01);
  EXPECT_NEAR(s[2], 0.12, 1e-12);
  EXPECT_EQ(basic_statistics(Vector{7.2, 6.8, 9.0}, 1.0)[2], 7.0);
}

TEST(Statistics, TruncationDropsTrailingReports) {
  auto sessions = generate_sessions(1, 1, 5);
  const auto& s = sessions[0];
  EXPECT_EQ(describe_session(s, 0), describe_session(s));
  SessionRecord head = s;
  for (auto& v : head.series) v.resize(v.size() - 4);
  EXPECT_EQ(describe_session(s, 4), describe_session(head));
  EXPECT_THROW(describe_session(s, s.length() - 1), DataError);
  EXPECT_THROW(describe_session(s, s.length()), std::invalid_argument);
}

TEST(Statistics, OrderMattersOnlyForGradients) {
  const auto sessions = generate_sessions(1, 1, 6);
  SessionRecord s = sessions[0];
  SessionRecord reversed = s;
  for (auto& v : reversed.series) std::reverse(v.begin(), v.end());
  const Vector a = describe_session(s), b = describe_session(reversed);
  bool gradient_changed = false;
  for (std::size_t k = 0; k < kSeriesCount; ++k) {
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(a[k * 10 + i], b[k * 10 + i], 1e-9);
    for (int i = 5; i < 10; ++i) gradient_changed |= std::abs(a[k * 10 + i] - b[k * 10 + i]) > 1e-9;
  }
  EXPECT_TRUE(gradient_changed);
}

TEST(Statistics, DescriptorNames) {
  const auto names = descriptor_names();
  ASSERT_EQ(names.size(), kDescriptorSize);
  EXPECT_EQ(names[0], std::string(kSeriesNames[0]) + ":min");
  EXPECT_EQ(names[9], std::string(kSeriesNames[0]) + ":grad_var");
}

TEST(Scaler, ZScoresTrainingDescriptors) {
  const auto sessions = generate_sessions(10, 10, 7);
  std::vector<Vector> d;
  for (const auto& s : sessions) d.push_back(describe_session(s));
  const auto scaler = DescriptorScaler::fit(d);
  Vector mean(kDescriptorSize, 0.0);
  for (const auto& v : d) {
    const Vector z = scaler.apply(v);
    for (std::size_t i = 0; i < z.size(); ++i) mean[i] += z[i] / 20.0;
  }
  for (double m : mean) EXPECT_NEAR(m, 0.0, 1e-9);
}

TEST(DistanceColumns, CountsSelfAndDelegation) {
  const auto sessions = generate_sessions(15, 15, 8);
  const std::vector<SessionRecord> samples(sessions.begin(), sessions.end());
  const Vector cols = session_distance_columns(sessions[3], samples, 0);
  ASSERT_EQ(cols.size(), 210u);
  for (std::size_t k = 0; k < kModalityCount; ++k) EXPECT_EQ(cols[3 * kModalityCount + k], 0.0);
  for (std::size_t k = 0; k < kSeriesCount; ++k)
    EXPECT_EQ(cols[5 * kModalityCount + k], distances::dtw(sessions[3].series[k], sessions[5].series[k]));
  EXPECT_EQ(cols[5 * kModalityCount + 6],
            distances::l2(describe_session(sessions[3]), describe_session(sessions[5])));
  EXPECT_THROW(session_distance_columns(sessions[0], {}, 0), DataError);
}

TEST(DistanceColumns, TruncationAppliesToSeries) {
  const auto sessions = generate_sessions(2, 2, 9);
  const Vector cols = session_distance_columns(sessions[0], {sessions[1]}, 3);
  const auto a = truncated_series(sessions[0], 3), b = truncated_series(sessions[1], 3);
  EXPECT_EQ(cols[kSinr], distances::dtw(a[kSinr], b[kSinr]));
}

}  // namespace
