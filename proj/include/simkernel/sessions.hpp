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

// Radio bearer session records: synthetic generation, statistical
// descriptors and per-session distance columns.
//
// A session carries six report series sampled every 1.28 s and a binary
// release label (1 = drop). Descriptors hold five statistics (min, max,
// mode, mean, variance) of each series and of its forward difference.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "simkernel/common.hpp"
#include "simkernel/distances.hpp"
#include "simkernel/similarity.hpp"

namespace simkernel::sessions {

inline constexpr std::size_t kSeriesCount = 6;
inline constexpr std::size_t kStatsPerSeries = 10;
inline constexpr std::size_t kDescriptorSize = kSeriesCount * kStatsPerSeries;
inline constexpr std::size_t kModalityCount = kSeriesCount + 1;

inline constexpr std::array<const char*, kSeriesCount> kSeriesNames = {
    "cqi_avg", "harqnack_dl", "harqnack_ul", "rlc_dl", "rlc_ul", "sinr_pusch"};

struct SeriesRange {
  double lo, hi;
  double granularity;  // rounding step used for the mode
};

inline constexpr std::array<SeriesRange, kSeriesCount> kSeriesRanges = {{
    {1.0, 15.0, 1.0},
    {0.0, 1.0, 0.01},
    {0.0, 1.0, 0.01},
    {0.0, 1.0, 0.01},
    {0.0, 1.0, 0.01},
    {-4.0, 18.0, 0.1},
}};

enum Series : std::size_t { kCqi, kHarqDl, kHarqUl, kRlcDl, kRlcUl, kSinr };

struct SessionRecord {
  std::string id;
  std::array<Vector, kSeriesCount> series;
  int label = 0;  // 1 = drop

  std::size_t length() const { return series[0].size(); }

  void validate() const {
    require(label == 0 || label == 1, "SessionRecord: label must be 0 or 1");
    require(length() >= 1, "SessionRecord: empty series");
    for (std::size_t s = 0; s < kSeriesCount; ++s) {
      require(series[s].size() == length(), "SessionRecord: series lengths differ");
      for (double v : series[s])
        require(std::isfinite(v) && v >= kSeriesRanges[s].lo && v <= kSeriesRanges[s].hi,
                std::string("SessionRecord: value out of range in ") + kSeriesNames[s]);
    }
  }
};

// ---------------------------------------------------------------------------
// Generation.

struct GeneratorOptions {
  std::size_t min_len = 15;
  std::size_t max_len = 0;  // 0 selects 2 * min_len
};

namespace detail {

inline double clip(double v, std::size_t s) {
  return std::clamp(v, kSeriesRanges[s].lo, kSeriesRanges[s].hi);
}

// AR(1) noise around a per-session level.
inline Vector ar_series(Rng& rng, std::size_t n, double level, double noise, double persistence) {
  Vector out(n);
  double e = rng.normal() * noise;
  for (std::size_t t = 0; t < n; ++t) {
    out[t] = level + e;
    e = persistence * e + std::sqrt(1.0 - persistence * persistence) * noise * rng.normal();
  }
  return out;
}

inline SessionRecord generate_one(Rng& rng, int label, std::size_t length) {
  SessionRecord s;
  s.label = label;
  auto& x = s.series;
  x[kCqi] = ar_series(rng, length, rng.uniform(6.0, 13.0), 1.2, 0.6);
  x[kHarqDl] = ar_series(rng, length, rng.uniform(0.02, 0.15), 0.03, 0.5);
  x[kHarqUl] = ar_series(rng, length, rng.uniform(0.02, 0.15), 0.03, 0.5);
  x[kRlcDl] = ar_series(rng, length, rng.uniform(0.0, 0.05), 0.015, 0.5);
  x[kRlcUl] = ar_series(rng, length, rng.uniform(0.0, 0.05), 0.015, 0.5);
  x[kSinr] = ar_series(rng, length, rng.uniform(4.0, 14.0), 1.5, 0.7);

  // Degradation window: a ramp over the last `span` reports. Drops always
  // degrade; a fraction of normal sessions show a dip that recovers before
  // the end, so that extreme values alone do not give the label away.
  const auto ramp = [&](std::size_t begin, std::size_t end, double sinr_drop, double ul_rise,
                        double dl_rise, double cqi_drop) {
    const double width = static_cast<double>(end - begin);
    for (std::size_t t = begin; t < end; ++t) {
      const double f = static_cast<double>(t - begin + 1) / width;
      x[kSinr][t] -= sinr_drop * f;
      x[kHarqUl][t] += ul_rise * f;
      x[kRlcUl][t] += 0.8 * ul_rise * f;
      x[kHarqDl][t] += dl_rise * f;
      x[kCqi][t] -= cqi_drop * f;
    }
  };
  if (label == 1) {
    const std::size_t span = std::min(length, 6 + rng.index(7));
    ramp(length - span, length, rng.uniform(4.0, 10.0), rng.uniform(0.15, 0.5),
         rng.uniform(0.0, 0.15), rng.uniform(0.0, 3.0));
  } else if (rng.uniform() < 0.3 && length >= 8) {
    const std::size_t span = 3 + rng.index(3);
    const std::size_t begin = rng.index(length - span - 2);
    ramp(begin, begin + span, rng.uniform(4.0, 10.0), rng.uniform(0.15, 0.5),
         rng.uniform(0.0, 0.15), rng.uniform(0.0, 3.0));
  }
  for (std::size_t k = 0; k < kSeriesCount; ++k)
    for (double& v : x[k]) v = clip(v, k);
  return s;
}

}  // namespace detail

// Labels are shuffled so ids do not reveal the class; every session draws
// from its own seed taken from a master stream.
inline std::vector<SessionRecord> generate_sessions(std::size_t n_drop, std::size_t n_normal,
                                                    std::uint64_t seed,
                                                    GeneratorOptions options = {}) {
  require(n_drop > 0 && n_normal > 0, "generate_sessions: counts must be positive");
  require(options.min_len >= 1, "generate_sessions: min_len must be at least 1");
  if (options.max_len == 0) options.max_len = 2 * options.min_len;
  require(options.max_len >= options.min_len, "generate_sessions: max_len below min_len");

  Rng master(seed);
  std::vector<int> labels(n_drop, 1);
  labels.resize(n_drop + n_normal, 0);
  master.shuffle(labels);
  std::vector<SessionRecord> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng rng(master.next());
    const std::size_t length = options.min_len + rng.index(options.max_len - options.min_len + 1);
    SessionRecord s = detail::generate_one(rng, labels[i], length);
    s.id = "s" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptors.

// min, max, mode, mean, population variance; the mode is the most frequent
// value after rounding to `granularity`, smallest value on ties.
inline std::array<double, 5> basic_statistics(std::span<const double> v, double granularity) {
  require(!v.empty(), "basic_statistics: empty series");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  std::map<long long, std::size_t> counts;
  for (double x : v) ++counts[std::llround(x / granularity)];
  long long mode_key = counts.begin()->first;
  std::size_t best = 0;
  for (const auto& [key, count] : counts)
    if (count > best) {
      best = count;
      mode_key = key;
    }
  return {*lo, *hi, static_cast<double>(mode_key) * granularity, mean, var};
}

inline std::vector<std::string> descriptor_names() {
  static constexpr std::array<const char*, 5> kStats = {"min", "max", "mode", "mean", "var"};
  std::vector<std::string> names;
  for (const char* series : kSeriesNames) {
    for (const char* s : kStats) names.push_back(std::string(series) + ":" + s);
    for (const char* s : kStats) names.push_back(std::string(series) + ":grad_" + s);
  }
  return names;
}

// Series with the last `truncate_at` reports removed.
inline std::array<Vector, kSeriesCount> truncated_series(const SessionRecord& s,
                                                         std::size_t truncate_at) {
  require(truncate_at < s.length(), "truncated_series: truncation removes every report");
  std::array<Vector, kSeriesCount> out;
  const std::size_t keep = s.length() - truncate_at;
  for (std::size_t k = 0; k < kSeriesCount; ++k)
    out[k].assign(s.series[k].begin(), s.series[k].begin() + static_cast<std::ptrdiff_t>(keep));
  return out;
}

inline Vector describe_session(const SessionRecord& s, std::size_t truncate_at = 0) {
  require(truncate_at < s.length(), "describe_session: truncation removes every report");
  if (s.length() - truncate_at < 2)
    throw DataError("describe_session: fewer than two reports left after truncation");
  const auto series = truncated_series(s, truncate_at);
  Vector out;
  out.reserve(kDescriptorSize);
  for (std::size_t k = 0; k < kSeriesCount; ++k) {
    const Vector& v = series[k];
    Vector grad(v.size() - 1);
    for (std::size_t t = 0; t + 1 < v.size(); ++t) grad[t] = v[t + 1] - v[t];
    const double g = kSeriesRanges[k].granularity;
    for (double x : basic_statistics(v, g)) out.push_back(x);
    for (double x : basic_statistics(grad, g)) out.push_back(x);
  }
  return out;
}

// Z-scoring of descriptors with training moments, so the Euclidean
// descriptor distance is not dominated by the widest-range statistics.
struct DescriptorScaler {
  Vector means;
  Vector stdevs;

  static DescriptorScaler fit(const std::vector<Vector>& train) {
    require(train.size() >= 2, "DescriptorScaler: need at least two descriptors");
    const std::size_t d = train.front().size();
    DescriptorScaler s{Vector(d, 0.0), Vector(d, 0.0)};
    for (const auto& v : train) {
      require(v.size() == d, "DescriptorScaler: ragged descriptors");
      for (std::size_t i = 0; i < d; ++i) s.means[i] += v[i];
    }
    for (double& m : s.means) m /= static_cast<double>(train.size());
    for (const auto& v : train)
      for (std::size_t i = 0; i < d; ++i) s.stdevs[i] += (v[i] - s.means[i]) * (v[i] - s.means[i]);
    for (std::size_t i = 0; i < d; ++i) {
      const double sd = std::sqrt(s.stdevs[i] / static_cast<double>(train.size()));
      s.stdevs[i] = std::max(sd, 1e-9 * (1.0 + std::abs(s.means[i])));
    }
    return s;
  }

  Vector apply(const Vector& v) const {
    require(v.size() == means.size(), "DescriptorScaler: dimension mismatch");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - means[i]) / stdevs[i];
    return out;
  }
};

// A session reduced to what the distance columns read.
struct PreparedSession {
  std::array<Vector, kSeriesCount> series;
  Vector descriptor;
  int label = 0;
};

inline PreparedSession prepare_session(const SessionRecord& s, std::size_t truncate_at,
                                       const DescriptorScaler* scaler = nullptr) {
  PreparedSession p;
  p.descriptor = describe_session(s, truncate_at);
  if (scaler) p.descriptor = scaler->apply(p.descriptor);
  p.series = truncated_series(s, truncate_at);
  p.label = s.label;
  return p;
}

// Six DTW modalities in series order, then the descriptor Euclidean distance.
inline std::vector<similarity::DistanceSpec<PreparedSession>> session_specs() {
  std::vector<similarity::DistanceSpec<PreparedSession>> specs;
  for (std::size_t k = 0; k < kSeriesCount; ++k)
    specs.push_back({std::string("dtw_") + kSeriesNames[k],
                     [k](const PreparedSession& a, const PreparedSession& b) {
                       return distances::dtw(a.series[k], b.series[k]);
                     }});
  specs.push_back({"descriptor_l2", [](const PreparedSession& a, const PreparedSession& b) {
                     return distances::l2(a.descriptor, b.descriptor);
                   }});
  return specs;
}

// 7 |S| distances, sample-major, each block [6 x DTW, descriptor L2].
inline Vector session_distance_columns(const PreparedSession& session,
                                       const std::vector<PreparedSession>& samples) {
  if (samples.empty()) throw DataError("session_distance_columns: empty sample set");
  similarity::SampleSet<PreparedSession> set;
  set.samples = samples;
  const Matrix m = similarity::distance_columns(std::vector<PreparedSession>{session}, set,
                                                session_specs(), similarity::GraphType::kPairwise);
  return m.row_vector(0);
}

inline Vector session_distance_columns(const SessionRecord& session,
                                       const std::vector<SessionRecord>& samples,
                                       std::size_t truncate_at,
                                       const DescriptorScaler* scaler = nullptr) {
  std::vector<PreparedSession> prepared;
  prepared.reserve(samples.size());
  for (const auto& s : samples) prepared.push_back(prepare_session(s, truncate_at, scaler));
  return session_distance_columns(prepare_session(session, truncate_at, scaler), prepared);
}

}  // namespace simkernel::sessions
