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

// Classification and ranking quality measures.
//
// Labels are 0 (negative) / 1 (positive). Scores rank descending. Ties count
// half a pair for AUC; AP and nDCG break ties by input order.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "simkernel/common.hpp"

namespace simkernel::metrics {

struct ConfusionMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

namespace detail {

inline void check_scores(std::span<const double> scores, std::span<const int> labels) {
  require(!scores.empty(), "metrics: empty input");
  require(scores.size() == labels.size(), "metrics: scores/labels size mismatch");
  for (double s : scores) require(!std::isnan(s), "metrics: NaN score");
  for (int l : labels) require(l == 0 || l == 1, "metrics: labels must be 0 or 1");
}

// Indices sorted by descending score, ties kept in input order.
inline std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace detail

// A sample is predicted positive when score > threshold.
inline ConfusionMetrics confusion_metrics(std::span<const double> scores,
                                          std::span<const int> labels, double threshold) {
  detail::check_scores(scores, labels);
  require(std::isfinite(threshold), "confusion_metrics: threshold must be finite");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  ConfusionMetrics m;
  m.accuracy = (tp + tn) / (tp + tn + fp + fn);
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f_measure =
      m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

// Mann-Whitney statistic: P(score(pos) > score(neg)), ties worth 1/2.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_scores(scores, labels);
  const auto order = detail::rank_order(scores);
  const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double negatives = static_cast<double>(labels.size()) - positives;
  require(positives > 0 && negatives > 0, "roc_auc: need at least one positive and one negative");

  // Walk tie groups from the top; `negatives_below` counts negatives ranked
  // strictly lower than the current group. Twice the pair score stays integral.
  double doubled_wins = 0.0;
  double negatives_seen = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double group_pos = 0.0, group_neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) ++group_pos;
      else ++group_neg;
      ++j;
    }
    negatives_seen += group_neg;
    const double negatives_below = negatives - negatives_seen;
    doubled_wins += 2.0 * group_pos * negatives_below + group_pos * group_neg;
    i = j;
  }
  return doubled_wins / 2.0 / (positives * negatives);
}

// AP = sum_t Pr(t) rel(t) / P over the descending ranking.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
  detail::check_scores(scores, labels);
  const auto order = detail::rank_order(scores);
  double hits = 0.0, sum = 0.0;
  for (std::size_t t = 0; t < order.size(); ++t) {
    if (labels[order[t]] == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(t + 1);
    }
  }
  require(hits > 0, "average_precision: no positive entries");
  return sum / hits;
}

inline double dcg(std::span<const double> relevances) {
  double value = 0.0;
  for (std::size_t t = 0; t < relevances.size(); ++t) {
    value += t == 0 ? relevances[t] : relevances[t] / std::log2(static_cast<double>(t + 1));
  }
  return value;
}

// Relevances are given in rank order (rank 1 first).
inline double ndcg(std::span<const double> relevances_in_rank_order) {
  require(!relevances_in_rank_order.empty(), "ndcg: empty input");
  for (double r : relevances_in_rank_order)
    require(r >= 0 && std::isfinite(r), "ndcg: relevances must be finite and non-negative");
  std::vector<double> ideal(relevances_in_rank_order.begin(), relevances_in_rank_order.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double ideal_dcg = dcg(ideal);
  require(ideal_dcg > 0, "ndcg: all relevances are zero");
  return dcg(relevances_in_rank_order) / ideal_dcg;
}

// nDCG of the ranking induced by `scores` (descending, stable).
inline double ndcg(std::span<const double> scores, std::span<const double> relevances) {
  require(scores.size() == relevances.size(), "ndcg: scores/relevances size mismatch");
  const auto order = detail::rank_order(scores);
  std::vector<double> ranked(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) ranked[t] = relevances[order[t]];
  return ndcg(ranked);
}

inline double mean_absolute_error(std::span<const double> predictions,
                                  std::span<const double> targets) {
  require(!predictions.empty() && predictions.size() == targets.size(),
          "mean_absolute_error: misaligned inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::abs(predictions[i] - targets[i]);
  return s / static_cast<double>(predictions.size());
}

inline double root_mean_squared_error(std::span<const double> predictions,
                                      std::span<const double> targets) {
  require(!predictions.empty() && predictions.size() == targets.size(),
          "root_mean_squared_error: misaligned inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

}  // namespace simkernel::metrics
