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

// Information-theoretic co-clustering of a row x column contingency matrix.
//
// The matrix is read as a joint distribution p(X, Y). Rows and columns are
// alternately reassigned to the cluster whose model distribution is closest
// in Jensen-Shannon divergence. For a row cluster a the model over columns is
//
//   q_a(y) = p(y | b(y)) p(b(y) | a)
//
// where b(y) is the column cluster of y; columns use the mirrored form. Row
// updates may blend in an external row distance D(x, a), the mean distance
// from x to the current members of a. Both terms are min-max normalized per
// sweep before blending with weight w.
//
// Sweeps are Jacobi-style: every row is reassigned against frozen cluster
// statistics. JS updates alone do not guarantee that I(Xc; Yc) grows, so when
// w = 0 a half-sweep that would lower it is discarded. The mutual information
// trace is then non-decreasing by construction.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "simkernel/common.hpp"
#include "simkernel/distances.hpp"

namespace simkernel::bicluster {

struct CoclusterOptions {
  std::size_t row_clusters = 2;
  std::size_t col_clusters = 2;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double weight = 0.0;               // blend weight w for the external distance
  std::optional<Matrix> external;    // row x row distances, required iff weight > 0
  int threads = 1;
};

struct Coclustering {
  std::vector<std::size_t> rows;     // cluster id per row
  std::vector<std::size_t> columns;  // cluster id per column; dropped columns get 0
  std::vector<std::size_t> dropped_columns;  // all-zero columns excluded from fitting
  Matrix compressed;                 // p(row cluster, column cluster)
  Vector mi_trace;                   // I after init and after each full sweep
  Vector loss_trace;                 // blended row loss per sweep
  int iterations = 0;
  bool converged = false;
  std::size_t row_clusters = 0;
  std::size_t col_clusters = 0;
  double weight = 0.0;

  double final_mi() const { return mi_trace.empty() ? 0.0 : mi_trace.back(); }
};

// I(A; B) of a joint distribution, natural log.
inline double mutual_information(const Matrix& joint) {
  Vector pr(joint.rows(), 0.0), pc(joint.cols(), 0.0);
  for (std::size_t r = 0; r < joint.rows(); ++r)
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      pr[r] += joint(r, c);
      pc[c] += joint(r, c);
    }
  double mi = 0.0;
  for (std::size_t r = 0; r < joint.rows(); ++r)
    for (std::size_t c = 0; c < joint.cols(); ++c)
      if (joint(r, c) > 0.0) mi += joint(r, c) * std::log(joint(r, c) / (pr[r] * pc[c]));
  return std::max(0.0, mi);
}

// Relabels ids by first occurrence so equal partitions compare equal.
inline std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> map;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::find(map.begin(), map.end(), labels[i]);
    if (it == map.end()) {
      out[i] = map.size();
      map.push_back(labels[i]);
    } else {
      out[i] = static_cast<std::size_t>(it - map.begin());
    }
  }
  return out;
}

namespace detail {

inline Matrix compress(const Matrix& p, const std::vector<std::size_t>& rc,
                       const std::vector<std::size_t>& cc, std::size_t k, std::size_t l) {
  Matrix joint(k, l);
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c) joint(rc[r], cc[c]) += p(r, c);
  return joint;
}

// Model distributions over columns for each row cluster:
// q_a(y) = p(y | b(y)) p(b(y) | a).
inline Matrix row_prototypes(const Matrix& joint, const Vector& col_marginal,
                             const std::vector<std::size_t>& cc) {
  const std::size_t k = joint.rows(), l = joint.cols();
  Vector cluster_mass(l, 0.0);
  for (std::size_t c = 0; c < cc.size(); ++c) cluster_mass[cc[c]] += col_marginal[c];
  Matrix q(k, cc.size());
  for (std::size_t a = 0; a < k; ++a) {
    double row_mass = 0.0;
    for (std::size_t b = 0; b < l; ++b) row_mass += joint(a, b);
    if (row_mass <= 0.0) continue;
    for (std::size_t c = 0; c < cc.size(); ++c) {
      const double within = cluster_mass[cc[c]] > 0.0 ? col_marginal[c] / cluster_mass[cc[c]] : 0.0;
      q(a, c) = within * joint(a, cc[c]) / row_mass;
    }
  }
  return q;
}

inline void min_max_normalize(Matrix& m) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : m.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double& v : m.data()) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

// One Jacobi half-sweep over the rows of `p` (pass the transpose for
// columns). Returns the new assignment and the blended loss sum_x p(x) cost.
struct SweepResult {
  std::vector<std::size_t> labels;
  double loss = 0.0;
};

inline SweepResult sweep(const Matrix& p, const Vector& row_marginal, const Vector& col_marginal,
                         const std::vector<std::size_t>& own, const std::vector<std::size_t>& other,
                         std::size_t k, std::size_t l, double weight, const Matrix* external,
                         int threads) {
  const std::size_t n = p.rows();
  const Matrix joint = compress(p, own, other, k, l);
  const Matrix q = row_prototypes(joint, col_marginal, other);

  Matrix js(n, k);
  parallel_for(n, threads, [&](std::size_t x) {
    Vector cond(p.cols());
    for (std::size_t c = 0; c < p.cols(); ++c) cond[c] = p(x, c) / row_marginal[x];
    for (std::size_t a = 0; a < k; ++a) js(x, a) = distances::detail::js_raw(cond, q.row(a));
  });

  Matrix cost = js;
  if (weight > 0.0 && external) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t x = 0; x < n; ++x) members[own[x]].push_back(x);
    Matrix ext(n, k);
    parallel_for(n, threads, [&](std::size_t x) {
      for (std::size_t a = 0; a < k; ++a) {
        double s = 0.0;
        for (std::size_t m : members[a]) s += (*external)(x, m);
        ext(x, a) = members[a].empty() ? 0.0 : s / static_cast<double>(members[a].size());
      }
    });
    min_max_normalize(cost);
    min_max_normalize(ext);
    for (std::size_t i = 0; i < cost.data().size(); ++i) cost.data()[i] += weight * ext.data()[i];
  }

  SweepResult result{std::vector<std::size_t>(n), 0.0};
  for (std::size_t x = 0; x < n; ++x) {
    const auto row = cost.row(x);
    result.labels[x] = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
    result.loss += row_marginal[x] * row[result.labels[x]];
  }

  // Empty clusters take the member farthest (largest JS) from its own
  // cluster, drawn from clusters that keep at least one member.
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t v : result.labels) ++sizes[v];
    if (sizes[a] > 0) continue;
    std::size_t pick = n;
    double far = -1.0;
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t b = result.labels[x];
      if (sizes[b] < 2) continue;
      if (js(x, b) > far) {
        far = js(x, b);
        pick = x;
      }
    }
    if (pick < n) result.labels[pick] = a;
  }
  return result;
}

}  // namespace detail

inline Coclustering cocluster(const Matrix& counts, const CoclusterOptions& options) {
  require(counts.rows() > 0 && counts.cols() > 0, "cocluster: empty matrix");
  const std::size_t k = options.row_clusters, l = options.col_clusters;
  require(options.weight >= 0.0, "cocluster: blend weight must be non-negative");
  require(options.max_iter >= 1, "cocluster: max_iter must be positive");
  require((options.weight > 0.0) == options.external.has_value(),
          "cocluster: external distance is required exactly when weight > 0");
  if (options.external)
    require(options.external->rows() == counts.rows() && options.external->cols() == counts.rows(),
            "cocluster: external distance must be rows x rows");

  double total = 0.0;
  for (double v : counts.data()) {
    require(v >= 0.0 && std::isfinite(v), "cocluster: counts must be finite and non-negative");
    total += v;
  }
  if (total <= 0.0) throw DataError("cocluster: matrix has zero total mass");

  Coclustering out;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < counts.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < counts.rows(); ++r) s += counts(r, c);
    (s > 0.0 ? kept : out.dropped_columns).push_back(c);
  }
  for (std::size_t r = 0; r < counts.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < counts.cols(); ++c) s += counts(r, c);
    if (s <= 0.0) throw DataError("cocluster: row " + std::to_string(r) + " has zero mass");
  }
  require(k >= 1 && k <= counts.rows(), "cocluster: row cluster count out of range");
  require(l >= 1 && l <= kept.size(), "cocluster: column cluster count out of range");

  Matrix p(counts.rows(), kept.size());
  for (std::size_t r = 0; r < counts.rows(); ++r)
    for (std::size_t c = 0; c < kept.size(); ++c) p(r, c) = counts(r, kept[c]) / total;
  const Matrix pt = p.transposed();
  Vector pr(p.rows(), 0.0), pc(p.cols(), 0.0);
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c) {
      pr[r] += p(r, c);
      pc[c] += p(r, c);
    }

  Rng rng(options.seed);
  auto balanced = [&](std::size_t n, std::size_t clusters) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % clusters;
    rng.shuffle(labels);
    return labels;
  };
  std::vector<std::size_t> rc = balanced(p.rows(), k);
  std::vector<std::size_t> cc = balanced(p.cols(), l);

  const Matrix* external = options.external ? &*options.external : nullptr;
  const bool guarded = options.weight == 0.0;
  auto mi_of = [&](const std::vector<std::size_t>& r, const std::vector<std::size_t>& c) {
    return mutual_information(detail::compress(p, r, c, k, l));
  };
  double mi = mi_of(rc, cc);
  out.mi_trace.push_back(mi);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    bool changed = false;
    auto row_step = detail::sweep(p, pr, pc, rc, cc, k, l, options.weight, external, options.threads);
    const double row_mi = mi_of(row_step.labels, cc);
    if (row_step.labels != rc && (!guarded || row_mi >= mi)) {
      rc = std::move(row_step.labels);
      mi = row_mi;
      changed = true;
    }
    out.loss_trace.push_back(row_step.loss);

    auto col_step = detail::sweep(pt, pc, pr, cc, rc, l, k, 0.0, nullptr, options.threads);
    const double col_mi = mi_of(rc, col_step.labels);
    if (col_step.labels != cc && (!guarded || col_mi >= mi)) {
      cc = std::move(col_step.labels);
      mi = col_mi;
      changed = true;
    }
    out.mi_trace.push_back(mi);
    out.iterations = iter + 1;
    if (!changed) {
      out.converged = true;
      break;
    }
  }

  // Canonical ids, with the compressed joint permuted to match.
  const auto rows = canonical_labels(rc);
  const auto cols = canonical_labels(cc);
  out.rows = rows;
  out.columns.assign(counts.cols(), 0);
  for (std::size_t c = 0; c < kept.size(); ++c) out.columns[kept[c]] = cols[c];
  out.compressed = detail::compress(p, rows, cols, k, l);
  out.row_clusters = k;
  out.col_clusters = l;
  out.weight = options.weight;
  return out;
}

// Runs `restarts` seeds (seed, seed + 1, ...) and keeps the highest final
// mutual information; the earliest restart wins ties.
inline Coclustering cocluster_best(const Matrix& counts, CoclusterOptions options, int restarts) {
  require(restarts >= 1, "cocluster_best: need at least one restart");
  const std::uint64_t base = options.seed;
  std::optional<Coclustering> best;
  for (int r = 0; r < restarts; ++r) {
    options.seed = base + static_cast<std::uint64_t>(r);
    Coclustering c = cocluster(counts, options);
    if (!best || c.final_mi() > best->final_mi()) best = std::move(c);
  }
  return *best;
}

// Model distribution over the original columns for each row cluster;
// dropped columns carry zero mass.
inline Matrix cluster_prototypes(const Matrix& counts, const Coclustering& clustering) {
  require(clustering.rows.size() == counts.rows() && clustering.columns.size() == counts.cols(),
          "cluster_prototypes: clustering does not match the matrix");
  std::vector<char> dropped(counts.cols(), 0);
  for (std::size_t c : clustering.dropped_columns) dropped[c] = 1;
  double total = 0.0;
  for (double v : counts.data()) total += v;
  require(total > 0.0, "cluster_prototypes: zero total mass");
  Vector pc(counts.cols(), 0.0);
  for (std::size_t r = 0; r < counts.rows(); ++r)
    for (std::size_t c = 0; c < counts.cols(); ++c) pc[c] += counts(r, c) / total;
  std::vector<std::size_t> col_ids(clustering.columns);
  for (std::size_t c = 0; c < counts.cols(); ++c)
    if (dropped[c]) pc[c] = 0.0;
  Matrix joint(clustering.row_clusters, clustering.col_clusters);
  for (std::size_t r = 0; r < counts.rows(); ++r)
    for (std::size_t c = 0; c < counts.cols(); ++c)
      if (!dropped[c]) joint(clustering.rows[r], col_ids[c]) += counts(r, c) / total;
  return detail::row_prototypes(joint, pc, col_ids);
}

// JS divergence from a row's column distribution to each row-cluster model.
inline Vector cluster_distance_features(const Matrix& prototypes, std::span<const double> row) {
  require(row.size() == prototypes.cols(), "cluster_distance_features: column arity mismatch");
  double mass = 0.0;
  for (double v : row) {
    require(v >= 0.0 && std::isfinite(v), "cluster_distance_features: invalid entry");
    mass += v;
  }
  if (mass <= 0.0) throw DataError("cluster_distance_features: zero-mass row");
  Vector cond(row.begin(), row.end());
  for (double& v : cond) v /= mass;
  Vector out(prototypes.rows());
  for (std::size_t a = 0; a < prototypes.rows(); ++a)
    out[a] = distances::detail::js_raw(cond, prototypes.row(a));
  return out;
}

inline Vector cluster_distance_features(const Matrix& counts, const Coclustering& clustering,
                                        std::span<const double> row) {
  return cluster_distance_features(cluster_prototypes(counts, clustering), row);
}

}  // namespace simkernel::bicluster
