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

// Per-modality distance functions: vector norms, divergences, Fisher
// distances on distribution families, dynamic time warping, asymmetric set
// matching and term weighting for sparse text vectors.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simkernel/common.hpp"

namespace simkernel::distances {

enum class Norm { kL1, kL2 };

inline double minkowski(std::span<const double> a, std::span<const double> b, Norm p) {
  require(a.size() == b.size(), "minkowski: dimension mismatch");
  double s = 0.0;
  if (p == Norm::kL1) {
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double l1(std::span<const double> a, std::span<const double> b) {
  return minkowski(a, b, Norm::kL1);
}
inline double l2(std::span<const double> a, std::span<const double> b) {
  return minkowski(a, b, Norm::kL2);
}

// A finite probability distribution. Construction validates non-negativity
// and unit mass within 1e-9.
class Distribution {
 public:
  static constexpr double kMassTolerance = 1e-9;

  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    require(!probs_.empty(), "Distribution: empty support");
    double total = 0.0;
    for (double p : probs_) {
      require(p >= 0.0 && std::isfinite(p), "Distribution: negative or non-finite entry");
      total += p;
    }
    require(std::abs(total - 1.0) <= kMassTolerance, "Distribution: entries must sum to 1");
  }

  // Normalizes non-negative counts to unit mass.
  static Distribution from_counts(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
      require(c >= 0.0 && std::isfinite(c), "Distribution::from_counts: invalid count");
      total += c;
    }
    require(total > 0.0, "Distribution::from_counts: zero mass");
    std::vector<double> probs(counts.begin(), counts.end());
    for (double& p : probs) p /= total;
    return Distribution(std::move(probs));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

namespace detail {

// KL on raw probability spans; returns +inf on an absolute-continuity violation.
inline double kl_raw(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, s);
}

inline double js_raw(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) s += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) s += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::clamp(s, 0.0, std::numbers::ln2);
}

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace detail

// Kullback-Leibler divergence, natural log.
inline double kl_divergence(const Distribution& p, const Distribution& q) {
  require(p.size() == q.size(), "kl_divergence: support size mismatch");
  const double v = detail::kl_raw(p.probs(), q.probs());
  require(std::isfinite(v), "kl_divergence: q_i = 0 where p_i > 0");
  return v;
}

// Jensen-Shannon divergence, natural log; bounded by ln 2.
inline double js_divergence(const Distribution& p, const Distribution& q) {
  require(p.size() == q.size(), "js_divergence: support size mismatch");
  return detail::js_raw(p.probs(), q.probs());
}

// Great-circle distance on the sphere embedding of the simplex:
// 2 arccos(sum_i sqrt(p_i q_i)).
inline double fisher_distance_discrete(const Distribution& p, const Distribution& q) {
  require(p.size() == q.size(), "fisher_distance_discrete: support size mismatch");
  double affinity = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) affinity += std::sqrt(p[i] * q[i]);
  return 2.0 * std::acos(detail::clamp_unit(affinity));
}

struct Gaussian1d {
  double mean = 0.0;
  double stdev = 1.0;
};

// Fisher-Rao distance between univariate normals: sqrt(2) times the
// Poincare half-plane distance between (mu/sqrt(2), sigma) points.
inline double fisher_distance_gaussian1d(const Gaussian1d& p, const Gaussian1d& q) {
  require(p.stdev > 0.0 && q.stdev > 0.0, "fisher_distance_gaussian1d: stdev must be positive");
  const double dx = (p.mean - q.mean) / std::numbers::sqrt2;
  const double dy = p.stdev - q.stdev;
  const double arg = 1.0 + (dx * dx + dy * dy) / (2.0 * p.stdev * q.stdev);
  return std::numbers::sqrt2 * std::acosh(std::max(1.0, arg));
}

// Dynamic time warping over squared point costs, full band. Returns the
// square root of the accumulated cost, so a single-point pair gives |x - y|.
inline double dtw(std::span<const double> x, std::span<const double> y) {
  require(!x.empty() && !y.empty(), "dtw: empty series");
  const std::size_t m = y.size();
  std::vector<double> prev(m), curr(m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x[i] - y[j];
      const double cost = d * d;
      double best;
      if (i == 0 && j == 0) best = 0.0;
      else if (i == 0) best = curr[j - 1];
      else if (j == 0) best = prev[j];
      else best = std::min({prev[j - 1], prev[j], curr[j - 1]});
      curr[j] = best + cost;
    }
    std::swap(prev, curr);
  }
  return std::sqrt(prev[m - 1]);
}

// Mean over q in Q of the closest match in X under `base`. Optional
// per-dimension weights scale coordinates before the base distance.
template <class BaseDistance>
double asym_set_distance(const std::vector<Vector>& query, const std::vector<Vector>& target,
                         BaseDistance&& base, std::span<const double> weights = {}) {
  require(!query.empty() && !target.empty(), "asym_set_distance: empty set");
  const std::size_t dim = query.front().size();
  auto check = [&](const Vector& v) {
    require(v.size() == dim, "asym_set_distance: non-uniform dimension");
  };
  for (const auto& v : query) check(v);
  for (const auto& v : target) check(v);
  if (!weights.empty()) {
    require(weights.size() == dim, "asym_set_distance: weight dimension mismatch");
    for (double w : weights) require(w >= 0.0, "asym_set_distance: negative weight");
  }

  auto scaled = [&](const Vector& v) {
    if (weights.empty()) return v;
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = weights[i] * v[i];
    return out;
  };
  std::vector<Vector> targets;
  targets.reserve(target.size());
  for (const auto& x : target) targets.push_back(scaled(x));

  double total = 0.0;
  for (const auto& q_raw : query) {
    const Vector q = scaled(q_raw);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : targets) best = std::min(best, static_cast<double>(base(q, x)));
    total += best;
  }
  return total / static_cast<double>(query.size());
}

// Sparse bag-of-words vector: sorted unique term ids with positive values,
// plus the document length in terms.
struct SparseTermVector {
  std::vector<std::pair<int, double>> terms;
  double length = 0.0;

  void validate() const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      require(terms[i].second > 0.0, "SparseTermVector: non-positive frequency");
      if (i > 0) require(terms[i - 1].first < terms[i].first, "SparseTermVector: unsorted ids");
    }
  }
};

struct CorpusStats {
  double document_count = 0.0;           // H
  std::map<int, double> document_freq;   // h per term
  double mean_length = 0.0;              // mean document length

  static CorpusStats from_documents(const std::vector<SparseTermVector>& docs) {
    require(!docs.empty(), "CorpusStats: empty corpus");
    CorpusStats stats;
    stats.document_count = static_cast<double>(docs.size());
    double total_length = 0.0;
    for (const auto& d : docs) {
      for (const auto& [term, f] : d.terms) stats.document_freq[term] += 1.0;
      total_length += d.length;
    }
    stats.mean_length = total_length / stats.document_count;
    require(stats.mean_length > 0.0, "CorpusStats: zero mean length");
    return stats;
  }
};

enum class TermScheme { kTf, kTfIdf, kBm25 };

struct Bm25Params {
  double k = 1.2;
  double b = 0.75;
};

inline double inverse_document_frequency(double corpus_size, double doc_freq) {
  return std::log((corpus_size - doc_freq + 0.5) / (doc_freq + 0.5));
}

// idf can go negative for terms in more than half of the corpus; it is
// passed through unchanged.
inline SparseTermVector weight_terms(const SparseTermVector& doc, const CorpusStats& stats,
                                     TermScheme scheme, Bm25Params params = {}) {
  doc.validate();
  require(params.k > 0.0, "weight_terms: k must be positive");
  require(params.b >= 0.0 && params.b <= 1.0, "weight_terms: b must lie in [0, 1]");
  require(stats.mean_length > 0.0, "weight_terms: corpus mean length must be positive");
  SparseTermVector out;
  out.length = doc.length;
  out.terms.reserve(doc.terms.size());
  for (const auto& [term, f] : doc.terms) {
    if (scheme == TermScheme::kTf) {
      out.terms.emplace_back(term, f);
      continue;
    }
    const auto it = stats.document_freq.find(term);
    require(it != stats.document_freq.end(), "weight_terms: term missing from corpus stats");
    const double idf = inverse_document_frequency(stats.document_count, it->second);
    if (scheme == TermScheme::kTfIdf) {
      out.terms.emplace_back(term, idf * f);
    } else {
      const double norm = 1.0 - params.b + params.b * doc.length / stats.mean_length;
      out.terms.emplace_back(term, idf * f * (params.k + 1.0) / (f + params.k * norm));
    }
  }
  return out;
}

// Euclidean distance between sparse vectors (absent terms are zero).
inline double sparse_l2(const SparseTermVector& a, const SparseTermVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.terms.size() || j < b.terms.size()) {
    double d;
    if (j == b.terms.size() || (i < a.terms.size() && a.terms[i].first < b.terms[j].first)) {
      d = a.terms[i++].second;
    } else if (i == a.terms.size() || b.terms[j].first < a.terms[i].first) {
      d = b.terms[j++].second;
    } else {
      d = a.terms[i++].second - b.terms[j++].second;
    }
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace simkernel::distances
