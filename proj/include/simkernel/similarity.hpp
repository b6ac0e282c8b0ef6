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

// Similarity kernel.
//
// An instance x is modelled by a Markov random field whose energy is a
// weighted sum of per-modality distances to a reference sample set S (the
// pairwise graph), optionally through class representatives R (the class
// graph):
//
//   pairwise:  U(x) = sum_i sum_k a_ik dist_k(x, s_i)
//   class:     U(x) = sum_r sum_i a_ir (dist(x, s_i) + dist(x, r) + dist(s_i, r))
//
// with Gibbs density exp(-U) / Z. The Fisher score with respect to a_ik is
// E[dist_k(x, s_i)] - dist_k(x, s_i), and the diagonal Fisher information is
// its variance, so the whitened feature for column (i, k) is
//
//   (mean_col - dist_col(x)) / stdev_col
//
// with moments estimated on training instances only. The features do not
// depend on a, and any positive affine change of a modality's distance
// leaves them unchanged.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "simkernel/common.hpp"

namespace simkernel::similarity {

template <class Instance>
using DistanceFn = std::function<double(const Instance&, const Instance&)>;

template <class Instance>
struct DistanceSpec {
  std::string modality;
  DistanceFn<Instance> distance;
  double scale = 1.0;

  double operator()(const Instance& a, const Instance& b) const { return scale * distance(a, b); }
};

template <class Instance>
struct SampleSet {
  std::vector<Instance> samples;          // S
  std::vector<Instance> representatives;  // R, class graph only
  std::vector<int> representative_labels;
  // Optional dataset indices, used to check that S and R are disjoint.
  std::vector<std::size_t> sample_ids;
  std::vector<std::size_t> representative_ids;

  void validate(bool need_representatives) const {
    require(!samples.empty(), "SampleSet: empty sample set");
    if (!need_representatives) return;
    require(!representatives.empty(), "SampleSet: class graph needs representatives");
    require(representative_labels.size() == representatives.size(),
            "SampleSet: one label per representative");
    if (!sample_ids.empty() && !representative_ids.empty()) {
      std::set<std::size_t> s(sample_ids.begin(), sample_ids.end());
      for (std::size_t r : representative_ids)
        require(!s.count(r), "SampleSet: samples and representatives overlap");
    }
  }
};

enum class GraphType { kPairwise, kClass };

inline const char* graph_name(GraphType g) { return g == GraphType::kPairwise ? "pairwise" : "class"; }

// ---------------------------------------------------------------------------
// Energies and the Gibbs density.

template <class Instance>
double energy_pairwise(const Instance& x, const std::vector<Instance>& samples,
                       const Matrix& alpha, const std::vector<DistanceSpec<Instance>>& specs) {
  require(!specs.empty(), "energy_pairwise: no modalities");
  require(alpha.rows() == samples.size() && alpha.cols() == specs.size(),
          "energy_pairwise: alpha must be |S| x K");
  double u = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (alpha(i, k) == 0.0) continue;
      u += alpha(i, k) * specs[k](x, samples[i]);
    }
  return u;
}

template <class Instance>
double energy_class(const Instance& x, const std::vector<Instance>& samples,
                    const std::vector<Instance>& representatives, const Matrix& alpha,
                    const DistanceFn<Instance>& dist) {
  require(alpha.rows() == samples.size() && alpha.cols() == representatives.size(),
          "energy_class: alpha must be |S| x |R|");
  double u = 0.0;
  for (std::size_t r = 0; r < representatives.size(); ++r)
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (alpha(i, r) == 0.0) continue;
      u += alpha(i, r) * (dist(x, samples[i]) + dist(x, representatives[r]) +
                          dist(samples[i], representatives[r]));
    }
  return u;
}

template <class Agent>
struct CliqueMember {
  std::size_t type;  // index into the observed agent tuple
  Agent value;
};

template <class Agent>
using AgentClique = std::vector<CliqueMember<Agent>>;

// Sum over cliques c of a_c (sum_j dist(x_type(j), c_j) + sum_{j<l} dist(c_j, c_l)).
template <class Agent>
double energy_multiagent(const std::vector<Agent>& observed,
                         const std::vector<AgentClique<Agent>>& cliques,
                         std::span<const double> alpha, const DistanceFn<Agent>& dist) {
  require(!cliques.empty(), "energy_multiagent: no cliques configured");
  require(alpha.size() == cliques.size(), "energy_multiagent: one alpha per clique");
  double u = 0.0;
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    const auto& clique = cliques[c];
    require(!clique.empty(), "energy_multiagent: empty clique");
    for (const auto& m : clique)
      require(m.type < observed.size(), "energy_multiagent: agent type out of range");
    if (alpha[c] == 0.0) continue;
    double inner = 0.0;
    for (const auto& m : clique) inner += dist(observed[m.type], m.value);
    for (std::size_t j = 0; j < clique.size(); ++j)
      for (std::size_t l = j + 1; l < clique.size(); ++l)
        inner += dist(clique[j].value, clique[l].value);
    u += alpha[c] * inner;
  }
  return u;
}

// ln p = -U - ln Z; Z is constant for fixed parameters.
inline double gibbs_logdensity(double energy, double log_partition = 0.0) {
  require(std::isfinite(energy) && std::isfinite(log_partition),
          "gibbs_logdensity: non-finite input");
  return -energy - log_partition;
}

// ---------------------------------------------------------------------------
// Standardization.

struct StandardizationStats {
  std::vector<std::string> column_ids;
  Vector means;
  Vector stdevs;
  std::vector<char> degenerate;  // constant columns; their features are 0

  std::size_t columns() const { return means.size(); }

  std::string digest() const {
    Digest h;
    for (const auto& id : column_ids) h.add(id).add(std::string_view("\0", 1));
    h.add(means).add(stdevs);
    return h.hex();
  }

  std::size_t degenerate_count() const {
    return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  }
};

// Population mean and deviation per column. Deviations below
// 1e-9 (1 + |mean|) are floored there and the column is flagged.
inline StandardizationStats fit_standardization(const Matrix& train_distances,
                                                std::vector<std::string> column_ids = {}) {
  const std::size_t n = train_distances.rows(), cols = train_distances.cols();
  require(n >= 2, "fit_standardization: need at least two training rows");
  if (column_ids.empty()) {
    for (std::size_t c = 0; c < cols; ++c) column_ids.push_back("c" + std::to_string(c));
  }
  require(column_ids.size() == cols, "fit_standardization: one id per column");
  StandardizationStats stats{std::move(column_ids), Vector(cols, 0.0), Vector(cols, 0.0),
                             std::vector<char>(cols, 0)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < cols; ++c) stats.means[c] += train_distances(r, c);
  for (double& m : stats.means) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = train_distances(r, c) - stats.means[c];
      stats.stdevs[c] += e * e;
    }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < n; ++r)
      require(std::isfinite(train_distances(r, c)), "fit_standardization: non-finite distance");
    const double sd = std::sqrt(stats.stdevs[c] / static_cast<double>(n));
    const double floor = 1e-9 * (1.0 + std::abs(stats.means[c]));
    stats.stdevs[c] = std::max(sd, floor);
    stats.degenerate[c] = sd <= floor ? 1 : 0;
  }
  return stats;
}

struct SimilarityFeatures {
  Matrix values;
  std::vector<std::string> column_ids;
  GraphType graph = GraphType::kPairwise;
};

inline Matrix standardize(const Matrix& distances, const StandardizationStats& stats) {
  require(distances.cols() == stats.columns(), "standardize: column count differs from stats");
  Matrix out(distances.rows(), distances.cols());
  for (std::size_t r = 0; r < distances.rows(); ++r)
    for (std::size_t c = 0; c < distances.cols(); ++c)
      out(r, c) = stats.degenerate[c] ? 0.0 : (stats.means[c] - distances(r, c)) / stats.stdevs[c];
  return out;
}

// ---------------------------------------------------------------------------
// Distance columns.
//
// Pairwise layout: column i*K + k holds dist_k(x, s_i).
// Class layout: column (i*|R| + r)*K + k holds dist_k(x, s_i) + dist_k(x, r_r).
// The dist_k(s_i, r_r) term of the class energy is constant per column, so it
// would cancel in standardization and is omitted.

template <class Instance>
std::vector<std::string> column_ids(const SampleSet<Instance>& samples,
                                    const std::vector<DistanceSpec<Instance>>& specs,
                                    GraphType graph) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < samples.samples.size(); ++i) {
    if (graph == GraphType::kPairwise) {
      for (const auto& spec : specs) ids.push_back("s" + std::to_string(i) + ":" + spec.modality);
    } else {
      for (std::size_t r = 0; r < samples.representatives.size(); ++r)
        for (const auto& spec : specs)
          ids.push_back("s" + std::to_string(i) + ":r" + std::to_string(r) + ":" + spec.modality);
    }
  }
  return ids;
}

template <class Instance>
std::size_t column_count(const SampleSet<Instance>& samples, std::size_t modalities,
                         GraphType graph) {
  const std::size_t per_sample =
      graph == GraphType::kPairwise ? modalities : modalities * samples.representatives.size();
  return samples.samples.size() * per_sample;
}

template <class Instance>
Matrix distance_columns(const std::vector<Instance>& instances, const SampleSet<Instance>& samples,
                        const std::vector<DistanceSpec<Instance>>& specs, GraphType graph,
                        int threads = 1) {
  require(!specs.empty(), "distance_columns: no modalities");
  samples.validate(graph == GraphType::kClass);
  const std::size_t k_count = specs.size();
  const std::size_t s_count = samples.samples.size();
  const std::size_t r_count = samples.representatives.size();
  Matrix out(instances.size(), column_count(samples, k_count, graph));
  parallel_for(instances.size(), threads, [&](std::size_t row) {
    const Instance& x = instances[row];
    Vector to_sample(s_count * k_count);
    for (std::size_t i = 0; i < s_count; ++i)
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = specs[k](x, samples.samples[i]);
        if (!std::isfinite(d) || d < 0.0)
          throw NumericError("distance for modality '" + specs[k].modality +
                             "' is negative or non-finite");
        to_sample[i * k_count + k] = d;
      }
    if (graph == GraphType::kPairwise) {
      std::copy(to_sample.begin(), to_sample.end(), out.row(row).begin());
      return;
    }
    Vector to_rep(r_count * k_count);
    for (std::size_t r = 0; r < r_count; ++r)
      for (std::size_t k = 0; k < k_count; ++k)
        to_rep[r * k_count + k] = specs[k](x, samples.representatives[r]);
    for (std::size_t i = 0; i < s_count; ++i)
      for (std::size_t r = 0; r < r_count; ++r)
        for (std::size_t k = 0; k < k_count; ++k)
          out(row, (i * r_count + r) * k_count + k) =
              to_sample[i * k_count + k] + to_rep[r * k_count + k];
  });
  return out;
}

// Fits standardization on the training instances.
template <class Instance>
StandardizationStats fit_similarity_stats(const std::vector<Instance>& train,
                                          const SampleSet<Instance>& samples,
                                          const std::vector<DistanceSpec<Instance>>& specs,
                                          GraphType graph, int threads = 1) {
  return fit_standardization(distance_columns(train, samples, specs, graph, threads),
                             column_ids(samples, specs, graph));
}

template <class Instance>
SimilarityFeatures similarity_features(const std::vector<Instance>& instances,
                                       const SampleSet<Instance>& samples,
                                       const std::vector<DistanceSpec<Instance>>& specs,
                                       const StandardizationStats& stats, GraphType graph,
                                       int threads = 1) {
  auto ids = column_ids(samples, specs, graph);
  require(ids == stats.column_ids, "similarity_features: stats fitted on a different column set");
  const Matrix distances = distance_columns(instances, samples, specs, graph, threads);
  return {standardize(distances, stats), std::move(ids), graph};
}

// Linear Gram matrix a * b^T (a * a^T when b is absent).
inline Matrix similarity_kernel_matrix(const Matrix& a, const Matrix* b = nullptr,
                                       int threads = 1) {
  const Matrix& other = b ? *b : a;
  require(a.cols() == other.cols(), "similarity_kernel_matrix: column sets differ");
  Matrix k(a.rows(), other.rows());
  parallel_for(a.rows(), threads, [&](std::size_t i) {
    const std::size_t start = b ? 0 : i;
    for (std::size_t j = start; j < other.rows(); ++j) k(i, j) = dot(a.row(i), other.row(j));
  });
  if (!b) {
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) k(i, j) = k(j, i);
  }
  return k;
}

inline Matrix similarity_kernel_matrix(const SimilarityFeatures& a,
                                       const SimilarityFeatures* b = nullptr, int threads = 1) {
  if (b) require(a.column_ids == b->column_ids, "similarity_kernel_matrix: column sets differ");
  return similarity_kernel_matrix(a.values, b ? &b->values : nullptr, threads);
}

// ---------------------------------------------------------------------------
// Uniform representation: coordinate j = sum_r beta_r dist_r(x, s_j).

inline void check_modality_weights(std::span<const double> beta, std::size_t modalities) {
  require(beta.size() == modalities, "uniform_representation: one weight per modality");
  double total = 0.0;
  for (double b : beta) {
    require(b >= 0.0, "uniform_representation: weights must be non-negative");
    total += b;
  }
  require(std::abs(total - 1.0) <= 1e-9, "uniform_representation: weights must sum to 1");
}

template <class Instance>
Vector uniform_representation(const Instance& x, const std::vector<Instance>& samples,
                              const std::vector<DistanceSpec<Instance>>& specs,
                              std::span<const double> beta) {
  check_modality_weights(beta, specs.size());
  Vector out(samples.size(), 0.0);
  for (std::size_t j = 0; j < samples.size(); ++j)
    for (std::size_t r = 0; r < specs.size(); ++r)
      if (beta[r] != 0.0) out[j] += beta[r] * specs[r](x, samples[j]);
  return out;
}

// Per-coordinate training expectation of exp(-sum_r beta_r dist_r(t, s_j)).
template <class Instance>
Vector fit_uniform_normalizer(const std::vector<Instance>& train,
                              const std::vector<Instance>& samples,
                              const std::vector<DistanceSpec<Instance>>& specs,
                              std::span<const double> beta) {
  require(!train.empty(), "fit_uniform_normalizer: empty training set");
  Vector expectation(samples.size(), 0.0);
  for (const auto& t : train) {
    const Vector u = uniform_representation(t, samples, specs, beta);
    for (std::size_t j = 0; j < u.size(); ++j) expectation[j] += std::exp(-u[j]);
  }
  for (double& e : expectation) {
    e /= static_cast<double>(train.size());
    if (e <= 0.0) throw NumericError("fit_uniform_normalizer: expectation underflowed to zero");
  }
  return expectation;
}

template <class Instance>
Vector normalized_uniform_representation(const Instance& x, const std::vector<Instance>& samples,
                                         const std::vector<DistanceSpec<Instance>>& specs,
                                         std::span<const double> beta,
                                         std::span<const double> normalizer) {
  require(normalizer.size() == samples.size(), "normalized_uniform_representation: size mismatch");
  Vector u = uniform_representation(x, samples, specs, beta);
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::exp(-u[j]) / normalizer[j];
  return u;
}

}  // namespace simkernel::similarity
