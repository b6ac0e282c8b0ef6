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

// Fisher vectors over Gaussian mixtures.
//
// The Fisher score of a sample set is the summed log-likelihood gradient,
// laid out [weights | means row-major | stdevs row-major] (2Nd + N values).
// Fisher vectors whiten it with a diagonal Fisher-information approximation:
//
//   f_w_i    ~ T (1/w_i + 1/w_1)
//   f_mu_id  ~ T w_i / sigma_id^2
//   f_sig_id ~ 2 T w_i / sigma_id^2
//
// and optionally apply signed power and L2 normalization in that order.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "simkernel/common.hpp"
#include "simkernel/gmm.hpp"

namespace simkernel::fisher {

using gmm::GaussianMixture;

// Stable identifier of a trained model, used to refuse kernels between
// vectors built from different mixtures.
inline std::string model_id(const GaussianMixture& model) {
  Digest h;
  h.add(model.weights()).add(model.means().data()).add(model.stdevs().data());
  return h.hex();
}

struct FisherVector {
  Vector values;
  std::string model;
};

struct Normalization {
  std::optional<double> power;  // signed power exponent, typically 0.5
  bool l2 = false;

  static Normalization none() { return {}; }
  static Normalization both(double alpha = 0.5) { return {alpha, true}; }
};

inline Vector fisher_score(const GaussianMixture& model, const Matrix& samples,
                           int threads = 1) {
  require(samples.rows() > 0, "fisher_score: empty sample set");
  return gmm::loglik_gradient(model, samples, threads).flatten();
}

// Diagonal Fisher-information terms in the score layout, for T samples.
inline Vector diagonal_information(const GaussianMixture& model, double sample_count) {
  const std::size_t n = model.components(), d = model.dim();
  Vector f(n + 2 * n * d);
  const auto& w = model.weights();
  for (std::size_t i = 0; i < n; ++i) f[i] = sample_count * (1.0 / w[i] + 1.0 / w[0]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double s = model.stdevs()(i, k);
      f[n + i * d + k] = sample_count * w[i] / (s * s);
      f[n + n * d + i * d + k] = 2.0 * sample_count * w[i] / (s * s);
    }
  return f;
}

inline void power_normalize(Vector& v, double alpha) {
  require(alpha > 0.0, "power_normalize: exponent must be positive");
  for (double& x : v) x = std::copysign(std::pow(std::abs(x), alpha), x);
}

// A zero vector stays zero.
inline void l2_normalize(Vector& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

inline FisherVector fisher_vector(const GaussianMixture& model, const Matrix& samples,
                                  const Normalization& normalization = Normalization::none(),
                                  int threads = 1) {
  Vector v = fisher_score(model, samples, threads);
  const Vector f = diagonal_information(model, static_cast<double>(samples.rows()));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] /= std::sqrt(f[i]);
  if (normalization.power) power_normalize(v, *normalization.power);
  if (normalization.l2) l2_normalize(v);
  return {std::move(v), model_id(model)};
}

inline double fisher_kernel(const FisherVector& a, const FisherVector& b) {
  require(a.model == b.model, "fisher_kernel: vectors come from different models");
  require(a.values.size() == b.values.size(), "fisher_kernel: length mismatch");
  return dot(a.values, b.values);
}

// Samples on a lattice plus its maximal cliques, each an ordered index tuple
// of a common size (pairs by default).
struct LatticeSampleSet {
  Matrix samples;
  std::vector<std::vector<std::size_t>> cliques;

  std::size_t clique_size() const { return cliques.empty() ? 0 : cliques.front().size(); }

  void validate() const {
    require(!cliques.empty(), "LatticeSampleSet: no cliques");
    const std::size_t c = clique_size();
    require(c >= 1, "LatticeSampleSet: empty clique");
    std::set<std::vector<std::size_t>> seen;
    for (const auto& clique : cliques) {
      require(clique.size() == c, "LatticeSampleSet: cliques differ in size");
      for (std::size_t idx : clique)
        require(idx < samples.rows(), "LatticeSampleSet: clique index out of range");
      auto sorted = clique;
      std::sort(sorted.begin(), sorted.end());
      require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
              "LatticeSampleSet: repeated vertex in clique");
      require(seen.insert(sorted).second, "LatticeSampleSet: clique listed twice");
    }
  }
};

// Hard assignment to the most probable component; ties go to the lowest index.
inline std::vector<std::size_t> hard_assignments(const GaussianMixture& model,
                                                 const Matrix& samples, int threads = 1) {
  const Matrix gamma = gmm::memberships(model, samples, threads);
  std::vector<std::size_t> labels(samples.rows());
  for (std::size_t t = 0; t < samples.rows(); ++t) {
    const auto row = gamma.row(t);
    labels[t] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

// Fraction of cliques whose members are hard-assigned to each component
// tuple (k_1, ..., k_c); N^c values indexed k_1 N^(c-1) + ... + k_c.
inline Vector spatial_clique_scores(const GaussianMixture& model, const LatticeSampleSet& lattice,
                                    int threads = 1) {
  lattice.validate();
  require(lattice.samples.cols() == model.dim(), "spatial_clique_scores: dimension mismatch");
  const auto labels = hard_assignments(model, lattice.samples, threads);
  const std::size_t n = model.components(), c = lattice.clique_size();
  std::size_t size = 1;
  for (std::size_t k = 0; k < c; ++k) size *= n;
  Vector counts(size, 0.0);
  for (const auto& clique : lattice.cliques) {
    std::size_t index = 0;
    for (std::size_t v : clique) index = index * n + labels[v];
    counts[index] += 1.0;
  }
  for (double& x : counts) x /= static_cast<double>(lattice.cliques.size());
  return counts;
}

// Concatenates the clique block to a GMM Fisher vector, unweighted.
inline FisherVector with_spatial_block(FisherVector fv, const Vector& clique_scores) {
  fv.values.insert(fv.values.end(), clique_scores.begin(), clique_scores.end());
  return fv;
}

// Gram matrix of Fisher kernels; rows of `a` against rows of `b`.
inline Matrix fisher_gram(const std::vector<FisherVector>& a, const std::vector<FisherVector>& b,
                          int threads = 1) {
  Matrix k(a.size(), b.size());
  parallel_for(a.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.size(); ++j) k(i, j) = fisher_kernel(a[i], b[j]);
  });
  return k;
}

}  // namespace simkernel::fisher
