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

// Diagonal-covariance Gaussian mixtures trained by expectation maximization.
//
// All density work happens in the log domain: a component's joint log term
// m_i(x) = ln w_i + ln g_i(x) is combined with a max-shifted log-sum-exp, so
// memberships stay well defined for samples far from every mean.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "simkernel/common.hpp"

namespace simkernel::gmm {

class GaussianMixture {
 public:
  static constexpr double kWeightTolerance = 1e-9;

  GaussianMixture() = default;

  GaussianMixture(Vector weights, Matrix means, Matrix stdevs)
      : weights_(std::move(weights)), means_(std::move(means)), stdevs_(std::move(stdevs)) {
    require(!weights_.empty(), "GaussianMixture: no components");
    require(means_.rows() == weights_.size() && stdevs_.rows() == weights_.size(),
            "GaussianMixture: component count mismatch");
    require(means_.cols() > 0 && stdevs_.cols() == means_.cols(),
            "GaussianMixture: dimension mismatch");
    double total = 0.0;
    for (double w : weights_) {
      require(w > 0.0 && std::isfinite(w), "GaussianMixture: weights must be positive");
      total += w;
    }
    require(std::abs(total - 1.0) <= kWeightTolerance, "GaussianMixture: weights must sum to 1");
    for (double s : stdevs_.data())
      require(s > 0.0 && std::isfinite(s), "GaussianMixture: stdevs must be positive");
    for (double m : means_.data()) require(std::isfinite(m), "GaussianMixture: non-finite mean");
    precompute();
  }

  std::size_t components() const { return weights_.size(); }
  std::size_t dim() const { return means_.cols(); }
  // N(1 + 2d): weights, means and diagonal deviations.
  std::size_t parameter_count() const { return components() * (1 + 2 * dim()); }

  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& stdevs() const { return stdevs_; }

  // m_i(x) = ln w_i + ln g_i(x).
  double log_joint(std::size_t i, std::span<const double> x) const {
    double q = 0.0;
    const auto mu = means_.row(i);
    const auto sigma = stdevs_.row(i);
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double z = (x[d] - mu[d]) / sigma[d];
      q += z * z;
    }
    return log_norm_[i] - 0.5 * q;
  }

  double log_pdf(std::span<const double> x) const {
    check_dim(x);
    Vector m(components());
    return log_joint_all(x, m);
  }

  // Membership probabilities for one sample; returns ln p(x) as well.
  double memberships(std::span<const double> x, std::span<double> gamma) const {
    check_dim(x);
    require(gamma.size() == components(), "memberships: output size mismatch");
    const double lse = log_joint_all(x, gamma);
    double total = 0.0;
    for (double& g : gamma) {
      g = std::exp(g - lse);
      total += g;
    }
    for (double& g : gamma) g /= total;
    return lse;
  }

 private:
  void check_dim(std::span<const double> x) const {
    require(x.size() == dim(), "GaussianMixture: sample dimension mismatch");
  }

  // Fills m with m_i(x) and returns M + ln sum_i exp(m_i - M).
  double log_joint_all(std::span<const double> x, std::span<double> m) const {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < components(); ++i) {
      m[i] = log_joint(i, x);
      peak = std::max(peak, m[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < components(); ++i) s += std::exp(m[i] - peak);
    return peak + std::log(s);
  }

  void precompute() {
    log_norm_.resize(components());
    const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < components(); ++i) {
      double v = std::log(weights_[i]) - static_cast<double>(dim()) * half_log_two_pi;
      for (double s : stdevs_.row(i)) v -= std::log(s);
      log_norm_[i] = v;
    }
  }

  Vector weights_;
  Matrix means_;
  Matrix stdevs_;
  Vector log_norm_;
};

// T x N membership matrix; each row sums to 1.
inline Matrix memberships(const GaussianMixture& model, const Matrix& samples, int threads = 1) {
  require(samples.rows() > 0, "memberships: no samples");
  Matrix gamma(samples.rows(), model.components());
  parallel_for(samples.rows(), threads,
               [&](std::size_t t) { model.memberships(samples.row(t), gamma.row(t)); });
  return gamma;
}

inline double log_likelihood(const GaussianMixture& model, const Matrix& samples,
                             int threads = 1) {
  Vector per_sample(samples.rows());
  parallel_for(samples.rows(), threads,
               [&](std::size_t t) { per_sample[t] = model.log_pdf(samples.row(t)); });
  double total = 0.0;
  for (double v : per_sample) total += v;
  return total;
}

// Gradient of sum_t ln p(x_t) with respect to the raw (unconstrained)
// weights, the means and the deviations.
struct Gradient {
  Vector weights;
  Matrix means;
  Matrix stdevs;

  // Canonical layout: [weights | means row-major | stdevs row-major].
  Vector flatten() const {
    Vector out;
    out.reserve(weights.size() + means.data().size() + stdevs.data().size());
    out.insert(out.end(), weights.begin(), weights.end());
    out.insert(out.end(), means.data().begin(), means.data().end());
    out.insert(out.end(), stdevs.data().begin(), stdevs.data().end());
    return out;
  }
};

// d/dw_i   = sum_t gamma_i(x_t) / w_i
// d/dmu_id = sum_t gamma_i(x_t) (x_td - mu_id) / sigma_id^2
// d/dsig_id = sum_t gamma_i(x_t) ((x_td - mu_id)^2 / sigma_id^3 - 1 / sigma_id)
inline Gradient loglik_gradient(const GaussianMixture& model, const Matrix& samples,
                                int threads = 1) {
  require(samples.rows() > 0, "loglik_gradient: no samples");
  require(samples.cols() == model.dim(), "loglik_gradient: sample dimension mismatch");
  const Matrix gamma = memberships(model, samples, threads);
  const std::size_t n = model.components(), d = model.dim();
  Gradient g{Vector(n, 0.0), Matrix(n, d), Matrix(n, d)};
  parallel_for(n, threads, [&](std::size_t i) {
    const auto mu = model.means().row(i);
    const auto sigma = model.stdevs().row(i);
    double occupancy = 0.0;
    for (std::size_t t = 0; t < samples.rows(); ++t) {
      const double w = gamma(t, i);
      occupancy += w;
      const auto x = samples.row(t);
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - mu[k];
        const double s = sigma[k];
        g.means(i, k) += w * diff / (s * s);
        g.stdevs(i, k) += w * (diff * diff / (s * s * s) - 1.0 / s);
      }
    }
    g.weights[i] = occupancy / model.weights()[i];
  });
  return g;
}

struct EmOptions {
  std::uint64_t seed = 0;
  int max_iter = 200;
  double tol = 1e-6;           // relative log-likelihood gain
  double floor_ratio = 1e-4;   // variance floor relative to global variance
  double floor_absolute = 1e-8;
  int threads = 1;
};

struct EmResult {
  GaussianMixture model;
  Vector loglik_trace;  // initial model, then after every M-step
  int iterations = 0;
  int reseeds = 0;
  bool converged = false;
};

namespace detail {

struct GlobalMoments {
  Vector mean;
  Vector variance;
};

inline GlobalMoments global_moments(const Matrix& x) {
  const std::size_t t = x.rows(), d = x.cols();
  GlobalMoments m{Vector(d, 0.0), Vector(d, 0.0)};
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += x(r, k);
  for (double& v : m.mean) v /= static_cast<double>(t);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t k = 0; k < d; ++k) {
      const double e = x(r, k) - m.mean[k];
      m.variance[k] += e * e;
    }
  for (double& v : m.variance) v /= static_cast<double>(t);
  return m;
}

// k-means++ seeding of the means.
inline Matrix seed_means(const Matrix& x, std::size_t n, Rng& rng) {
  const std::size_t t = x.rows();
  Matrix centers(n, x.cols());
  Vector nearest(t, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(t);
  for (std::size_t c = 0; c < n; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : nearest) total += v;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = t - 1;
        for (std::size_t r = 0; r < t; ++r) {
          acc += nearest[r];
          if (acc > target && nearest[r] > 0.0) {
            pick = r;
            break;
          }
        }
      } else {
        pick = rng.index(t);
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(c).begin());
    for (std::size_t r = 0; r < t; ++r) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double e = x(r, k) - centers(c, k);
        d2 += e * e;
      }
      nearest[r] = std::min(nearest[r], d2);
    }
  }
  return centers;
}

}  // namespace detail

// Fits an N-component mixture. Means are seeded k-means++ style, deviations
// start at the global per-coordinate deviation and weights start uniform.
// Variances are floored at floor_ratio * global variance (at least
// floor_absolute). A component whose occupancy drops below 1e-8 T is
// re-seeded at the sample with the lowest model density.
inline EmResult em_fit(const Matrix& samples, std::size_t n, const EmOptions& options = {}) {
  const std::size_t t = samples.rows(), d = samples.cols();
  require(n >= 1, "em_fit: need at least one component");
  require(t >= n, "em_fit: fewer samples than components");
  require(d >= 1, "em_fit: zero-dimensional samples");
  for (double v : samples.data()) require(std::isfinite(v), "em_fit: non-finite sample");

  const auto moments = detail::global_moments(samples);
  Vector var_floor(d), init_sigma(d);
  for (std::size_t k = 0; k < d; ++k) {
    var_floor[k] = std::max(options.floor_ratio * moments.variance[k], options.floor_absolute);
    init_sigma[k] = std::sqrt(std::max(moments.variance[k], var_floor[k]));
  }

  Rng rng(options.seed);
  Matrix sigma(n, d);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(init_sigma.begin(), init_sigma.end(), sigma.row(i).begin());
  GaussianMixture model(Vector(n, 1.0 / static_cast<double>(n)),
                        detail::seed_means(samples, n, rng), sigma);

  EmResult result;
  Matrix gamma(t, n);
  Vector log_density(t);
  auto e_step = [&](const GaussianMixture& m) {
    parallel_for(t, options.threads, [&](std::size_t r) {
      log_density[r] = m.memberships(samples.row(r), gamma.row(r));
    });
    double ll = 0.0;
    for (double v : log_density) ll += v;
    return ll;
  };

  double ll = e_step(model);
  result.loglik_trace.push_back(ll);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    Vector weights(n);
    Matrix means(n, d), stdevs(n, d);
    std::vector<char> starved(n, 0);
    parallel_for(n, options.threads, [&](std::size_t i) {
      double occupancy = 0.0;
      auto mu = means.row(i);
      for (std::size_t r = 0; r < t; ++r) {
        const double w = gamma(r, i);
        occupancy += w;
        for (std::size_t k = 0; k < d; ++k) mu[k] += w * samples(r, k);
      }
      if (occupancy < 1e-8 * static_cast<double>(t)) {
        starved[i] = 1;
        return;
      }
      for (double& v : mu) v /= occupancy;
      auto s = stdevs.row(i);
      for (std::size_t r = 0; r < t; ++r) {
        const double w = gamma(r, i);
        for (std::size_t k = 0; k < d; ++k) {
          const double e = samples(r, k) - mu[k];
          s[k] += w * e * e;
        }
      }
      for (std::size_t k = 0; k < d; ++k) s[k] = std::sqrt(std::max(s[k] / occupancy, var_floor[k]));
      weights[i] = occupancy / static_cast<double>(t);
    });

    for (std::size_t i = 0; i < n; ++i) {
      if (!starved[i]) continue;
      const std::size_t worst = static_cast<std::size_t>(
          std::min_element(log_density.begin(), log_density.end()) - log_density.begin());
      std::copy(samples.row(worst).begin(), samples.row(worst).end(), means.row(i).begin());
      std::copy(init_sigma.begin(), init_sigma.end(), stdevs.row(i).begin());
      weights[i] = 1.0 / static_cast<double>(t);
      log_density[worst] = std::numeric_limits<double>::infinity();
      ++result.reseeds;
    }
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;

    model = GaussianMixture(std::move(weights), std::move(means), std::move(stdevs));
    ++result.iterations;
    const double next = e_step(model);
    result.loglik_trace.push_back(next);
    const double gain = next - ll;
    ll = next;
    if (gain < options.tol * std::max(std::abs(ll), 1e-300)) {
      result.converged = true;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace simkernel::gmm
