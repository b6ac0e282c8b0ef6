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

// Independent reference implementations used by the unit and acceptance
// tests. They favour obviousness over speed and share no code with the
// library beyond its container types.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "simkernel/common.hpp"

namespace oracle {

using simkernel::Matrix;
using simkernel::Vector;

// Mann-Whitney AUC by explicit pair counting; twice the wins stay integral.
inline double auc_pairs(const Vector& s, const std::vector<int>& y) {
  double doubled = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) (y[i] ? pos : neg) += 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      if (s[i] > s[j]) doubled += 2.0;
      else if (s[i] == s[j]) doubled += 1.0;
    }
  }
  return doubled / 2.0 / (pos * neg);
}

// AP: for each positive, precision at its rank; ties ordered by index.
inline double ap_quadratic(const Vector& s, const std::vector<int>& y) {
  double sum = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    pos += 1.0;
    double rank = 0.0, hits = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const bool before = s[j] > s[i] || (s[j] == s[i] && j <= i);
      if (before) {
        rank += 1.0;
        if (y[j]) hits += 1.0;
      }
    }
    sum += hits / rank;
  }
  return sum / pos;
}

// Minimum over every monotone alignment path, costs summed from the start.
inline double dtw_paths(const Vector& x, const Vector& y) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                   double acc) {
    const double d = x[i] - y[j];
    acc = acc + d * d;
    if (i + 1 == x.size() && j + 1 == y.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < x.size()) walk(i + 1, j, acc);
    if (j + 1 < y.size()) walk(i, j + 1, acc);
    if (i + 1 < x.size() && j + 1 < y.size()) walk(i + 1, j + 1, acc);
  };
  // The first cell is added to zero, matching "0 + cost" in any DP.
  walk(0, 0, 0.0);
  return std::sqrt(best);
}

// Direct log-likelihood of a diagonal GMM from raw (possibly unnormalized)
// weights, in long double.
inline long double gmm_loglik(const Vector& w, const Matrix& mu, const Matrix& sigma, const Matrix& x) {
  long double total = 0.0L;
  const long double two_pi = 6.283185307179586476925286766559L;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    long double mix = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) {
      long double log_g = 0.0L;
      for (std::size_t d = 0; d < x.cols(); ++d) {
        const long double s = sigma(i, d);
        const long double z = (static_cast<long double>(x(t, d)) - mu(i, d)) / s;
        log_g += -0.5L * z * z - std::log(s) - 0.5L * std::log(two_pi);
      }
      mix += static_cast<long double>(w[i]) * std::exp(log_g);
    }
    total += std::log(mix);
  }
  return total;
}

// Exact maximum of W(a) = sum a - 1/2 a^T Q a over the grid {0, h, ..., C}^4
// with h = C / steps. Loops the first three coordinates; W is concave in the
// fourth, so only the grid points bracketing its continuous maximizer (or
// the endpoints) can win.
inline double svm_grid_max(const Matrix& k, const std::vector<int>& y, double c, int steps) {
  double q[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) q[i][j] = y[i] * y[j] * k(i, j);
  const double h = c / steps;
  double best = -std::numeric_limits<double>::infinity();
  for (int i0 = 0; i0 <= steps; ++i0)
    for (int i1 = 0; i1 <= steps; ++i1)
      for (int i2 = 0; i2 <= steps; ++i2) {
        const double a[3] = {i0 * h, i1 * h, i2 * h};
        double base = a[0] + a[1] + a[2], cross = 0.0;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) base -= 0.5 * a[i] * a[j] * q[i][j];
          cross += q[3][i] * a[i];
        }
        // W as a function of the fourth coordinate v.
        auto w_of = [&](int v) {
          const double a3 = v * h;
          return base + a3 * (1.0 - cross) - 0.5 * q[3][3] * a3 * a3;
        };
        best = std::max({best, w_of(0), w_of(steps)});
        if (q[3][3] > 0.0) {
          const int lo = static_cast<int>(std::floor((1.0 - cross) / q[3][3] / h));
          for (int v : {lo, lo + 1})
            if (v > 0 && v < steps) best = std::max(best, w_of(v));
        }
      }
  return best;
}

inline double min_eigenvalue(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// I(A; B) from a joint matrix, direct double sum.
inline double mutual_information(const Matrix& joint) {
  double total = 0.0;
  for (double v : joint.data()) total += v;
  double mi = 0.0;
  for (std::size_t a = 0; a < joint.rows(); ++a)
    for (std::size_t b = 0; b < joint.cols(); ++b) {
      const double p = joint(a, b) / total;
      if (p <= 0.0) continue;
      double pa = 0.0, pb = 0.0;
      for (std::size_t c = 0; c < joint.cols(); ++c) pa += joint(a, c) / total;
      for (std::size_t r = 0; r < joint.rows(); ++r) pb += joint(r, b) / total;
      mi += p * std::log(p / (pa * pb));
    }
  return mi;
}

}  // namespace oracle
