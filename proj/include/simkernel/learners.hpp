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

// Kernel and feature learners: a 1-norm soft-margin SVM trained by
// projected coordinate ascent on its dual, and logistic regression.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "simkernel/common.hpp"

namespace simkernel::learners {

struct SvmOptions {
  double C = 1.0;
  double eta = 0.0;  // 0 selects 1 / max_i K_ii
  int max_epochs = 1000;
  double tol = 1e-6;  // stop when max per-epoch |delta alpha| falls below
  // Bias is absorbed by a constant feature, i.e. training on K + offset.
  // 0 trains without bias.
  double bias_offset = 0.0;
  // Per-class box scaling: C_i = C * weight(y_i).
  double positive_weight = 1.0;
  double negative_weight = 1.0;
};

struct SvmModel {
  Vector alphas;
  std::vector<int> labels;  // +1 / -1
  std::vector<std::size_t> support_indices;
  double C = 1.0;
  double bias_offset = 0.0;
  double bias = 0.0;  // bias_offset * sum_i alpha_i y_i
  int epochs = 0;
  bool converged = false;
  Vector objective_trace;  // dual objective after each epoch

  std::size_t train_size() const { return alphas.size(); }
};

namespace detail {

inline void check_kernel(const Matrix& k) {
  require(k.rows() > 0 && k.rows() == k.cols(), "svm: kernel matrix must be square");
  double scale = 0.0;
  for (std::size_t i = 0; i < k.rows(); ++i)
    for (std::size_t j = 0; j < k.cols(); ++j) {
      require(std::isfinite(k(i, j)), "svm: non-finite kernel entry");
      scale = std::max(scale, std::abs(k(i, j)));
    }
  const double tol = 1e-9 * (1.0 + scale);
  for (std::size_t i = 0; i < k.rows(); ++i) {
    require(k(i, i) >= -tol, "svm: negative kernel diagonal");
    for (std::size_t j = 0; j < i; ++j)
      require(std::abs(k(i, j) - k(j, i)) <= tol, "svm: kernel matrix is not symmetric");
  }
}

inline void check_signed_labels(const std::vector<int>& y, std::size_t n) {
  require(y.size() == n, "svm: one label per kernel row");
  bool pos = false, neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, "svm: labels must be +1 or -1");
    (v == 1 ? pos : neg) = true;
  }
  require(pos && neg, "svm: both classes must be present");
}

}  // namespace detail

// W(a) = sum_t a_t - 1/2 sum_ij a_i a_j y_i y_j (K_ij + offset).
inline double dual_objective(const Matrix& k, const std::vector<int>& y, std::span<const double> alpha,
                             double offset = 0.0) {
  require(alpha.size() == k.rows() && y.size() == k.rows(), "dual_objective: size mismatch");
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) row += alpha[j] * y[j] * (k(i, j) + offset);
    quad += alpha[i] * y[i] * row;
  }
  return linear - 0.5 * quad;
}

// Coordinate updates a_i <- clip(a_i + eta (1 - y_i sum_t a_t y_t K_ti), 0, C_i)
// in index order. With eta <= 1 / max K_ii each update cannot lower W.
inline SvmModel svm_train(const Matrix& k, const std::vector<int>& y, const SvmOptions& options = {}) {
  detail::check_kernel(k);
  detail::check_signed_labels(y, k.rows());
  require(options.C > 0.0, "svm_train: C must be positive");
  require(options.positive_weight > 0.0 && options.negative_weight > 0.0,
          "svm_train: class weights must be positive");
  require(options.bias_offset >= 0.0, "svm_train: bias offset must be non-negative");
  require(options.max_epochs >= 1 && options.tol > 0.0, "svm_train: invalid stopping rule");

  const std::size_t n = k.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, k(i, i) + options.bias_offset);
  double eta = options.eta;
  if (eta == 0.0) {
    require(max_diag > 0.0, "svm_train: zero kernel diagonal, set eta explicitly");
    eta = 1.0 / max_diag;
  }
  require(eta > 0.0, "svm_train: learning rate must be positive");

  SvmModel model;
  model.alphas.assign(n, 0.0);
  model.labels = y;
  model.C = options.C;
  model.bias_offset = options.bias_offset;

  // margin[i] = sum_t a_t y_t (K_ti + offset), kept incrementally.
  Vector margin(n, 0.0);
  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    double largest_step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double cap = options.C * (y[i] == 1 ? options.positive_weight : options.negative_weight);
      const double old = model.alphas[i];
      const double updated = std::clamp(old + eta * (1.0 - y[i] * margin[i]), 0.0, cap);
      const double delta = updated - old;
      if (delta == 0.0) continue;
      model.alphas[i] = updated;
      largest_step = std::max(largest_step, std::abs(delta));
      const double scaled = delta * y[i];
      for (std::size_t j = 0; j < n; ++j) margin[j] += scaled * (k(i, j) + options.bias_offset);
    }
    model.epochs = epoch + 1;
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      linear += model.alphas[i];
      quad += model.alphas[i] * y[i] * margin[i];
    }
    model.objective_trace.push_back(linear - 0.5 * quad);
    if (largest_step < options.tol) {
      model.converged = true;
      break;
    }
  }

  double signed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.alphas[i] > 0.0) model.support_indices.push_back(i);
    signed_sum += model.alphas[i] * y[i];
  }
  model.bias = options.bias_offset * signed_sum;
  return model;
}

// score(x) = sum_i a_i y_i K(x_i, x) + bias; rows of k_test are test instances.
inline Vector svm_decision(const SvmModel& model, const Matrix& k_test, int threads = 1) {
  require(k_test.cols() == model.train_size(), "svm_decision: kernel columns must match training size");
  Vector scores(k_test.rows());
  parallel_for(k_test.rows(), threads, [&](std::size_t r) {
    double s = model.bias;
    for (std::size_t i : model.support_indices) s += model.alphas[i] * model.labels[i] * k_test(r, i);
    scores[r] = s;
  });
  return scores;
}

// ---------------------------------------------------------------------------
// Logistic regression. Column 0 of the design matrix is the constant 1.

struct LogRegOptions {
  double eta = 0.1;
  int epochs = 1000;
  double l2 = 0.0;     // penalty on non-bias weights
  double tol = 1e-10;  // stop when the largest weight step falls below
};

struct LogRegModel {
  Vector weights;  // weights[0] is the bias
  int epochs = 0;
};

inline Matrix with_bias_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out(r, 0) = 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c + 1) = x(r, c);
  }
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

inline void check_logreg(const Matrix& x, const std::vector<int>& y, bool need_both) {
  require(x.rows() > 0 && x.cols() > 0, "logreg: empty design matrix");
  require(y.size() == x.rows(), "logreg: one label per row");
  bool pos = false, neg = false;
  for (int v : y) {
    require(v == 0 || v == 1, "logreg: labels must be 0 or 1");
    (v == 1 ? pos : neg) = true;
  }
  if (need_both) require(pos && neg, "logreg: both classes must be present");
  for (double v : x.data()) require(std::isfinite(v), "logreg: non-finite feature");
}

}  // namespace detail

// Log-likelihood sum_t [y_t ln p_t + (1 - y_t) ln(1 - p_t)] minus the L2 term.
inline double logreg_loglik(const Matrix& x, const std::vector<int>& y, std::span<const double> w,
                            double l2 = 0.0) {
  detail::check_logreg(x, y, false);
  require(w.size() == x.cols(), "logreg_loglik: weight dimension mismatch");
  double ll = 0.0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double z = dot(x.row(t), w);
    // ln sigmoid(z) = -log1p(e^-z); ln(1 - sigmoid(z)) = -log1p(e^z)
    const double log1p_neg = z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    ll += y[t] == 1 ? -log1p_neg : -(log1p_neg + z);
  }
  for (std::size_t i = 1; i < w.size(); ++i) ll -= 0.5 * l2 * w[i] * w[i];
  return ll;
}

// sum_t (y_t - p_t) x_t, minus the L2 term.
inline Vector logreg_gradient(const Matrix& x, const std::vector<int>& y, std::span<const double> w,
                              double l2 = 0.0) {
  detail::check_logreg(x, y, false);
  require(w.size() == x.cols(), "logreg_gradient: weight dimension mismatch");
  Vector g(w.size(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double e = y[t] - sigmoid(dot(x.row(t), w));
    const auto row = x.row(t);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += e * row[i];
  }
  for (std::size_t i = 1; i < w.size(); ++i) g[i] -= l2 * w[i];
  return g;
}

// Full-batch gradient ascent with step eta / T.
inline LogRegModel logreg_train(const Matrix& x, const std::vector<int>& y,
                                const LogRegOptions& options = {}) {
  detail::check_logreg(x, y, true);
  require(options.eta > 0.0 && options.epochs >= 1, "logreg_train: invalid schedule");
  require(options.l2 >= 0.0, "logreg_train: negative L2 penalty");
  LogRegModel model{Vector(x.cols(), 0.0), 0};
  const double step = options.eta / static_cast<double>(x.rows());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const Vector g = logreg_gradient(x, y, model.weights, options.l2);
    double largest = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      model.weights[i] += step * g[i];
      largest = std::max(largest, std::abs(step * g[i]));
    }
    model.epochs = epoch + 1;
    for (double v : model.weights)
      if (!std::isfinite(v)) throw NumericError("logreg_train: weights diverged");
    if (largest < options.tol) break;
  }
  return model;
}

inline Vector logreg_predict(const LogRegModel& model, const Matrix& x) {
  require(x.cols() == model.weights.size(), "logreg_predict: feature dimension mismatch");
  Vector p(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) p[t] = sigmoid(dot(x.row(t), model.weights));
  return p;
}

}  // namespace simkernel::learners
