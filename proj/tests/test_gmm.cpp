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

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "simkernel/gmm.hpp"

namespace {

using namespace simkernel;
using namespace simkernel::gmm;

GaussianMixture standard_normal() { return GaussianMixture({1.0}, Matrix::from_rows({{0.0}}), Matrix::from_rows({{1.0}})); }

GaussianMixture two_components(double gap) {
  return GaussianMixture({0.5, 0.5}, Matrix::from_rows({{0.0, 0.0}, {gap, gap}}),
                         Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}}));
}

TEST(Mixture, RejectsInvalidParameters) {
  EXPECT_THROW(GaussianMixture({0.6, 0.6}, Matrix::from_rows({{0.0}, {1.0}}), Matrix::from_rows({{1.0}, {1.0}})),
               std::invalid_argument);
  EXPECT_THROW(GaussianMixture({1.0}, Matrix::from_rows({{0.0}}), Matrix::from_rows({{0.0}})), std::invalid_argument);
  EXPECT_THROW(GaussianMixture({1.0}, Matrix::from_rows({{0.0, 1.0}}), Matrix::from_rows({{1.0}})),
               std::invalid_argument);
}

TEST(LogPdf, StandardNormalAtZero) {
  EXPECT_NEAR(standard_normal().log_pdf(Vector{0.0}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(standard_normal().log_pdf(Vector{0.0}), -0.9189, 1e-4);
  EXPECT_THROW(standard_normal().log_pdf(Vector{0.0, 1.0}), std::invalid_argument);
}

TEST(LogPdf, MatchesDirectDensity) {
  Rng rng(1);
  const auto m = GaussianMixture({0.3, 0.7}, Matrix::from_rows({{0.0, 1.0}, {2.0, -1.0}}),
                                 Matrix::from_rows({{1.0, 0.5}, {2.0, 1.5}}));
  for (int i = 0; i < 50; ++i) {
    const Matrix x = Matrix::from_rows({{3 * rng.normal(), 3 * rng.normal()}});
    EXPECT_NEAR(m.log_pdf(x.row(0)), static_cast<double>(oracle::gmm_loglik(m.weights(), m.means(), m.stdevs(), x)),
                1e-12);
  }
}

TEST(LogPdf, FiniteFarFromAllMeans) {
  const auto m = two_components(3.0);
  const double v = m.log_pdf(Vector{1e5, -1e5});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -1e9);
}

TEST(Memberships, SingleComponentAndSymmetry) {
  Rng rng(2);
  Matrix x(20, 1);
  for (double& v : x.data()) v = rng.normal();
  const Matrix single = memberships(standard_normal(), x);
  for (double g : single.data()) EXPECT_EQ(g, 1.0);

  const auto twins = GaussianMixture({0.5, 0.5}, Matrix::from_rows({{1.0}, {1.0}}), Matrix::from_rows({{2.0}, {2.0}}));
  const Matrix split = memberships(twins, x);
  for (double g : split.data()) EXPECT_DOUBLE_EQ(g, 0.5);
}

TEST(Memberships, PeakedAtOwnMean) {
  const auto m = two_components(10.0);
  const Matrix g = memberships(m, Matrix::from_rows({{10.0, 10.0}}));
  // Ratio of exact densities: exp(-100) against 1.
  EXPECT_GT(g(0, 1), 0.999);
  EXPECT_NEAR(g(0, 0), std::exp(-100.0) / (1.0 + std::exp(-100.0)), 1e-50);
}

TEST(Memberships, RowsSumToOneFarAway) {
  const auto m = two_components(3.0);
  const Matrix x = Matrix::from_rows({{50.0, 50.0}, {-50.0, 60.0}, {1e3, -1e3}});
  const Matrix g = memberships(m, x);
  for (std::size_t r = 0; r < g.rows(); ++r) EXPECT_NEAR(g(r, 0) + g(r, 1), 1.0, 1e-12);
}

TEST(EmFit, SingleComponentClosedForm) {
  Rng rng(3);
  Matrix x(100, 2);
  for (double& v : x.data()) v = 5.0 + 2.0 * rng.normal();
  const auto fit = em_fit(x, 1);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < 100; ++t) mean += x(t, k);
    mean /= 100.0;
    for (std::size_t t = 0; t < 100; ++t) var += (x(t, k) - mean) * (x(t, k) - mean);
    var /= 100.0;
    EXPECT_NEAR(fit.model.means()(0, k), mean, 1e-10);
    EXPECT_NEAR(fit.model.stdevs()(0, k), std::sqrt(var), 1e-10);
  }
  EXPECT_EQ(fit.model.weights()[0], 1.0);
}

TEST(EmFit, SeparatedClustersRecovered) {
  Rng rng(4);
  Matrix x(300, 1);
  double low_sum = 0.0;
  for (std::size_t t = 0; t < 300; ++t) {
    const bool low = t < 100;
    x(t, 0) = (low ? 0.0 : 100.0) + rng.normal();
    if (low) low_sum += x(t, 0);
  }
  const auto fit = em_fit(x, 2);
  const std::size_t lo = fit.model.means()(0, 0) < fit.model.means()(1, 0) ? 0 : 1;
  EXPECT_NEAR(fit.model.means()(lo, 0), 0.0, 0.5);
  EXPECT_NEAR(fit.model.means()(1 - lo, 0), 100.0, 0.5);
  EXPECT_NEAR(fit.model.means()(lo, 0), low_sum / 100.0, 1e-6);
  EXPECT_NEAR(fit.model.weights()[lo], 1.0 / 3.0, 1e-6);
}

TEST(EmFit, IdenticalPointsHitVarianceFloor) {
  Matrix x(10, 1);
  for (double& v : x.data()) v = 3.0;
  const auto fit = em_fit(x, 1);
  EXPECT_NEAR(fit.model.stdevs()(0, 0), std::sqrt(1e-8), 1e-15);
  EXPECT_EQ(fit.model.means()(0, 0), 3.0);
}

TEST(EmFit, RejectsTooFewSamples) {
  EXPECT_THROW(em_fit(Matrix::from_rows({{1.0}}), 2), std::invalid_argument);
}

TEST(EmFit, MonotoneTraceAndDeterminism) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(60 + rng.index(100), 2);
    for (double& v : x.data()) v = rng.normal() + (rng.uniform() < 0.5 ? 4.0 : 0.0);
    EmOptions o;
    o.seed = trial;
    const auto a = em_fit(x, 3, o);
    for (std::size_t i = 1; i < a.loglik_trace.size(); ++i)
      EXPECT_GE(a.loglik_trace[i], a.loglik_trace[i - 1] - 1e-8);
    o.threads = 4;
    const auto b = em_fit(x, 3, o);
    EXPECT_EQ(a.model.means(), b.model.means());
    EXPECT_EQ(a.loglik_trace, b.loglik_trace);
  }
}

TEST(Gradient, VanishesAtSingleComponentFit) {
  Rng rng(6);
  Matrix x(80, 3);
  for (double& v : x.data()) v = rng.normal() * 2.0 - 1.0;
  const auto fit = em_fit(x, 1);
  const auto g = loglik_gradient(fit.model, x);
  for (double v : g.means.data()) EXPECT_NEAR(v, 0.0, 1e-6);
  for (double v : g.stdevs.data()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Gradient, ZeroMeanBlockAtMean) {
  const auto m = two_components(4.0);
  const auto g = loglik_gradient(m, Matrix::from_rows({{4.0, 4.0}}));
  EXPECT_NEAR(g.means(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(g.means(1, 1), 0.0, 1e-15);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(7);
  const auto m = GaussianMixture({0.25, 0.75}, Matrix::from_rows({{0.0, 1.0}, {2.0, -1.0}}),
                                 Matrix::from_rows({{1.0, 0.5}, {2.0, 1.5}}));
  Matrix x(30, 2);
  for (double& v : x.data()) v = 2.0 * rng.normal();
  const Vector g = loglik_gradient(m, x).flatten();
  Vector w = m.weights();
  Matrix mu = m.means(), sigma = m.stdevs();
  std::vector<double*> params;
  for (double& v : w) params.push_back(&v);
  for (double& v : mu.data()) params.push_back(&v);
  for (double& v : sigma.data()) params.push_back(&v);
  ASSERT_EQ(params.size(), g.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = *params[p], h = 1e-5;
    *params[p] = saved + h;
    const long double up = oracle::gmm_loglik(w, mu, sigma, x);
    *params[p] = saved - h;
    const long double down = oracle::gmm_loglik(w, mu, sigma, x);
    *params[p] = saved;
    const double fd = static_cast<double>((up - down) / (2.0L * h));
    EXPECT_NEAR(g[p], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "parameter " << p;
  }
}

TEST(LogLikelihood, SumsLogPdf) {
  const auto m = two_components(2.0);
  const Matrix x = Matrix::from_rows({{0.1, 0.2}, {1.5, 2.5}, {-1.0, 0.0}});
  double s = 0.0;
  for (std::size_t t = 0; t < 3; ++t) s += m.log_pdf(x.row(t));
  EXPECT_NEAR(log_likelihood(m, x), s, 1e-12);
}

}  // namespace
