// SPDX-License-Identifier: Apache-2.0
//
// pnlab - numerical laboratory for MIMO phase-noise channels
// Copyright (C) 2026 The pnlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pnlab/auxdist.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/rng.hpp"

using namespace pnlab;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

AuxGammaParams params(std::vector<double> a, double mu) {
  AuxGammaParams p;
  p.alphas = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  p.mu = mu;
  return p;
}

// Integral of a two-variate Gamma density over 0 < s1 < s2 after the
// substitutions s1 = u^(1/a1), s2 - s1 = v^(1/a2), which remove both
// endpoint singularities.
double quad_mv_gamma_2d(const AuxGammaParams& p) {
  const double a1 = p.alphas(0), a2 = p.alphas(1);
  // truncate where exp(-mu s) is negligible
  const double smax = 60.0 / p.mu;
  const double umax = std::pow(smax, a1), vmax = std::pow(smax, a2);
  const int m = 1200;
  const double du = umax / m, dv = vmax / m;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) * du;
    const double s1 = std::pow(u, 1.0 / a1);
    const double j1 = std::pow(u, 1.0 / a1 - 1.0) / a1;
    for (int k = 0; k < m; ++k) {
      const double v = (k + 0.5) * dv;
      const double d = std::pow(v, 1.0 / a2);
      const double j2 = std::pow(v, 1.0 / a2 - 1.0) / a2;
      Eigen::Vector2d s(s1, s1 + d);
      if (!(s(1) > s(0))) continue;
      acc += std::exp(mv_gamma_log_density(s, p)) * j1 * j2;
    }
  }
  return acc * du * dv;
}

struct MeanSe {
  double mean, se;
};

MeanSe mean_se(const std::vector<double>& v) {
  double s = 0.0, s2 = 0.0;
  for (double x : v) s += x, s2 += x * x;
  const double n = static_cast<double>(v.size());
  const double m = s / n;
  return {m, std::sqrt(std::max(s2 / n - m * m, 0.0) / n)};
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(params({0.5, 1.0}, 2.0).validate());
  CHECK_THROWS_AS(params({0.0}, 1.0).validate(), std::domain_error);
  CHECK_THROWS_AS(params({1.5}, 1.0).validate(), std::domain_error);
  CHECK_THROWS_AS(params({0.5}, 0.0).validate(), std::domain_error);
  CHECK_THROWS_AS(params({}, 1.0).validate(), std::invalid_argument);
}

TEST_CASE("multivariate Gamma density") {
  SECTION("exponential reduction") {
    Eigen::VectorXd s(1);
    s << 1.0;
    CHECK(mv_gamma_log_density(s, params({1.0}, 1.0)) == Approx(-1.0).margin(1e-15));
  }
  SECTION("all alphas one telescopes") {
    Eigen::VectorXd s(3);
    s << 0.3, 1.1, 2.7;
    const double mu = 1.7;
    CHECK(mv_gamma_log_density(s, params({1, 1, 1}, mu)) == Approx(-mu * 2.7 + 3.0 * std::log(mu)).epsilon(1e-14));
  }
  SECTION("ordering violations") {
    Eigen::VectorXd s(2);
    s << 2.0, 1.0;
    CHECK_THROWS_AS(mv_gamma_log_density(s, params({0.5, 0.5}, 1.0)), std::domain_error);
    s << 1.0, 1.0;
    CHECK_THROWS_AS(mv_gamma_log_density(s, params({0.5, 0.5}, 1.0)), std::domain_error);
    s << -1.0, 1.0;
    CHECK_THROWS_AS(mv_gamma_log_density(s, params({0.5, 0.5}, 1.0)), std::domain_error);
    CHECK_THROWS_AS(mv_gamma_log_density(Eigen::VectorXd::Ones(3), params({0.5, 0.5}, 1.0)), std::invalid_argument);
  }
  SECTION("two-variate normalization by quadrature") {
    for (auto a : {std::vector<double>{0.5, 0.5}, {0.2, 0.9}, {1.0, 0.3}})
      for (double mu : {0.5, 1.0, 3.0}) CHECK(quad_mv_gamma_2d(params(a, mu)) == Approx(1.0).epsilon(2e-3));
  }
}

TEST_CASE("circular liftings") {
  SECTION("Gaussian reductions") {
    Eigen::VectorXcd w(1);
    w << cd(0.4, -0.7);
    const double gauss = -std::norm(w(0)) - std::log(kPi);
    CHECK(aux_logq_modelA(w, params({1.0}, 1.0)) == Approx(gauss).epsilon(1e-14));
    Eigen::VectorXcd w3(3);
    w3 << cd(0.4, -0.7), cd(1.2, 0.1), cd(-0.3, 0.3);
    CHECK(aux_logq_independent(w3, params({1, 1, 1}, 1.0)) ==
          Approx(-w3.squaredNorm() - 3.0 * std::log(kPi)).epsilon(1e-14));
  }
  SECTION("permutation and phase invariance") {
    const AuxGammaParams p = params({0.3, 0.6, 0.9}, 0.7);
    Eigen::VectorXcd w(3);
    w << cd(0.4, -0.7), cd(1.2, 0.1), cd(-0.3, 0.3);
    Eigen::VectorXcd pw(3);
    pw << w(2), w(0), w(1);
    Eigen::VectorXcd rw = w;
    for (int i = 0; i < 3; ++i) rw(i) *= std::polar(1.0, 0.7 * (i + 1));
    const double base = aux_logq_modelA(w, p);
    CHECK(aux_logq_modelA(pw, p) == base);
    CHECK(aux_logq_modelA(rw, p) == Approx(base).epsilon(1e-14));
    CHECK(std::isfinite(base));
  }
  SECTION("ties and zeros stay finite") {
    const AuxGammaParams p = params({0.5, 0.5}, 1.0);
    Eigen::VectorXcd w(2);
    w << cd(1.0, 0.0), cd(0.0, 1.0);
    CHECK(std::isfinite(aux_logq_modelA(w, p)));
    w << cd(0.0, 0.0), cd(0.0, 1.0);
    CHECK(std::isfinite(aux_logq_modelA(w, p)));
    CHECK(std::isfinite(aux_logq_independent(w, p)));
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(aux_logq_modelA(Eigen::VectorXcd::Ones(3), params({0.5, 0.5}, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(aux_logq_independent(Eigen::VectorXcd::Ones(1), params({0.5, 0.5}, 1.0)), std::invalid_argument);
  }
}

TEST_CASE("importance-sampled normalization") {
  // Proposal: equal mixture of the independent family and the ordered family at
  // half the rate; its tails and endpoint singularities dominate both targets.
  const Eigen::Index n = 200000;
  for (auto a : {std::vector<double>{0.5, 0.5}, {0.2, 0.8}})
    for (double mu : {0.3, 1.0, 4.0}) {
      const AuxGammaParams p = params(a, mu);
      const AuxGammaParams wide = params(a, mu / 2.0);
      const Eigen::MatrixXcd s1 = sample_aux(wide, AuxFamily::Independent, n / 2, 11);
      const Eigen::MatrixXcd s2 = sample_aux(wide, AuxFamily::ModelA, n / 2, 12);
      std::vector<double> ra, ri;
      for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::VectorXcd w = t < n / 2 ? Eigen::VectorXcd(s1.col(t)) : Eigen::VectorXcd(s2.col(t - n / 2));
        const double lg = std::log(0.5 * std::exp(aux_logq_independent(w, wide)) + 0.5 * std::exp(aux_logq_modelA(w, wide)));
        ra.push_back(std::exp(aux_logq_modelA(w, p) - lg));
        ri.push_back(std::exp(aux_logq_independent(w, p) - lg));
      }
      const MeanSe ma = mean_se(ra), mi = mean_se(ri);
      CHECK(std::abs(ma.mean - 1.0) <= 3.0 * ma.se + 1e-3);
      CHECK(std::abs(mi.mean - 1.0) <= 3.0 * mi.se + 1e-3);
    }
}

TEST_CASE("sampler moments and law") {
  const AuxGammaParams p = params({0.3, 0.6, 0.9}, 2.0);
  const Eigen::Index n = 100000;
  const Eigen::MatrixXcd w = sample_aux(p, AuxFamily::ModelA, n, 3);
  std::vector<double> top;
  for (Eigen::Index t = 0; t < n; ++t) top.push_back(w.col(t).cwiseAbs2().maxCoeff());
  const MeanSe m = mean_se(top);
  CHECK(std::abs(m.mean - p.alphas.sum() / p.mu) <= 3.0 * m.se);

  // smallest squared magnitude is Gamma(alpha_1, mu): KS test against the CDF
  // via the regularized lower incomplete gamma by series.
  std::vector<double> low;
  for (Eigen::Index t = 0; t < 20000; ++t) low.push_back(w.col(t).cwiseAbs2().minCoeff());
  std::sort(low.begin(), low.end());
  auto cdf = [&](double x) {
    const double a = p.alphas(0), z = p.mu * x;
    double term = 1.0 / a, sum = term;
    for (int k = 1; k < 500 && term > 1e-17 * sum; ++k) sum += (term *= z / (a + k));
    return std::exp(a * std::log(z) - z - std::lgamma(a)) * sum;
  };
  double d = 0.0;
  const double nn = static_cast<double>(low.size());
  for (std::size_t i = 0; i < low.size(); ++i) {
    const double f = cdf(low[i]);
    d = std::max({d, (i + 1) / nn - f, f - i / nn});
  }
  CHECK(d < 1.628 / std::sqrt(nn));

  // component order is exchangeable: each slot holds the maximum a third of the time
  Eigen::Vector3d hits = Eigen::Vector3d::Zero();
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::Index idx;
    w.col(t).cwiseAbs2().maxCoeff(&idx);
    hits(idx) += 1.0;
  }
  for (int i = 0; i < 3; ++i) CHECK(std::abs(hits(i) / n - 1.0 / 3.0) < 4.0 * std::sqrt(2.0 / 9.0 / n));

  const Eigen::MatrixXcd ind = sample_aux(p, AuxFamily::Independent, n, 4);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v;
    for (Eigen::Index t = 0; t < n; ++t) v.push_back(std::norm(ind(i, t)));
    const MeanSe mi = mean_se(v);
    CHECK(std::abs(mi.mean - p.alphas(i) / p.mu) <= 3.5 * mi.se);
  }
  CHECK(sample_aux(p, AuxFamily::ModelA, 10, 3) == sample_aux(p, AuxFamily::ModelA, 10, 3));
}
