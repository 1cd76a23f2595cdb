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

#include "pnlab/mathfn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnlab/errors.hpp"

namespace pnlab {

std::string to_string(MomentMethod m) {
  switch (m) {
    case MomentMethod::series: return "series";
    case MomentMethod::quadrature: return "quadrature";
    case MomentMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

double log_plus(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_plus: argument must be positive");
  return std::max(std::log2(x), 0.0);
}

static bool is_nonpositive_integer(double x) { return x <= 0.0 && std::floor(x) == x; }

double log_gamma(double x) {
  if (std::isnan(x) || is_nonpositive_integer(x)) throw std::domain_error("log_gamma: pole");
  return std::lgamma(x);
}

double digamma(double x) {
  if (std::isnan(x) || is_nonpositive_integer(x)) throw std::domain_error("digamma: pole");
  if (x < 0.0) return digamma(1.0 - x) - kPi / std::tan(kPi * x);
  double acc = 0.0;
  while (x < 12.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  // Asymptotic expansion with Bernoulli coefficients
  const double series =
      r2 * (1.0 / 12 - r2 * (1.0 / 120 - r2 * (1.0 / 252 - r2 * (1.0 / 240 - r2 * (1.0 / 132 - r2 * (691.0 / 32760))))));
  return acc + std::log(x) - 0.5 * r - series;
}

double log_beta(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("beta_function: arguments must be positive");
  return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y);
}

double beta_function(double x, double y) { return std::exp(log_beta(x, y)); }

double log_i0e(double x) {
  if (x < 0.0) x = -x;
  if (x < 500.0) return std::log(std::cyl_bessel_i(0.0, x)) - x;
  const double r = 1.0 / (8.0 * x);
  return -0.5 * std::log(2.0 * kPi * x) + std::log1p(r + 4.5 * r * r + 37.5 * r * r * r);
}

LogMoment expected_log_chi2(int k, double lambda, double tol, long max_terms) {
  if (k < 1) throw std::domain_error("expected_log_chi2: k must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::domain_error("expected_log_chi2: lambda must be >= 0");
  if (!(tol > 0.0)) throw std::domain_error("expected_log_chi2: tol must be positive");

  const double half = 0.5 * lambda;
  const double tol_nats = bits_to_nats(tol);
  const double log_half = half > 0.0 ? std::log(half) : 0.0;
  double sum = 0.0;
  for (long l = 0; l < max_terms; ++l) {
    double w;
    if (half > 0.0) {
      w = std::exp(-half + static_cast<double>(l) * log_half - std::lgamma(l + 1.0));
    } else {
      w = l == 0 ? 1.0 : 0.0;
    }
    const double f = digamma(0.5 * k + static_cast<double>(l)) + kLn2;
    sum += w * f;
    const double ratio = half / (static_cast<double>(l) + 2.0);
    if (ratio < 1.0) {
      // Poisson weights decay at least geometrically with ratio past this point
      const double next = w * half / (static_cast<double>(l) + 1.0);
      const double tail = next / (1.0 - ratio) * (1.0 + std::abs(f) + std::log1p(static_cast<double>(l) + 1.0));
      if (tail < tol_nats) return {nats_to_bits(sum), MomentMethod::series, tol};
    }
  }
  throw EstimationError("expected_log_chi2: series did not converge", nats_to_bits(sum));
}

LogMoment log_abs_sin_moment(const std::function<double()>& theta_sampler, std::size_t n) {
  if (n < 2) throw std::invalid_argument("log_abs_sin_moment: need at least two samples");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::log2(std::abs(std::sin(theta_sampler())));
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  const double se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return {mean, MomentMethod::monte_carlo, std::max(se, std::numeric_limits<double>::min())};
}

double log_sin_lower_bound(double h_theta, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("log_sin_lower_bound: alpha must lie in (0,1)");
  const double log2_norm = nats_to_bits(kLn2 + log_beta(0.5 * (1.0 - alpha), 0.5));
  return (h_theta - log2_norm) / alpha;
}

double wrapped_normal_entropy_bits(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::domain_error("wrapped_normal_entropy_bits: sigma2 must be positive");
  const double sigma = std::sqrt(sigma2);
  const int images = 3 + static_cast<int>(std::ceil(6.0 * sigma / (2.0 * kPi)));
  const int n = 8192;
  const double h = 2.0 * kPi / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = -kPi + (i + 0.5) * h;
    double p = 0.0;
    for (int m = -images; m <= images; ++m) {
      const double u = t + 2.0 * kPi * m;
      p += std::exp(-0.5 * u * u / sigma2);
    }
    p /= std::sqrt(2.0 * kPi * sigma2);
    if (p > 0.0) acc -= p * std::log(p) * h;
  }
  return nats_to_bits(acc);
}

}  // namespace pnlab
