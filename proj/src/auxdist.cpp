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

#include "pnlab/auxdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "pnlab/mathfn.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

void AuxGammaParams::validate() const {
  if (alphas.size() == 0) throw std::invalid_argument("AuxGammaParams: empty alpha vector");
  for (Eigen::Index i = 0; i < alphas.size(); ++i)
    if (!(alphas(i) > 0.0 && alphas(i) <= 1.0)) throw std::domain_error("AuxGammaParams: alpha must lie in (0, 1]");
  if (!(mu > 0.0)) throw std::domain_error("AuxGammaParams: mu must be positive");
}

static double power_term(double alpha, double v) {
  if (alpha == 1.0) return 0.0;
  return (alpha - 1.0) * std::log(v);
}

static double mv_gamma_unchecked(const Eigen::VectorXd& s, const AuxGammaParams& p) {
  const Eigen::Index n = s.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += -std::lgamma(p.alphas(i)) + p.alphas(i) * std::log(p.mu);
  acc += power_term(p.alphas(0), s(0));
  for (Eigen::Index i = 1; i < n; ++i) acc += power_term(p.alphas(i), s(i) - s(i - 1));
  return acc - p.mu * s(n - 1);
}

double mv_gamma_log_density(const Eigen::VectorXd& s, const AuxGammaParams& p) {
  p.validate();
  if (s.size() != p.alphas.size()) throw std::invalid_argument("mv_gamma_log_density: dimension mismatch");
  if (!(s(0) > 0.0)) throw std::domain_error("mv_gamma_log_density: s must be positive");
  for (Eigen::Index i = 1; i < s.size(); ++i)
    if (!(s(i) > s(i - 1))) throw std::domain_error("mv_gamma_log_density: s must be strictly increasing");
  return mv_gamma_unchecked(s, p);
}

double aux_logq_modelA(const Eigen::VectorXcd& w, const AuxGammaParams& p) {
  p.validate();
  const Eigen::Index n = w.size();
  if (n != p.alphas.size()) throw std::invalid_argument("aux_logq_modelA: dimension mismatch");
  std::vector<double> s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = std::norm(w(i));
  std::sort(s.begin(), s.end());
  // ties and zeros carry probability zero; nudge to the next representable value
  s[0] = std::max(s[0], std::numeric_limits<double>::min());
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(s[i] > s[i - 1])) s[i] = std::nextafter(s[i - 1], INFINITY);
  const Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
  return mv_gamma_unchecked(sv, p) - std::lgamma(n + 1.0) - n * std::log(kPi);
}

double aux_logq_independent(const Eigen::VectorXcd& w, const AuxGammaParams& p) {
  p.validate();
  if (w.size() != p.alphas.size()) throw std::invalid_argument("aux_logq_independent: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double a = p.alphas(i);
    const double s = std::max(std::norm(w(i)), std::numeric_limits<double>::min());
    acc += -std::log(kPi) - std::lgamma(a) + a * std::log(p.mu) + power_term(a, s) - p.mu * s;
  }
  return acc;
}

Eigen::MatrixXcd sample_aux(const AuxGammaParams& p, AuxFamily which, Eigen::Index count, std::uint64_t seed) {
  p.validate();
  const Eigen::Index n = p.alphas.size();
  Rng rng = make_rng(seed, 7);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  std::vector<std::gamma_distribution<double>> gam;
  for (Eigen::Index i = 0; i < n; ++i) gam.emplace_back(p.alphas(i), 1.0 / p.mu);
  Eigen::MatrixXcd out(n, count);
  std::vector<Eigen::Index> perm(n);
  std::vector<double> s(n);
  for (Eigen::Index t = 0; t < count; ++t) {
    double run = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = gam[i](rng);
      run = (which == AuxFamily::ModelA) ? run + g : g;
      s[i] = run;
    }
    std::iota(perm.begin(), perm.end(), 0);
    if (which == AuxFamily::ModelA) std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) out(perm[i], t) = std::polar(std::sqrt(s[i]), uni(rng));
  }
  return out;
}

}  // namespace pnlab
