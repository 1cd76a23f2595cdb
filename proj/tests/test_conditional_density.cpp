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

#include <cmath>
#include <vector>

#include "pnlab/channel.hpp"
#include "pnlab/conditional_density.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/rng.hpp"

using namespace pnlab;

namespace {

// log E_theta[ CN(y; G(theta) x, I) ] by a periodic product rule with m
// nodes per independent phase stream.
double brute_force_log_density(const Eigen::MatrixXcd& h, PhaseStructure s, const Eigen::VectorXcd& x,
                               const Eigen::VectorXcd& y, int m) {
  const Eigen::Index n_r = h.rows(), n_t = h.cols();
  const Eigen::Index ns = stream_count(s, n_r, n_t);
  PhaseDraws d{s, n_r, n_t, Eigen::MatrixXd::Zero(ns, 1)};
  std::vector<int> idx(static_cast<std::size_t>(ns), 0);
  std::vector<double> logs;
  for (;;) {
    for (Eigen::Index r = 0; r < ns; ++r) d.streams(r, 0) = 2.0 * kPi * idx[r] / m;
    const Eigen::MatrixXd th = d.path_phases(0);
    Eigen::MatrixXcd g(n_r, n_t);
    for (Eigen::Index i = 0; i < n_r; ++i)
      for (Eigen::Index k = 0; k < n_t; ++k) g(i, k) = h(i, k) * std::polar(1.0, th(i, k));
    logs.push_back(-(y - g * x).squaredNorm());
    Eigen::Index r = 0;
    while (r < ns && ++idx[r] == m) idx[r++] = 0;
    if (r == ns) break;
  }
  double mx = -INFINITY;
  for (double v : logs) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(logs.size())) - static_cast<double>(n_r) * std::log(kPi);
}

struct Case {
  PhaseStructure s;
  Eigen::Index n_r, n_t;
  int nodes;
  double tol;  // nats
};

}  // namespace

TEST_CASE("density against phase quadrature") {
  const std::vector<Case> cases{
      {PhaseStructure::Common, 2, 2, 256, 1e-9},  {PhaseStructure::RxOnly, 2, 2, 128, 1e-9},
      {PhaseStructure::TxOnly, 2, 1, 256, 1e-9},  {PhaseStructure::TxOnly, 2, 2, 128, 0.03},
      {PhaseStructure::TxOnly, 2, 3, 48, 0.03},   {PhaseStructure::PerPath, 1, 2, 128, 0.03},
      {PhaseStructure::PerPath, 2, 2, 40, 0.03},  {PhaseStructure::TxRx, 2, 2, 28, 0.03},
      {PhaseStructure::PerPath, 3, 1, 96, 1e-9},
  };
  int c = 0;
  for (const Case& cs : cases) {
    ++c;
    const ChannelRealization ch = generate_generic_matrix(cs.n_r, cs.n_t, 100 + c);
    const PhaseNoiseSpec spec{cs.s, IidUniform{}};
    MarginalOptions many;
    many.n_importance = 4096;
    const ConditionalDensity dens(ch.h, spec, many);
    const ConditionalDensity quick(ch.h, spec);
    Rng xr = make_rng(200 + c);
    for (int rep = 0; rep < 4; ++rep) {
      Eigen::MatrixXcd x(cs.n_t, 1);
      for (Eigen::Index k = 0; k < cs.n_t; ++k) x(k, 0) = complex_normal(xr, 1.5);
      const SampleBatch b = apply_channel(ch, spec, x, 300 + 10 * c + rep);
      const double want = brute_force_log_density(ch.h, cs.s, b.x.col(0), b.y.col(0), cs.nodes);
      Rng rng = make_rng(400 + c, rep);
      const Eigen::MatrixXd th = b.phases.path_phases(0);
      const double got = dens.log_density(b.x.col(0), b.y.col(0), rng, &th);
      INFO("structure " << to_string(cs.s) << " " << cs.n_r << "x" << cs.n_t << " rep " << rep);
      CHECK(std::abs(got - want) < cs.tol);
      // the generating phases only guide the mode search
      Rng rng2 = make_rng(400 + c, rep);
      CHECK(std::abs(dens.log_density(b.x.col(0), b.y.col(0), rng2) - want) < cs.tol);
      // default sample budget: noisy but unbiased, errors average out in entropy estimates
      Rng rng3 = make_rng(500 + c, rep);
      CHECK(std::abs(quick.log_density(b.x.col(0), b.y.col(0), rng3, &th) - want) < std::max(cs.tol, 0.3));
    }
  }
}

TEST_CASE("numeric dimension count") {
  const ChannelRealization ch = generate_generic_matrix(2, 3, 7);
  Eigen::VectorXcd x(3);
  x << cd(1, 0), cd(0, 0), cd(0.5, 0.5);
  CHECK(ConditionalDensity(ch.h, {PhaseStructure::Common, IidUniform{}}).numeric_dims(x) == 0);
  CHECK(ConditionalDensity(ch.h, {PhaseStructure::RxOnly, IidUniform{}}).numeric_dims(x) == 0);
  CHECK(ConditionalDensity(ch.h, {PhaseStructure::TxOnly, IidUniform{}}).numeric_dims(x) == 1);
  CHECK(ConditionalDensity(ch.h, {PhaseStructure::TxOnly, Degenerate{0.2}}).numeric_dims(x) == 0);
  CHECK(ConditionalDensity(ch.h, {PhaseStructure::TxOnly, IidUniform{}}).numeric_dims(Eigen::VectorXcd::Zero(3)) == 0);
}

TEST_CASE("fixed phases give a Gaussian") {
  const ChannelRealization ch = generate_generic_matrix(2, 2, 8);
  const ConditionalDensity dens(ch.h, {PhaseStructure::PerPath, Degenerate{0.0}});
  Eigen::VectorXcd x(2), y(2);
  x << cd(1, 2), cd(-0.5, 0.1);
  y << cd(0.3, 0.3), cd(2, -1);
  Rng rng = make_rng(1);
  CHECK(dens.log_density(x, y, rng) == Catch::Approx(-(y - ch.h * x).squaredNorm() - 2.0 * std::log(kPi)));
}

TEST_CASE("exact conditional entropy") {
  SECTION("zero input is pure noise") {
    const ChannelRealization ch = generate_generic_matrix(2, 2, 9);
    const EntropyEstimate e =
        conditional_entropy_exact(ch.h, {PhaseStructure::PerPath, IidUniform{}}, Eigen::MatrixXcd::Zero(2, 20000), 3);
    CHECK(std::abs(e.value - 2.0 * std::log2(kPi * std::exp(1.0))) < 3.0 * e.std_err);
  }
  SECTION("large common rotation approaches a thin ring") {
    Eigen::MatrixXcd h(1, 1);
    h << cd(0.6, 0.8);
    const double beta = 1000.0;
    const EntropyEstimate e = conditional_entropy_exact(h, {PhaseStructure::Common, IidUniform{}},
                                                        Eigen::MatrixXcd::Constant(1, 20000, beta), 4);
    CHECK(std::abs(e.value - std::log2(2.0 * kPi * beta) - 0.5 * std::log2(kPi * std::exp(1.0))) < 0.01);
  }
  SECTION("determinism") {
    const ChannelRealization ch = generate_generic_matrix(2, 2, 10);
    const Eigen::MatrixXcd x = Eigen::MatrixXcd::Random(2, 300);
    const PhaseNoiseSpec spec{PhaseStructure::TxOnly, IidUniform{}};
    CHECK(conditional_entropy_exact(ch.h, spec, x, 5).value == conditional_entropy_exact(ch.h, spec, x, 5).value);
  }
}
