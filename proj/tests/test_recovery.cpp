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
#include <optional>
#include <random>
#include <vector>

#include "pnlab/channel.hpp"
#include "pnlab/errors.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/recovery.hpp"
#include "pnlab/rng.hpp"

using namespace pnlab;

namespace {

struct Truth {
  Eigen::VectorXd a, theta;
};

Truth draw_truth(Eigen::Index n_t, std::uint64_t seed) {
  Rng rng = make_rng(seed, 77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Truth t{Eigen::VectorXd(n_t), Eigen::VectorXd(n_t - 1)};
  for (Eigen::Index i = 0; i < n_t; ++i) t.a(i) = u(rng);
  for (Eigen::Index i = 0; i + 1 < n_t; ++i) t.theta(i) = 2.0 * kPi * u(rng);
  return t;
}

// Two-antenna lifting: with A_i = a_i^2 and c = a_1 a_2 e^{-j theta}, each
// squared magnitude is linear in (A_1, A_2, Re c, Im c). Three equations
// leave a line, which meets |c|^2 = A_1 A_2 in at most two points.
std::vector<Eigen::Vector2d> lifting_amplitudes(const Eigen::MatrixXcd& h, const Eigen::VectorXd& s) {
  Eigen::MatrixXd m(3, 4);
  for (int k = 0; k < 3; ++k) {
    const cd cross = h(k, 0) * std::conj(h(k, 1));
    m.row(k) << std::norm(h(k, 0)), std::norm(h(k, 1)), 2.0 * cross.real(), -2.0 * cross.imag();
  }
  const Eigen::Vector4d v0 = m.completeOrthogonalDecomposition().solve(s);
  const Eigen::Vector4d v1 = Eigen::FullPivLU<Eigen::MatrixXd>(m).kernel().col(0);
  // (v0 + t v1): c_re^2 + c_im^2 - A1 A2 = 0
  auto quad = [&](const Eigen::Vector4d& p, const Eigen::Vector4d& q) { return p(2) * q(2) + p(3) * q(3) - 0.5 * (p(0) * q(1) + p(1) * q(0)); };
  const double qa = quad(v1, v1), qb = 2.0 * quad(v0, v1), qc = quad(v0, v0);
  const double disc = qb * qb - 4.0 * qa * qc;
  std::vector<Eigen::Vector2d> out;
  if (disc < 0.0) return out;
  for (double sg : {-1.0, 1.0}) {
    const Eigen::Vector4d v = v0 + ((-qb + sg * std::sqrt(disc)) / (2.0 * qa)) * v1;
    if (v(0) >= -1e-9 && v(1) >= -1e-9) out.emplace_back(std::sqrt(std::max(v(0), 0.0)), std::sqrt(std::max(v(1), 0.0)));
  }
  return out;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("forward magnitudes") {
  const ChannelRealization ch = generate_generic_matrix(3, 1, 1);
  Eigen::VectorXd a(1);
  a << 0.7;
  const Eigen::VectorXd s = forward_magnitudes(ch.h, a, Eigen::VectorXd(0));
  for (int k = 0; k < 3; ++k) CHECK(s(k) == Catch::Approx(std::norm(ch.h(k, 0)) * 0.49).epsilon(1e-14));

  const ChannelRealization ch3 = generate_generic_matrix(4, 3, 2);
  CHECK(forward_magnitudes(ch3.h, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(2)).isZero());

  // a global phase rotation of every antenna, reference included, leaves s unchanged
  const Truth t = draw_truth(3, 3);
  Eigen::VectorXcd x(3);
  x(0) = t.a(0);
  for (int i = 1; i < 3; ++i) x(i) = std::polar(t.a(i), t.theta(i - 1));
  const Eigen::VectorXd direct = (ch3.h * (std::polar(1.0, 1.1) * x)).cwiseAbs2();
  CHECK((forward_magnitudes(ch3.h, t.a, t.theta) - direct).norm() < 1e-12);

  CHECK_THROWS_AS(forward_magnitudes(ch3.h, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(1)), std::invalid_argument);
  CHECK_THROWS_AS(forward_magnitudes(ch3.h, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(1)), std::invalid_argument);
}

TEST_CASE("single antenna closed form") {
  const ChannelRealization ch = generate_generic_matrix(4, 1, 4);
  Eigen::VectorXd a(1);
  a << 0.37;
  const RecoveryProblem p{ch.h, forward_magnitudes(ch.h, a, Eigen::VectorXd(0))};
  const RecoveryResult r = recover_amplitudes(p);
  CHECK(r.status == RecoveryStatus::recovered);
  CHECK(r.amplitudes(0) == Catch::Approx(0.37).epsilon(1e-12));
  CHECK(r.residual < 1e-12);
  CHECK_FALSE(find_second_preimage(p, a, Eigen::VectorXd(0)).has_value());
}

TEST_CASE("recovery with redundant observations") {
  int ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelRealization ch = generate_generic_matrix(5, 2, 100 + trial);
    const Truth t = draw_truth(2, trial);
    const RecoveryProblem p{ch.h, forward_magnitudes(ch.h, t.a, t.theta)};
    const RecoveryResult r = recover_amplitudes(p, 50, 1e-10, trial);
    if (r.status == RecoveryStatus::recovered && rel_err(r.amplitudes, t.a) < 1e-6) ++ok;
    // reference antenna swapped: same amplitudes, permuted
    Eigen::MatrixXcd hs = ch.h.rowwise().reverse();
    const RecoveryResult rs = recover_amplitudes({hs, p.s}, 50, 1e-10, trial);
    if (r.status == RecoveryStatus::recovered) {
      CHECK(rs.status == RecoveryStatus::recovered);
      CHECK(std::abs(rs.amplitudes(0) - r.amplitudes(1)) < 1e-6);
      CHECK(std::abs(rs.amplitudes(1) - r.amplitudes(0)) < 1e-6);
    }
  }
  CHECK(ok >= 19);
}

TEST_CASE("counting threshold with two antennas has a second real preimage") {
  int two_roots = 0, matched = 0, found = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const ChannelRealization ch = generate_generic_matrix(3, 2, 200 + trial);
    const Truth t = draw_truth(2, 50 + trial);
    const RecoveryProblem p{ch.h, forward_magnitudes(ch.h, t.a, t.theta)};
    const std::vector<Eigen::Vector2d> roots = lifting_amplitudes(ch.h, p.s);
    // the truth is always one of the lifted roots
    double best = INFINITY;
    for (const auto& rt : roots) best = std::min(best, rel_err(rt, t.a));
    CHECK(best < 1e-8);
    if (roots.size() < 2 || rel_err(roots[0], roots[1]) < 1e-3) continue;
    ++two_roots;
    const Eigen::Vector2d other = rel_err(roots[0], t.a) < rel_err(roots[1], t.a) ? roots[1] : roots[0];

    const RecoveryResult r = recover_amplitudes(p, 50, 1e-10, trial);
    CHECK(r.residual < 1e-8);
    if (std::min(rel_err(r.amplitudes, t.a), rel_err(r.amplitudes, other)) < 1e-6) ++matched;

    const std::optional<Preimage> second = find_second_preimage(p, t.a, t.theta, 1e-3, 50, trial);
    if (second) {
      ++found;
      CHECK(rel_err(second->amplitudes, other) < 1e-5);
      CHECK((forward_magnitudes(ch.h, second->amplitudes, second->rel_phases) - p.s).norm() / p.s.norm() < 1e-8);
    }
  }
  CHECK(two_roots >= 25);
  CHECK(matched == two_roots);
  CHECK(found >= two_roots - 2);
}

TEST_CASE("below the counting threshold the amplitudes are ambiguous") {
  int found = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelRealization ch = generate_generic_matrix(2, 2, 300 + trial);
    const Truth t = draw_truth(2, 80 + trial);
    const RecoveryProblem p{ch.h, forward_magnitudes(ch.h, t.a, t.theta)};
    const std::optional<Preimage> second = find_second_preimage(p, t.a, t.theta, 1e-3, 50, trial);
    if (second) {
      ++found;
      CHECK(second->residual < 1e-8);
      CHECK(rel_err(second->amplitudes, t.a) > 1e-3);
    }
  }
  CHECK(found >= 16);
}

TEST_CASE("observation perturbation") {
  Eigen::VectorXd s(3);
  s << 1.0, 2.0, 3.0;
  CHECK(perturb_observations(s, 0.0, 1) == s);
  const Eigen::VectorXd p = perturb_observations(s, 0.01, 1);
  CHECK((p - s).cwiseAbs().maxCoeff() > 0.0);
  CHECK(((p - s).array().abs() <= 0.01 * s.array() + 1e-15).all());
  CHECK((p.array() >= 0.0).all());
  CHECK(perturb_observations(s, 0.01, 1) == p);
}

TEST_CASE("determinant of the magnitude map") {
  for (int m : {2, 3}) {
    for (int trial = 0; trial < 25; ++trial) {
      const ChannelRealization ch = generate_generic_matrix(2 * m - 1, m, 400 + 10 * m + trial);
      Rng rng = make_rng(trial, m);
      Eigen::VectorXcd yh(m);
      for (int i = 0; i < m; ++i) yh(i) = complex_normal(rng);
      const JacobianResult jr = analytic_jacobian(ch.h, yh);
      const int q = m - 1;
      REQUIRE(jr.jacobian.rows() == 2 * q);

      // finite differences through the input vector that realizes the basis values
      Eigen::MatrixXcd basis(m, m);
      for (int i = 0; i < q; ++i) basis.row(i) = ch.h.row(i);
      basis.row(q) = ch.h.row(2 * m - 2);
      auto outputs = [&](const Eigen::VectorXd& re, const Eigen::VectorXd& im) {
        Eigen::VectorXcd target(m);
        for (int i = 0; i < q; ++i) target(i) = cd(re(i), im(i));
        target(q) = yh(q);
        const Eigen::VectorXcd y = ch.h * basis.fullPivLu().solve(target);
        return Eigen::VectorXd(y.head(2 * m - 2).cwiseAbs2());
      };
      const Eigen::VectorXd re0 = yh.head(q).real(), im0 = yh.head(q).imag();
      Eigen::MatrixXd fd(2 * q, 2 * q);
      const double step = 1e-6;
      for (int l = 0; l < 2 * q; ++l) {
        Eigen::VectorXd rp = re0, rm = re0, ip = im0, imn = im0;
        if (l < q) rp(l) += step, rm(l) -= step;
        else ip(l - q) += step, imn(l - q) -= step;
        fd.col(l) = (outputs(rp, ip) - outputs(rm, imn)) / (2.0 * step);
      }
      const double scale = fd.cwiseAbs().maxCoeff();
      CHECK((jr.jacobian - fd).cwiseAbs().maxCoeff() <= 1e-6 * scale);
      CHECK(jr.abs_det > 0.0);
      CHECK(std::abs(jr.abs_det - std::abs(fd.determinant())) <= 1e-6 * jr.abs_det);
      CHECK(jr.constant == Catch::Approx(1.0).epsilon(1e-9));
    }
  }
  const ChannelRealization one = generate_generic_matrix(1, 1, 5);
  const JacobianResult e = analytic_jacobian(one.h, Eigen::VectorXcd::Ones(1));
  CHECK(e.jacobian.size() == 0);
  CHECK(e.abs_det == 1.0);

  Eigen::MatrixXcd bad = generate_generic_matrix(3, 2, 6).h;
  bad.row(2) = 2.0 * bad.row(0);
  CHECK_THROWS_AS(analytic_jacobian(bad, Eigen::VectorXcd::Ones(2)), RankDeficiencyError);
  CHECK_THROWS_AS(analytic_jacobian(generate_generic_matrix(4, 2, 7).h, Eigen::VectorXcd::Ones(2)), std::invalid_argument);
}
