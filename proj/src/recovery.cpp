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

#include "pnlab/recovery.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "pnlab/errors.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/parallel.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

using cd = std::complex<double>;

std::string to_string(RecoveryStatus s) {
  switch (s) {
    case RecoveryStatus::recovered: return "recovered";
    case RecoveryStatus::ambiguous: return "ambiguous";
    case RecoveryStatus::failed: return "failed";
  }
  return "failed";
}

Eigen::VectorXd forward_magnitudes(const Eigen::MatrixXcd& h, const Eigen::VectorXd& a, const Eigen::VectorXd& theta) {
  if (a.size() != h.cols() || theta.size() != std::max<Eigen::Index>(h.cols() - 1, 0))
    throw std::invalid_argument("forward_magnitudes: dimension mismatch");
  Eigen::VectorXcd v(h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j) v(j) = std::polar(a(j), j == 0 ? 0.0 : theta(j - 1));
  return (h * v).cwiseAbs2();
}

Eigen::VectorXd perturb_observations(const Eigen::VectorXd& s, double level, std::uint64_t seed) {
  Rng rng = make_rng(seed, 91);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd out = s;
  for (Eigen::Index k = 0; k < s.size(); ++k) out(k) = std::max(0.0, s(k) * (1.0 + level * u(rng)));
  return out;
}

namespace {

struct Fit {
  Eigen::VectorXd a, theta;
  double residual = INFINITY;
};

void unpack(const Eigen::VectorXd& p, Eigen::Index n_t, Eigen::VectorXd& a, Eigen::VectorXd& theta) {
  a = p.head(n_t).cwiseAbs2();
  theta = p.tail(n_t - 1);
}

void residuals(const RecoveryProblem& prob, const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
  const Eigen::Index n_t = prob.h.cols(), n_r = prob.h.rows();
  Eigen::VectorXcd e(n_t);
  for (Eigen::Index j = 0; j < n_t; ++j) e(j) = std::polar(1.0, j == 0 ? 0.0 : p(n_t + j - 1));
  Eigen::VectorXcd v(n_r);
  for (Eigen::Index k = 0; k < n_r; ++k) {
    cd acc = 0.0;
    for (Eigen::Index j = 0; j < n_t; ++j) acc += prob.h(k, j) * p(j) * p(j) * e(j);
    v(k) = acc;
  }
  r = v.cwiseAbs2() - prob.s;
  if (!jac) return;
  jac->resize(n_r, 2 * n_t - 1);
  for (Eigen::Index k = 0; k < n_r; ++k) {
    for (Eigen::Index j = 0; j < n_t; ++j) {
      const cd term = std::conj(v(k)) * prob.h(k, j) * e(j);
      (*jac)(k, j) = 2.0 * term.real() * 2.0 * p(j);
      if (j > 0) (*jac)(k, n_t + j - 1) = -2.0 * (term * (p(j) * p(j))).imag();
    }
  }
}

Fit levenberg_marquardt(const RecoveryProblem& prob, Eigen::VectorXd p, double tol) {
  const Eigen::Index n_t = prob.h.cols();
  const double scale = std::max(prob.s.norm(), 1e-300);
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residuals(prob, p, r, &jac);
  double cost = r.squaredNorm();
  double lambda = -1.0;
  for (int iter = 0; iter < 500; ++iter) {
    if (std::sqrt(cost) / scale < 1e-3 * tol) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    if (lambda < 0.0) lambda = 1e-3 * std::max(jtj.diagonal().maxCoeff(), 1e-12);
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd pn = p + step;
      Eigen::VectorXd rn;
      residuals(prob, pn, rn, nullptr);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        p = pn;
        accepted = true;
        const bool tiny = step.norm() < 1e-15 * (1.0 + p.norm());
        cost = cn;
        lambda = std::max(lambda / 3.0, 1e-15);
        residuals(prob, p, r, &jac);
        if (tiny) iter = 1 << 20;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  Fit f;
  unpack(p, n_t, f.a, f.theta);
  for (Eigen::Index j = 0; j < f.theta.size(); ++j) {
    f.theta(j) = std::fmod(f.theta(j), 2.0 * kPi);
    if (f.theta(j) < 0.0) f.theta(j) += 2.0 * kPi;
  }
  f.residual = std::sqrt(cost) / scale;
  return f;
}

std::vector<Fit> multistart(const RecoveryProblem& prob, int starts, double tol, std::uint64_t seed) {
  const Eigen::Index n_t = prob.h.cols();
  const double mean_h2 = prob.h.cwiseAbs2().mean();
  const double a_max = 3.0 * std::sqrt(std::max(prob.s.mean(), 1e-300) / (static_cast<double>(n_t) * mean_h2));
  std::vector<Fit> fits(static_cast<std::size_t>(starts));
  parallel_for(static_cast<std::size_t>(starts), [&](std::size_t i) {
    Rng rng = make_rng(seed, 3000 + i);
    std::uniform_real_distribution<double> ua(0.0, a_max), ut(0.0, 2.0 * kPi);
    Eigen::VectorXd p(2 * n_t - 1);
    for (Eigen::Index j = 0; j < n_t; ++j) p(j) = std::sqrt(ua(rng));
    for (Eigen::Index j = 0; j + 1 < n_t; ++j) p(n_t + j) = ut(rng);
    fits[i] = levenberg_marquardt(prob, p, tol);
  });
  return fits;
}

double rel_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

void check_problem(const RecoveryProblem& prob) {
  if (prob.h.rows() < 1 || prob.h.cols() < 1) throw std::invalid_argument("recovery: empty channel");
  if (prob.s.size() != prob.h.rows()) throw std::invalid_argument("recovery: s must have n_r entries");
  if ((prob.s.array() < 0.0).any()) throw std::domain_error("recovery: observations must be nonnegative");
}

}  // namespace

RecoveryResult recover_amplitudes(const RecoveryProblem& prob, int max_starts, double tol, std::uint64_t seed) {
  check_problem(prob);
  if (max_starts < 1) throw std::invalid_argument("recover_amplitudes: max_starts must be >= 1");
  const Eigen::Index n_t = prob.h.cols();
  RecoveryResult res;
  if (n_t == 1) {
    const Eigen::VectorXd g = prob.h.col(0).cwiseAbs2();
    const double a2 = g.dot(prob.s) / g.squaredNorm();
    res.amplitudes = Eigen::VectorXd::Constant(1, std::sqrt(std::max(a2, 0.0)));
    res.rel_phases.resize(0);
    res.residual = (g * a2 - prob.s).norm() / std::max(prob.s.norm(), 1e-300);
    res.n_starts_used = 1;
    res.status = res.residual < tol ? RecoveryStatus::recovered : RecoveryStatus::failed;
    return res;
  }
  const std::vector<Fit> fits = multistart(prob, max_starts, tol, seed);
  std::size_t best = 0;
  for (std::size_t i = 1; i < fits.size(); ++i)
    if (fits[i].residual < fits[best].residual) best = i;
  res.amplitudes = fits[best].a;
  res.rel_phases = fits[best].theta;
  res.residual = fits[best].residual;
  res.n_starts_used = static_cast<int>(best) + 1;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i].residual < tol) {
      res.n_starts_used = static_cast<int>(i) + 1;
      break;
    }
  }
  if (res.residual >= tol) {
    res.status = RecoveryStatus::failed;
    return res;
  }
  res.status = RecoveryStatus::recovered;
  for (const Fit& f : fits) {
    if (f.residual < tol && rel_distance(f.a, res.amplitudes) > 1e-3) {
      res.status = RecoveryStatus::ambiguous;
      break;
    }
  }
  return res;
}

std::optional<Preimage> find_second_preimage(const RecoveryProblem& prob, const Eigen::VectorXd& a,
                                             const Eigen::VectorXd& theta, double separation, int max_starts,
                                             std::uint64_t seed) {
  check_problem(prob);
  if (a.size() != prob.h.cols() || theta.size() != prob.h.cols() - 1)
    throw std::invalid_argument("find_second_preimage: reference dimension mismatch");
  if (prob.h.cols() == 1) return std::nullopt;
  const std::vector<Fit> fits = multistart(prob, max_starts, 1e-10, seed);
  for (const Fit& f : fits)
    if (f.residual < 1e-8 && rel_distance(f.a, a) > separation) return Preimage{f.a, f.theta, f.residual};
  return std::nullopt;
}

JacobianResult analytic_jacobian(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& y_hat) {
  const Eigen::Index m = h.cols();
  const Eigen::Index n = h.rows();
  if (n != 2 * m - 1) throw std::invalid_argument("analytic_jacobian: requires n_r = 2 n_t - 1");
  if (y_hat.size() != m) throw std::invalid_argument("analytic_jacobian: y_hat must have n_t entries");
  JacobianResult out;
  const Eigen::Index q = m - 1;
  if (q == 0) {
    out.jacobian.resize(0, 0);
    out.b_matrix.resize(0, 0);
    out.b_vector.resize(0);
    return out;
  }
  Eigen::MatrixXcd basis(m, m);
  for (Eigen::Index i = 0; i < q; ++i) basis.row(i) = h.row(i);
  basis.row(q) = h.row(n - 1);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(basis);
  if (!lu.isInvertible()) throw RankDeficiencyError("analytic_jacobian: basis rows are linearly dependent");
  // rows q..n-2 of H expressed in the basis rows: C = H_tail * basis^{-1}
  const Eigen::MatrixXcd tail = h.middleRows(q, q);
  const Eigen::MatrixXcd c = tail * lu.inverse();
  out.b_matrix = c.leftCols(q);
  out.b_vector = c.col(q);
  const Eigen::VectorXcd z = y_hat.head(q);
  const Eigen::VectorXcd t = out.b_matrix * z + out.b_vector * y_hat(q);

  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * q, 2 * q);
  for (Eigen::Index i = 0; i < q; ++i) {
    j(i, i) = 2.0 * z(i).real();
    j(i, q + i) = 2.0 * z(i).imag();
  }
  Eigen::MatrixXd im(q, q);
  for (Eigen::Index r = 0; r < q; ++r) {
    for (Eigen::Index l = 0; l < q; ++l) {
      const cd tb = std::conj(t(r)) * out.b_matrix(r, l);
      j(q + r, l) = 2.0 * tb.real();
      j(q + r, q + l) = -2.0 * tb.imag();
      im(r, l) = (tb * z(l)).imag();
    }
  }
  out.jacobian = j;
  out.abs_det = std::pow(4.0, static_cast<double>(q)) * std::abs(im.determinant());
  out.abs_det_direct = std::abs(j.determinant());
  out.constant = out.abs_det > 0.0 ? out.abs_det_direct / out.abs_det : NAN;
  return out;
}

}  // namespace pnlab
