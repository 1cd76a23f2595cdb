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

#include "pnlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pnlab/errors.hpp"
#include "pnlab/kdtree.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/parallel.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

namespace {

struct Scheme {
  int k_max = 0;
  std::vector<double> weights;  // index j-1
};

Scheme make_scheme(Eigen::Index d, const KnnOptions& opt) {
  Scheme s;
  const int L = d >= 4 ? static_cast<int>(d / 4) + 1 : 0;
  if (!opt.weighted || L == 0) {
    s.k_max = opt.k;
    s.weights.assign(opt.k, 0.0);
    s.weights[opt.k - 1] = 1.0;
    return s;
  }
  const int K = 6 * opt.k;
  s.k_max = K;
  Eigen::MatrixXd a(L + 1, K);
  for (int j = 1; j <= K; ++j) {
    a(0, j - 1) = 1.0;
    for (int l = 1; l <= L; ++l)
      a(l, j - 1) = std::exp(std::lgamma(j + 2.0 * l / d) - std::lgamma(static_cast<double>(j)));
  }
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(L + 1);
  e1(0) = 1.0;
  const Eigen::VectorXd w = a.transpose() * (a * a.transpose()).ldlt().solve(e1);
  s.weights.assign(w.data(), w.data() + K);
  return s;
}

double log_unit_ball(Eigen::Index d) { return 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d + 1.0); }

/// Weighted KL estimate in nats for the columns of pts.
double kl_nats(Eigen::MatrixXd pts, const Scheme& sc, std::uint64_t jitter_seed) {
  const Eigen::Index d = pts.rows();
  const Eigen::Index n = pts.cols();
  if (n <= sc.k_max) throw std::invalid_argument("knn_entropy: too few samples for k");
  for (int attempt = 0; attempt < 4; ++attempt) {
    KdTree tree(pts);
    const std::size_t chunks = 64;
    std::vector<std::vector<double>> sums(chunks, std::vector<double>(sc.k_max, 0.0));
    std::vector<std::vector<Eigen::Index>> dup(chunks);
    parallel_for(chunks, [&](std::size_t c) {
      std::vector<double> dist(sc.k_max);
      const Eigen::Index lo = n * static_cast<Eigen::Index>(c) / static_cast<Eigen::Index>(chunks);
      const Eigen::Index hi = n * static_cast<Eigen::Index>(c + 1) / static_cast<Eigen::Index>(chunks);
      for (Eigen::Index i = lo; i < hi; ++i) {
        tree.knn_self(i, sc.k_max, dist.data());
        if (dist[0] <= 0.0) {
          dup[c].push_back(i);
          continue;
        }
        for (int j = 0; j < sc.k_max; ++j) sums[c][j] += std::log(dist[j]);
      }
    });
    std::vector<Eigen::Index> dups;
    for (const auto& v : dup) dups.insert(dups.end(), v.begin(), v.end());
    if (dups.empty()) {
      double h = 0.0;
      for (int j = 1; j <= sc.k_max; ++j) {
        double s = 0.0;
        for (const auto& cs : sums) s += cs[j - 1];
        const double hj = digamma(static_cast<double>(n)) - digamma(static_cast<double>(j)) + log_unit_ball(d) +
                          static_cast<double>(d) * s / static_cast<double>(n);
        h += sc.weights[j - 1] * hj;
      }
      return h;
    }
    Rng rng = make_rng(jitter_seed, static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i : dups)
      for (Eigen::Index r = 0; r < d; ++r) pts(r, i) += 1e-12 * std::max(1.0, std::abs(pts(r, i))) * u(rng);
  }
  throw EstimationError("knn_entropy: duplicate points persist after jitter", NAN);
}

}  // namespace

EntropyEstimate knn_entropy(const Eigen::MatrixXd& samples, int k) {
  KnnOptions o;
  o.k = k;
  return knn_entropy(samples, o);
}

EntropyEstimate knn_entropy(const Eigen::MatrixXd& samples, const KnnOptions& opt) {
  const Eigen::Index d = samples.rows();
  const Eigen::Index n = samples.cols();
  if (opt.k < 1) throw std::invalid_argument("knn_entropy: k must be >= 1");
  if (n < 100) throw std::invalid_argument("knn_entropy: need at least 100 samples");
  if (d < 1) throw std::invalid_argument("knn_entropy: zero-dimensional samples");
  if (!samples.allFinite()) throw std::invalid_argument("knn_entropy: non-finite sample");

  const Eigen::VectorXd mean = samples.rowwise().mean();
  Eigen::MatrixXd centred = samples.colwise() - mean;
  const Eigen::MatrixXd cov = centred * centred.transpose() / static_cast<double>(n - 1);
  const double max_var = cov.diagonal().maxCoeff();
  for (Eigen::Index j = 0; j < d; ++j)
    if (!(cov(j, j) > 1e-24 * max_var) || !(max_var > 0.0))
      throw RankDeficiencyError("knn_entropy: zero-variance coordinate");

  double log_jac = 0.0;
  if (opt.whiten) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw RankDeficiencyError("knn_entropy: singular sample covariance");
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!(l(j, j) * l(j, j) > 1e-12 * cov(j, j))) throw RankDeficiencyError("knn_entropy: singular sample covariance");
      log_jac += std::log(l(j, j));
    }
    llt.matrixL().solveInPlace(centred);
  }

  const Scheme sc = make_scheme(d, opt);
  const double full = kl_nats(centred, sc, 0x5eedULL) + log_jac;

  int folds = std::max(2, opt.folds);
  while (folds > 2 && n / folds <= 4 * sc.k_max) --folds;
  std::vector<double> fv(folds);
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index lo = n * f / folds;
    const Eigen::Index hi = n * (f + 1) / folds;
    fv[f] = kl_nats(centred.middleCols(lo, hi - lo), sc, 0x5eedULL + 1 + f) + log_jac;
  }
  double m = 0.0;
  for (double v : fv) m += v;
  m /= folds;
  double var = 0.0;
  for (double v : fv) var += (v - m) * (v - m);
  var /= (folds - 1);

  EntropyEstimate e;
  e.value = nats_to_bits(full);
  e.std_err = nats_to_bits(std::sqrt(var / folds));
  e.k = opt.k;
  e.n = n;
  e.dim = static_cast<double>(d);
  return e;
}

Eigen::MatrixXd to_real(const Eigen::MatrixXcd& z) {
  Eigen::MatrixXd r(2 * z.rows(), z.cols());
  r.topRows(z.rows()) = z.real();
  r.bottomRows(z.rows()) = z.imag();
  return r;
}

EntropyEstimate circular_entropy(const Eigen::MatrixXcd& y, const KnnOptions& opt) {
  const Eigen::Index d = y.rows();
  const Eigen::Index n = y.cols();
  const Eigen::MatrixXd mag = y.cwiseAbs();
  if ((mag.array() <= 0.0).any()) throw std::domain_error("circular_entropy: zero magnitude sample");
  EntropyEstimate e = knn_entropy(mag, opt);
  const Eigen::VectorXd logs = (mag.array().log() / kLn2).matrix().colwise().sum().transpose();
  const double lm = logs.mean();
  const double lvar = (logs.array() - lm).square().sum() / static_cast<double>(n - 1);
  e.value += lm + static_cast<double>(d) * std::log2(2.0 * kPi);
  e.std_err = std::sqrt(e.std_err * e.std_err + lvar / static_cast<double>(n));
  e.dim = 2.0 * static_cast<double>(d);
  return e;
}

EntropyEstimate conditional_entropy(const ConditionalSampler& y_sampler, const Eigen::MatrixXcd& x_samples,
                                    Eigen::Index n_inner, const KnnOptions& opt, std::uint64_t seed) {
  const Eigen::Index n_outer = x_samples.cols();
  if (n_outer < 50) throw std::invalid_argument("conditional_entropy: need at least 50 outer draws");
  std::vector<EntropyEstimate> parts(static_cast<std::size_t>(n_outer));
  parallel_for(static_cast<std::size_t>(n_outer), [&](std::size_t i) {
    const Eigen::MatrixXd ys = y_sampler(x_samples.col(static_cast<Eigen::Index>(i)), n_inner, derive_seed(seed, i));
    parts[i] = knn_entropy(ys, opt);
  });
  double m = 0.0;
  for (const auto& p : parts) m += p.value;
  m /= static_cast<double>(n_outer);
  double var = 0.0;
  for (const auto& p : parts) var += (p.value - m) * (p.value - m);
  var /= static_cast<double>(n_outer - 1);
  EntropyEstimate e;
  e.value = m;
  // spread over outer draws already contains the inner estimation noise
  e.std_err = std::sqrt(var / static_cast<double>(n_outer));
  e.k = opt.k;
  e.n = n_inner;
  e.dim = parts.front().dim;
  return e;
}

MiEstimate mutual_information(const JointSampler& joint, const ConditionalSampler& conditional, const MiConfig& cfg) {
  auto [x, y] = joint(cfg.n_joint, derive_seed(cfg.seed, 11));
  MiEstimate r;
  r.h_y = knn_entropy(y, cfg.knn);
  const Eigen::Index outer = std::min(cfg.n_outer, x.cols());
  r.h_y_given_x = conditional_entropy(conditional, x.leftCols(outer), cfg.n_inner, cfg.knn, derive_seed(cfg.seed, 12));
  r.mi.value = r.h_y.value - r.h_y_given_x.value;
  r.mi.std_err = std::hypot(r.h_y.std_err, r.h_y_given_x.std_err);
  r.mi.k = cfg.knn.k;
  r.mi.n = cfg.n_joint;
  r.mi.dim = r.h_y.dim;
  return r;
}

}  // namespace pnlab
