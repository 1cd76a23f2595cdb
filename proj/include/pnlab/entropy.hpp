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

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

namespace pnlab {

struct EntropyEstimate {
  double value = 0.0;    // bits
  double std_err = 0.0;  // bits
  int k = 0;
  Eigen::Index n = 0;
  double dim = 0.0;
};

struct KnnOptions {
  int k = 4;
  int folds = 10;
  bool whiten = true;
  /// Bias-cancelling weights over neighbours 1..6k in four or more dimensions.
  bool weighted = true;
};

/// Kozachenko-Leonenko entropy (bits) of the columns of a d x n matrix.
/// Throws RankDeficiencyError for a zero-variance coordinate.
EntropyEstimate knn_entropy(const Eigen::MatrixXd& samples, const KnnOptions& opt = {});
EntropyEstimate knn_entropy(const Eigen::MatrixXd& samples, int k);

/// Stacks real parts over imaginary parts: (2n) x N.
Eigen::MatrixXd to_real(const Eigen::MatrixXcd& z);

/// h(Y) for complex samples whose components carry independent uniform
/// phases: h(|Y|) + sum_i E log2|Y_i| + n log2(2 pi).
EntropyEstimate circular_entropy(const Eigen::MatrixXcd& y, const KnnOptions& opt = {});

/// Draws n real samples (columns) of Y given X = x.
using ConditionalSampler = std::function<Eigen::MatrixXd(const Eigen::VectorXcd& x, Eigen::Index n, std::uint64_t seed)>;
/// Draws n joint samples: (X as n_t x n, Y in real coordinates).
using JointSampler = std::function<std::pair<Eigen::MatrixXcd, Eigen::MatrixXd>(Eigen::Index n, std::uint64_t seed)>;

/// E_x[h(Y | X = x)] by nested kNN; needs at least 50 outer draws.
EntropyEstimate conditional_entropy(const ConditionalSampler& y_sampler, const Eigen::MatrixXcd& x_samples,
                                    Eigen::Index n_inner, const KnnOptions& opt = {}, std::uint64_t seed = 0);

struct MiConfig {
  Eigen::Index n_joint = 20000;
  Eigen::Index n_outer = 100;
  Eigen::Index n_inner = 2000;
  KnnOptions knn;
  std::uint64_t seed = 0;
};

struct MiEstimate {
  EntropyEstimate mi;
  EntropyEstimate h_y;
  EntropyEstimate h_y_given_x;
};

/// I(X;Y) = h(Y) - h(Y|X) with both terms by kNN.
MiEstimate mutual_information(const JointSampler& joint, const ConditionalSampler& conditional, const MiConfig& cfg);

}  // namespace pnlab
