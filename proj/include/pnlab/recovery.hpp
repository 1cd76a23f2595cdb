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
#include <optional>
#include <string>

namespace pnlab {

struct RecoveryProblem {
  Eigen::MatrixXcd h;  // n_r x n_t
  Eigen::VectorXd s;   // observed |y_k|^2
};

enum class RecoveryStatus { recovered, ambiguous, failed };
std::string to_string(RecoveryStatus s);

struct RecoveryResult {
  Eigen::VectorXd amplitudes;
  Eigen::VectorXd rel_phases;  // theta_2 .. theta_{n_t}, theta_1 = 0
  double residual = 0.0;       // ||forward - s|| / ||s||
  int n_starts_used = 0;
  RecoveryStatus status = RecoveryStatus::failed;
};

/// s_k = |sum_j h_kj a_j exp(j theta_j)|^2 with theta_1 = 0; theta holds theta_2..theta_{n_t}.
Eigen::VectorXd forward_magnitudes(const Eigen::MatrixXcd& h, const Eigen::VectorXd& a, const Eigen::VectorXd& theta);

/// Adds independent uniform perturbations of relative size level to s.
Eigen::VectorXd perturb_observations(const Eigen::VectorXd& s, double level, std::uint64_t seed);

/// Multi-start Levenberg-Marquardt over (a = u^2, theta). Returns the best
/// local minimum; status is ambiguous when two starts reach residual < tol
/// with amplitude vectors separated by more than 1e-3 (relative).
RecoveryResult recover_amplitudes(const RecoveryProblem& prob, int max_starts = 50, double tol = 1e-10,
                                  std::uint64_t seed = 0);

struct Preimage {
  Eigen::VectorXd amplitudes;
  Eigen::VectorXd rel_phases;
  double residual = 0.0;
};

/// Searches for a solution with residual < 1e-8 whose amplitudes differ from
/// the reference by more than separation (relative).
std::optional<Preimage> find_second_preimage(const RecoveryProblem& prob, const Eigen::VectorXd& a,
                                             const Eigen::VectorXd& theta, double separation = 1e-3,
                                             int max_starts = 50, std::uint64_t seed = 0);

struct JacobianResult {
  Eigen::MatrixXd jacobian;  // d(|y_1|^2..|y_{n_r-1}|^2) / d(Re z, Im z)
  double abs_det = 1.0;      // 4^{m-1} |det Im{diag(conj t) B diag(z)}|
  double abs_det_direct = 1.0;
  double constant = 1.0;     // abs_det_direct / abs_det
  Eigen::MatrixXcd b_matrix;
  Eigen::VectorXcd b_vector;
};

/// n_r = 2 n_t - 1; basis rows {0..n_t-2, n_r-1}. y_hat holds the outputs on
/// the basis rows, z = y_hat(0..n_t-2) are the free coordinates.
JacobianResult analytic_jacobian(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& y_hat);

}  // namespace pnlab
