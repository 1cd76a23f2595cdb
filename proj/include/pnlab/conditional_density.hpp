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

#include "pnlab/channel.hpp"
#include "pnlab/entropy.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

struct MarginalOptions {
  int n_importance = 32;
  double defensive = 0.1;  // weight of the uniform proposal component
  double inflate = 1.5;    // std inflation of the Laplace components
  double max_std = 1.0;    // rad; broader Laplace components are discarded
};

/// Exact log p(y | x) for y = (H o exp(j Theta)) x + z with uniform phase
/// marginals. One phase per independent group is integrated in closed form
/// through log I0; the remaining relative phases of the active inputs are
/// integrated by importance sampling around the modes of the integrand.
class ConditionalDensity {
 public:
  ConditionalDensity(Eigen::MatrixXcd h, PhaseNoiseSpec spec, MarginalOptions opt = {});

  /// Natural-log density. path_phases (n_r x n_t), when given, seeds the
  /// mode search with the phases that generated y.
  double log_density(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y, Rng& rng,
                     const Eigen::MatrixXd* path_phases = nullptr) const;

  /// Number of relative phases integrated numerically for input x.
  int numeric_dims(const Eigen::VectorXcd& x) const;

 private:
  Eigen::MatrixXcd h_;
  PhaseNoiseSpec spec_;
  MarginalOptions opt_;
};

/// h(Y | X) in bits for X given by the columns of x: draws Y through the
/// channel and averages -log2 p(y | x).
EntropyEstimate conditional_entropy_exact(const Eigen::MatrixXcd& h, const PhaseNoiseSpec& spec,
                                          const Eigen::MatrixXcd& x, std::uint64_t seed, MarginalOptions opt = {});

}  // namespace pnlab
