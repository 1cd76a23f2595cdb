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

namespace pnlab {

struct AuxGammaParams {
  Eigen::VectorXd alphas;  // each in (0, 1]
  double mu = 1.0;

  void validate() const;
};

enum class AuxFamily { ModelA, Independent };

/// Log-density (nats) of the ordered multivariate Gamma law at 0 < s_1 < ... < s_n.
double mv_gamma_log_density(const Eigen::VectorXd& s, const AuxGammaParams& p);

/// Log-density (nats) of the circularly symmetric lifting of the multivariate
/// Gamma law to C^n: ordered squared magnitudes, 1/n! for the ordering and
/// 1/pi per component for the phase.
double aux_logq_modelA(const Eigen::VectorXcd& w, const AuxGammaParams& p);

/// Log-density (nats) of independent components with Gamma(alpha_i, mu)
/// squared magnitudes and uniform phases.
double aux_logq_independent(const Eigen::VectorXcd& w, const AuxGammaParams& p);

/// Exact samples, one per column (n x count).
Eigen::MatrixXcd sample_aux(const AuxGammaParams& p, AuxFamily which, Eigen::Index count, std::uint64_t seed);

}  // namespace pnlab
