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
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace pnlab {

using cd = std::complex<double>;

struct ChannelRealization {
  Eigen::MatrixXcd h;  // n_r x n_t
  std::uint64_t seed = 0;
  Eigen::Index n_r() const { return h.rows(); }
  Eigen::Index n_t() const { return h.cols(); }
};

enum class PhaseStructure { PerPath, TxRx, TxOnly, RxOnly, Common, None };

struct IidUniform {};
struct WrappedWiener {
  double sigma2 = 0.1;  // rad^2 per step
};
struct Degenerate {
  double value = 0.0;  // rad
};
using PhaseProcess = std::variant<IidUniform, WrappedWiener, Degenerate>;

struct PhaseNoiseSpec {
  PhaseStructure structure = PhaseStructure::PerPath;
  PhaseProcess process = IidUniform{};
};

std::string to_string(PhaseStructure s);
PhaseStructure parse_phase_structure(const std::string& s);

/// Raw phase streams, one row per stream and one column per time step.
/// Stream layout: PerPath row-major over (i, k) -> i * n_t + k; TxRx transmit
/// streams first, then receive; TxOnly n_t; RxOnly n_r; Common 1; None 0.
struct PhaseDraws {
  PhaseStructure structure = PhaseStructure::None;
  Eigen::Index n_r = 0;
  Eigen::Index n_t = 0;
  Eigen::MatrixXd streams;

  /// Per-path phase matrix Theta_t (n_r x n_t), reduced to [0, 2pi).
  Eigen::MatrixXd path_phases(Eigen::Index t) const;
  Eigen::Index steps() const { return streams.cols(); }
};

Eigen::Index stream_count(PhaseStructure s, Eigen::Index n_r, Eigen::Index n_t);

struct SampleBatch {
  Eigen::MatrixXcd x;  // n_t x N
  Eigen::MatrixXcd y;  // n_r x N
  Eigen::MatrixXcd z;  // n_r x N
  PhaseDraws phases;
  std::uint64_t seed = 0;
  double power = 0.0;
};

/// i.i.d. CN(0,1) entries, re-drawn until every square minor of size
/// min(n_r, n_t) has condition number below 1e12.
ChannelRealization generate_generic_matrix(Eigen::Index n_r, Eigen::Index n_t, std::uint64_t seed);

PhaseDraws sample_phase_matrix(const PhaseNoiseSpec& spec, Eigen::Index n_r, Eigen::Index n_t, Eigen::Index n,
                               std::uint64_t seed);

/// y_t = (H o exp(j Theta_t)) x_t + z_t with z_t ~ CN(0, I). When power is
/// given, the empirical mean of |x_t|^2 must not exceed 1.05 * power.
SampleBatch apply_channel(const ChannelRealization& ch, const PhaseNoiseSpec& spec, const Eigen::MatrixXcd& x,
                          std::uint64_t seed, std::optional<double> power = std::nullopt);

/// diag(h_{., u})^{-1} H; u is 0-based.
Eigen::MatrixXcd canonical_transform(const ChannelRealization& ch, Eigen::Index u);
Eigen::MatrixXcd canonical_transform(const Eigen::MatrixXcd& h, Eigen::Index u);

/// argmax |x_i|, lowest index on ties.
Eigen::Index strongest_index(const Eigen::VectorXcd& x);

/// Debug export: t, then re/im of every x and y component.
void write_batch_csv(const SampleBatch& batch, const std::string& path);

}  // namespace pnlab
