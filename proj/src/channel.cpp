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

#include "pnlab/channel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <vector>

#include "pnlab/errors.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

std::string to_string(PhaseStructure s) {
  switch (s) {
    case PhaseStructure::PerPath: return "PerPath";
    case PhaseStructure::TxRx: return "TxRx";
    case PhaseStructure::TxOnly: return "TxOnly";
    case PhaseStructure::RxOnly: return "RxOnly";
    case PhaseStructure::Common: return "Common";
    case PhaseStructure::None: return "None";
  }
  return "None";
}

PhaseStructure parse_phase_structure(const std::string& s) {
  for (auto v : {PhaseStructure::PerPath, PhaseStructure::TxRx, PhaseStructure::TxOnly, PhaseStructure::RxOnly,
                 PhaseStructure::Common, PhaseStructure::None})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown phase structure '" + s + "' (allowed: PerPath, TxRx, TxOnly, RxOnly, Common, None)");
}

Eigen::Index stream_count(PhaseStructure s, Eigen::Index n_r, Eigen::Index n_t) {
  switch (s) {
    case PhaseStructure::PerPath: return n_r * n_t;
    case PhaseStructure::TxRx: return n_t + n_r;
    case PhaseStructure::TxOnly: return n_t;
    case PhaseStructure::RxOnly: return n_r;
    case PhaseStructure::Common: return 1;
    case PhaseStructure::None: return 0;
  }
  return 0;
}

static double wrap(double v) {
  double r = std::fmod(v, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

Eigen::MatrixXd PhaseDraws::path_phases(Eigen::Index t) const {
  Eigen::MatrixXd th = Eigen::MatrixXd::Zero(n_r, n_t);
  for (Eigen::Index i = 0; i < n_r; ++i) {
    for (Eigen::Index k = 0; k < n_t; ++k) {
      double v = 0.0;
      switch (structure) {
        case PhaseStructure::PerPath: v = streams(i * n_t + k, t); break;
        case PhaseStructure::TxRx: v = streams(k, t) + streams(n_t + i, t); break;
        case PhaseStructure::TxOnly: v = streams(k, t); break;
        case PhaseStructure::RxOnly: v = streams(i, t); break;
        case PhaseStructure::Common: v = streams(0, t); break;
        case PhaseStructure::None: v = 0.0; break;
      }
      th(i, k) = wrap(v);
    }
  }
  return th;
}

static double max_minor_condition(const Eigen::MatrixXcd& h) {
  const Eigen::Index m = std::min(h.rows(), h.cols());
  const bool tall = h.rows() >= h.cols();
  const Eigen::Index big = tall ? h.rows() : h.cols();
  std::vector<int> pick(m);
  for (Eigen::Index i = 0; i < m; ++i) pick[i] = static_cast<int>(i);
  double worst = 0.0;
  while (true) {
    Eigen::MatrixXcd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = tall ? h(pick[a], b) : h(a, pick[b]);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sub);
    const auto& sv = svd.singularValues();
    const double c = sv(m - 1) > 0.0 ? sv(0) / sv(m - 1) : INFINITY;
    worst = std::max(worst, c);
    // next combination of m out of big
    Eigen::Index i = m - 1;
    while (i >= 0 && pick[i] == big - m + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (Eigen::Index j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
  }
  return worst;
}

ChannelRealization generate_generic_matrix(Eigen::Index n_r, Eigen::Index n_t, std::uint64_t seed) {
  if (n_r < 1 || n_t < 1) throw std::invalid_argument("generate_generic_matrix: dimensions must be >= 1");
  constexpr int kRetries = 64;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    Eigen::MatrixXcd h(n_r, n_t);
    for (Eigen::Index k = 0; k < n_t; ++k)
      for (Eigen::Index i = 0; i < n_r; ++i) h(i, k) = complex_normal(rng);
    if ((h.array().abs() == 0.0).any()) continue;
    if (max_minor_condition(h) < 1e12) return {h, seed};
  }
  throw GenerationError("generate_generic_matrix: retry budget exhausted");
}

PhaseDraws sample_phase_matrix(const PhaseNoiseSpec& spec, Eigen::Index n_r, Eigen::Index n_t, Eigen::Index n,
                               std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_phase_matrix: N must be >= 1");
  PhaseDraws d;
  d.structure = spec.structure;
  d.n_r = n_r;
  d.n_t = n_t;
  const Eigen::Index s = stream_count(spec.structure, n_r, n_t);
  d.streams.resize(s, n);
  for (Eigen::Index r = 0; r < s; ++r) {
    Rng rng = make_rng(seed, 1000 + static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    if (std::holds_alternative<IidUniform>(spec.process)) {
      for (Eigen::Index t = 0; t < n; ++t) d.streams(r, t) = uni(rng);
    } else if (const auto* w = std::get_if<WrappedWiener>(&spec.process)) {
      if (!(w->sigma2 > 0.0)) throw std::domain_error("WrappedWiener: sigma2 must be positive");
      std::normal_distribution<double> step(0.0, std::sqrt(w->sigma2));
      double th = uni(rng);
      for (Eigen::Index t = 0; t < n; ++t) {
        d.streams(r, t) = th;
        th = wrap(th + step(rng));
      }
    } else {
      const double v = wrap(std::get<Degenerate>(spec.process).value);
      d.streams.row(r).setConstant(v);
    }
  }
  return d;
}

SampleBatch apply_channel(const ChannelRealization& ch, const PhaseNoiseSpec& spec, const Eigen::MatrixXcd& x,
                          std::uint64_t seed, std::optional<double> power) {
  if (x.rows() != ch.n_t()) throw std::invalid_argument("apply_channel: x must have n_t rows");
  const Eigen::Index n = x.cols();
  if (n < 1) throw std::invalid_argument("apply_channel: empty input");
  if (power) {
    const double mean_energy = x.colwise().squaredNorm().mean();
    if (mean_energy > 1.05 * *power)
      throw std::invalid_argument("apply_channel: empirical input power exceeds 1.05 P");
  }
  SampleBatch b;
  b.x = x;
  b.seed = seed;
  b.power = power.value_or(x.colwise().squaredNorm().mean());
  b.phases = sample_phase_matrix(spec, ch.n_r(), ch.n_t(), n, derive_seed(seed, 1));
  Rng rng = make_rng(seed, 2);
  b.z.resize(ch.n_r(), n);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index i = 0; i < ch.n_r(); ++i) b.z(i, t) = complex_normal(rng);
  b.y.resize(ch.n_r(), n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::MatrixXd th = b.phases.path_phases(t);
    for (Eigen::Index i = 0; i < ch.n_r(); ++i) {
      cd acc = b.z(i, t);
      for (Eigen::Index k = 0; k < ch.n_t(); ++k) acc += ch.h(i, k) * std::polar(1.0, th(i, k)) * x(k, t);
      b.y(i, t) = acc;
    }
  }
  return b;
}

Eigen::MatrixXcd canonical_transform(const Eigen::MatrixXcd& h, Eigen::Index u) {
  if (u < 0 || u >= h.cols()) throw std::out_of_range("canonical_transform: column index out of range");
  Eigen::MatrixXcd g = h;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    if (h(i, u) == cd(0.0, 0.0)) throw SingularTransformError("canonical_transform: zero entry in column u");
    g.row(i) /= h(i, u);
  }
  return g;
}

Eigen::MatrixXcd canonical_transform(const ChannelRealization& ch, Eigen::Index u) {
  return canonical_transform(ch.h, u);
}

Eigen::Index strongest_index(const Eigen::VectorXcd& x) {
  if (x.size() == 0) throw std::invalid_argument("strongest_index: empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (std::abs(x(i)) > std::abs(x(best))) best = i;
  return best;
}

void write_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_batch_csv: cannot open " + path);
  out << "t";
  for (Eigen::Index k = 0; k < batch.x.rows(); ++k) out << ",x" << k << "_re,x" << k << "_im";
  for (Eigen::Index i = 0; i < batch.y.rows(); ++i) out << ",y" << i << "_re,y" << i << "_im";
  out << '\n' << std::setprecision(17);
  for (Eigen::Index t = 0; t < batch.x.cols(); ++t) {
    out << t;
    for (Eigen::Index k = 0; k < batch.x.rows(); ++k) out << ',' << batch.x(k, t).real() << ',' << batch.x(k, t).imag();
    for (Eigen::Index i = 0; i < batch.y.rows(); ++i) out << ',' << batch.y(i, t).real() << ',' << batch.y(i, t).imag();
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_batch_csv: write failed for " + path);
}

}  // namespace pnlab
