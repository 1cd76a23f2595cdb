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
#include <string>
#include <vector>

#include "pnlab/auxdist.hpp"
#include "pnlab/channel.hpp"
#include "pnlab/conditional_density.hpp"
#include "pnlab/entropy.hpp"

namespace pnlab {

enum class Model { A, B1, B2, B3, Common };

std::string to_string(Model m);
/// Accepts A, B1, B2, B3, Common (case-insensitive). Throws ConfigError.
Model parse_model(const std::string& s);
PhaseStructure structure_for(Model m);

struct PrelogPrediction {
  double lower = 0.0;
  double upper = 0.0;
  bool tight = false;
};

PrelogPrediction prelog_prediction(Model model, int n_t, int n_r);

struct PrelogPoint {
  double log2p = 0.0;
  double value = 0.0;
  double std_err = 0.0;
};

struct PrelogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double window_lo = 0.0;  // log2 P
  double window_hi = 0.0;  // log2 P
  int n_points = 0;
};

/// Weighted least squares over the top `window` SNR points.
PrelogFit fit_prelog(const std::vector<PrelogPoint>& points, int window = 4);

/// Draws count input vectors (n_t x count) with E|x|^2 = power.
using InputSampler = std::function<Eigen::MatrixXcd(Eigen::Index count, double power, std::uint64_t seed)>;

/// CN(0, power / n_active I) on antennas 0..n_active-1, zero elsewhere.
InputSampler gaussian_input(Eigen::Index n_t, Eigen::Index n_active);
/// Nonnegative Rayleigh amplitude on one antenna, zero phase, zero elsewhere.
InputSampler single_antenna_amplitude(Eigen::Index n_t, Eigen::Index antenna = 0);
/// One of several input families selected and parameterised by law_seed.
InputSampler random_input_law(Eigen::Index n_t, std::uint64_t law_seed);
std::string random_input_law_name(std::uint64_t law_seed);

/// Scaling a with X~ = X / a: 1 / max|h| for model A, 1 / sigma_max(H) for B1.
double canonical_scaling(Model model, const Eigen::MatrixXcd& h);

/// Slope-bearing part of the lower bound on h(W | X~), bits.
double cond_entropy_lb_terms(Model model, Eigen::Index n_r, const Eigen::MatrixXcd& x_tilde);
/// Slope-bearing part of the conjectured upper bound on h(W | X~) for B1, bits.
double cond_entropy_ub_terms(Eigen::Index n_r, const Eigen::MatrixXcd& x_tilde);

struct EstimatorConfig {
  Eigen::Index n_samples = 20000;
  Eigen::Index n_conditional = 0;  // 0: same as n_samples
  KnnOptions knn;
  MarginalOptions marginal;
  std::uint64_t seed = 0;
};

struct MiBreakdown {
  EntropyEstimate mi;
  EntropyEstimate h_y;
  EntropyEstimate h_y_given_x;
};

/// h(Y) of channel outputs: circular reduction when every output component
/// carries its own uniform phase, direct kNN otherwise.
EntropyEstimate output_entropy(const Eigen::MatrixXcd& y, PhaseStructure s, const KnnOptions& knn);

/// I(X;Y) = h(Y) - h(Y|X) for inputs from sampler at power P.
MiBreakdown mutual_information_estimate(const Eigen::MatrixXcd& h, Model model, const InputSampler& sampler,
                                        double power, const EstimatorConfig& cfg);

/// Gaussian input on n_active antennas; n_active = 0 selects the model's
/// default. channel_inversion (B2 only) estimates I(X; H^+ Y) instead.
MiBreakdown gaussian_input_mi_lower(const Eigen::MatrixXcd& h, Model model, double power, Eigen::Index n_active,
                                    const EstimatorConfig& cfg, bool channel_inversion = false);
Eigen::Index default_active_antennas(Model model, Eigen::Index n_t, Eigen::Index n_r);

struct GrowthPoint {
  double power = 0.0;
  EntropyEstimate h_y;
};

struct GrowthReport {
  std::vector<GrowthPoint> points;
  PrelogFit fit;
  double predicted_slope = 0.0;
};

/// Slope of h(Y) in log2 P under receive phase noise and Gaussian input on all antennas.
GrowthReport hY_growth_check(const Eigen::MatrixXcd& h, const std::vector<double>& powers, const EstimatorConfig& cfg);

struct BoundRow {
  Model model = Model::A;
  Eigen::Index n_t = 0;
  Eigen::Index n_r = 0;
  double power = 0.0;
  Eigen::VectorXd alphas;
  double mu = 0.0;
  double duality_term = 0.0, se_duality = 0.0;      // E[-log2 q(W)]
  double h_w_given_u = 0.0, se_h_w_given_u = 0.0;   // kNN estimate of h(W|U)
  double cond_term = 0.0, se_cond = 0.0;            // h(W|X~)
  double mi_lower = NAN, se_mi_lower = NAN;
  double mi_upper = NAN, se_mi_upper = NAN;
  double lb_terms = 0.0;
  double ub_terms = 0.0;
  double dropped_mass = 0.0;  // probability of U values too rare to estimate h(W|U=u)
};

struct DualityConfig {
  std::vector<double> alpha_grid{0.05, 0.1, 0.2, 0.4};
  double mu = 0.0;  // 0: min(1/P, 1)
  bool estimate_mi_lower = true;
  bool estimate_cond = true;
  Eigen::Index min_group = 200;
};

struct DualitySweep {
  std::vector<BoundRow> rows;  // one row per alpha vector, all sharing the same samples
  std::size_t best = 0;        // row with the smallest duality term
};

/// Duality upper bound for models A and B1 over the alpha grid (per component).
DualitySweep duality_upper_estimate(const Eigen::MatrixXcd& h, Model model, const InputSampler& sampler, double power,
                                    const EstimatorConfig& cfg, const DualityConfig& dcfg = {});

}  // namespace pnlab
