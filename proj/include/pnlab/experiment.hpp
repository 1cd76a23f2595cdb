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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pnlab/bounds.hpp"
#include "pnlab/channel.hpp"

namespace pnlab {

inline constexpr int kSchemaVersion = 1;

struct InputScheme {
  std::string kind = "gaussian";  // gaussian | single_antenna_amplitude | custom_file
  Eigen::Index n_active = 0;      // gaussian; 0 selects the model default
  Eigen::Index antenna = 0;       // single_antenna_amplitude
  std::string path;               // custom_file
};

struct RecoveryConfig {
  Eigen::Index n_t = 2;
  Eigen::Index n_r = 3;
  int trials = 100;
  int max_starts = 50;
  double tol = 1e-10;
  double noise_level = 0.0;
  double separation = 1e-3;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  Model model = Model::A;
  Eigen::Index n_t = 2;
  Eigen::Index n_r = 2;
  std::optional<std::uint64_t> channel_seed;
  PhaseProcess process = IidUniform{};
  InputScheme input;
  std::vector<double> snr_db;
  int k = 4;
  int folds = 10;
  Eigen::Index n_samples = 20000;
  Eigen::Index n_conditional = 0;
  int n_importance = 32;
  std::vector<double> alpha_grid{0.05, 0.1, 0.2, 0.4};
  int fit_window = 4;
  Eigen::Index simulate_n = 1000;
  RecoveryConfig recovery;
  std::string output_dir = "out";

  std::vector<double> powers() const;
  std::uint64_t effective_channel_seed() const;
  EstimatorConfig estimator(std::uint64_t stream) const;
};

/// Throws ConfigError with a message naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Reads a config file, or the embedded config of a summary file.
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

InputSampler make_input_sampler(const ExperimentConfig& cfg);

struct SweepOutcome {
  std::vector<BoundRow> rows;
  std::vector<std::string> status;  // "ok" or the error message
  std::optional<PrelogFit> fit;
  bool any_failed = false;
  nlohmann::json summary;
};

/// Writes one SampleBatch CSV per SNR point; returns the paths.
std::vector<std::string> run_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
/// Writes bounds.csv and summary.json.
SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

struct RecoverOutcome {
  int trials = 0;
  int recovered = 0;         // amplitude error below 1e-6
  int second_preimages = 0;  // distinct solution found
  int failed = 0;
  bool any_failed = false;
};

/// Writes recovery.csv and recovery_summary.csv.
RecoverOutcome run_recover(const ExperimentConfig& cfg, const std::string& out_dir);

/// Quick internal consistency checks; prints one line per check.
bool run_selftest(std::ostream& os);

}  // namespace pnlab
