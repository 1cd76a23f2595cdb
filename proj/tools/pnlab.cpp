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

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "pnlab/bounds.hpp"
#include "pnlab/errors.hpp"
#include "pnlab/experiment.hpp"
#include "pnlab/parallel.hpp"

using namespace pnlab;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

ExperimentConfig resolve(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pnlab: capacity experiments for MIMO channels with phase noise"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)");

  auto* simulate = app.add_subcommand("simulate", "Write sample batches per SNR point");
  auto* sweep = app.add_subcommand("sweep", "Estimate bounds across the SNR grid and fit the pre-log");
  auto* predict = app.add_subcommand("predict", "Print the predicted pre-log");
  std::string model = "A";
  int n_t = 0, n_r = 0;
  predict->add_option("--model", model, "A, B1, B2, B3 or Common");
  predict->add_option("--n-t", n_t, "Transmit antennas");
  predict->add_option("--n-r", n_r, "Receive antennas");
  auto* recover = app.add_subcommand("recover", "Amplitude recovery sweep");
  auto* selftest = app.add_subcommand("selftest", "Run internal consistency checks");

  CLI11_PARSE(app, argc, argv);
  set_thread_count(g.threads);

  try {
    if (*simulate) {
      const ExperimentConfig cfg = resolve(g);
      for (const auto& f : run_simulate(cfg, cfg.output_dir)) std::cout << f << '\n';
      return 0;
    }
    if (*sweep) {
      const ExperimentConfig cfg = resolve(g);
      const SweepOutcome out = run_sweep(cfg, cfg.output_dir);
      for (std::size_t i = 0; i < out.rows.size(); ++i)
        std::cout << "P=" << out.rows[i].power << " mi_lower=" << out.rows[i].mi_lower
                  << " mi_upper=" << out.rows[i].mi_upper << " " << out.status[i] << '\n';
      if (out.fit) std::cout << "slope=" << out.fit->slope << " r2=" << out.fit->r2 << '\n';
      return out.any_failed ? 1 : 0;
    }
    if (*predict) {
      if (!g.config.empty() && n_t == 0) {
        const ExperimentConfig cfg = resolve(g);
        model = to_string(cfg.model);
        n_t = static_cast<int>(cfg.n_t);
        n_r = static_cast<int>(cfg.n_r);
      }
      if (n_t < 1 || n_r < 1) throw ConfigError("predict needs --n-t and --n-r >= 1");
      const PrelogPrediction p = prelog_prediction(parse_model(model), n_t, n_r);
      std::cout << "model=" << model << " n_t=" << n_t << " n_r=" << n_r << " lower=" << p.lower
                << " upper=" << p.upper << " tight=" << (p.tight ? "true" : "false") << '\n';
      return 0;
    }
    if (*recover) {
      const ExperimentConfig cfg = resolve(g);
      const RecoverOutcome out = run_recover(cfg, cfg.output_dir);
      std::cout << "trials=" << out.trials << " recovered=" << out.recovered
                << " second_preimages=" << out.second_preimages << " failed=" << out.failed << '\n';
      return out.any_failed ? 1 : 0;
    }
    if (*selftest) return run_selftest(std::cout) ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
