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

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pnlab/errors.hpp"
#include "pnlab/experiment.hpp"

using namespace pnlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pnlab_test_" + name);
  fs::remove_all(d);
  return d;
}

json minimal() { return json{{"schema_version", 1}, {"seed", 17}}; }

}  // namespace

TEST_CASE("config round trip") {
  json j = minimal();
  j["model"] = "B1";
  j["n_t"] = 3;
  j["n_r"] = 4;
  j["channel_seed"] = 99;
  j["phase_process"] = {{"type", "wrapped_wiener"}, {"sigma2", 0.2}};
  j["input"] = {{"scheme", "single_antenna_amplitude"}, {"antenna", 2}};
  j["snr_db"] = {10.0, 20.0, 30.0};
  j["estimator"] = {{"k", 5}, {"folds", 8}, {"n_samples", 5000}, {"n_importance", 64}, {"fit_window", 3}};
  j["alpha_grid"] = {0.1, 0.3};
  j["recovery"] = {{"n_t", 3}, {"n_r", 5}, {"trials", 7}};
  const ExperimentConfig c = parse_config(j);
  CHECK(c.model == Model::B1);
  CHECK(c.effective_channel_seed() == 99);
  CHECK(std::get<WrappedWiener>(c.process).sigma2 == 0.2);
  CHECK(c.powers().size() == 3);
  CHECK(c.powers()[1] == Catch::Approx(100.0));
  CHECK(c.recovery.trials == 7);

  const json back = to_json(c);
  CHECK(to_json(parse_config(back)) == back);
  CHECK(config_hash(parse_config(back)) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  json other = j;
  other["seed"] = 18;
  CHECK(config_hash(parse_config(other)) != config_hash(c));
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(minimal()));
  json j = minimal();
  j.erase("seed");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["model"] = "C";
  try {
    parse_config(j);
    FAIL("no exception");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* m : {"A", "B1", "B2", "B3", "Common"}) CHECK(msg.find(m) != std::string::npos);
  }
  j = minimal();
  j["snr_db"] = {10.0, 10.0};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["phase_process"] = {{"type", "pink"}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["n_t"] = "two";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = minimal();
  j["alpha_grid"] = {1.5};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/pnlab.json"), ConfigError);
}

TEST_CASE("simulate writes deterministic sample files") {
  json j = minimal();
  j["snr_db"] = {0.0, 10.0};
  j["simulate"] = {{"n", 100}};
  const ExperimentConfig c = parse_config(j);
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const auto files = run_simulate(c, a.string());
  run_simulate(c, b.string());
  REQUIRE(files.size() == 2);
  for (const auto& f : files) {
    const fs::path name = fs::path(f).filename();
    CHECK(count_lines(a / name) == 101);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  j["snr_db"] = json::array();
  CHECK_THROWS_AS(run_simulate(parse_config(j), a.string()), ConfigError);
}

TEST_CASE("sweep output schema") {
  json j = minimal();
  j["model"] = "A";
  j["input"] = {{"scheme", "single_antenna_amplitude"}};
  j["snr_db"] = {10.0, 15.0, 20.0};
  j["estimator"] = {{"n_samples", 2000}, {"fit_window", 3}};
  j["alpha_grid"] = {0.2};
  const ExperimentConfig c = parse_config(j);
  const fs::path d = scratch("sweep");
  const SweepOutcome out = run_sweep(c, d.string());
  CHECK_FALSE(out.any_failed);
  CHECK(out.rows.size() == 3);
  CHECK(count_lines(d / "bounds.csv") == 4);
  std::ifstream csv(d / "bounds.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("model,n_t,n_r,P,alpha_vec,duality_term,cond_term,mi_lower,mi_upper,se_", 0) == 0);

  const json s = json::parse(slurp(d / "summary.json"));
  CHECK(s.contains("config_hash"));
  CHECK(s.contains("rows"));
  CHECK(s["prelog_fit"].contains("slope"));
  CHECK(s["prelog_fit"].contains("intercept"));
  CHECK(s["prelog_fit"].contains("r2"));
  CHECK(s["prelog_fit"].contains("window"));
  // summaries feed back into the parser unchanged
  const ExperimentConfig again = load_config((d / "summary.json").string());
  CHECK(to_json(again) == to_json(c));
  CHECK(s["config_hash"] == config_hash(again));

  j["snr_db"] = json::array();
  CHECK_THROWS_AS(run_sweep(parse_config(j), d.string()), ConfigError);
  j["snr_db"] = {10.0, 20.0, 30.0};
  j["phase_process"] = {{"type", "degenerate"}, {"value", 0.0}};
  CHECK_THROWS_AS(run_sweep(parse_config(j), d.string()), ConfigError);
}

TEST_CASE("recover with zero trials writes only the header") {
  json j = minimal();
  j["recovery"] = {{"trials", 0}};
  const fs::path d = scratch("recover0");
  const RecoverOutcome r = run_recover(parse_config(j), d.string());
  CHECK(r.trials == 0);
  CHECK_FALSE(r.any_failed);
  CHECK(count_lines(d / "recovery.csv") == 1);
  std::ifstream in(d / "recovery.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("n_t,n_r,trial,status,residual,amp_rel_err", 0) == 0);
}

TEST_CASE("recover is deterministic") {
  json j = minimal();
  j["recovery"] = {{"n_t", 2}, {"n_r", 4}, {"trials", 5}};
  const fs::path a = scratch("recover_a"), b = scratch("recover_b");
  const RecoverOutcome r = run_recover(parse_config(j), a.string());
  run_recover(parse_config(j), b.string());
  CHECK(slurp(a / "recovery.csv") == slurp(b / "recovery.csv"));
  CHECK(r.trials == 5);
  CHECK(count_lines(a / "recovery.csv") == 6);
}

TEST_CASE("selftest") {
  std::ostringstream os;
  CHECK(run_selftest(os));
  CHECK(os.str().find("FAIL") == std::string::npos);
}
