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

#include "pnlab/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pnlab/auxdist.hpp"
#include "pnlab/errors.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/recovery.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void require_positive(long long v, const char* what) {
  if (v < 1) throw ConfigError(std::string("config field '") + what + "' must be >= 1");
}

json process_to_json(const PhaseProcess& p) {
  if (std::holds_alternative<IidUniform>(p)) return {{"type", "iid_uniform"}};
  if (const auto* w = std::get_if<WrappedWiener>(&p)) return {{"type", "wrapped_wiener"}, {"sigma2", w->sigma2}};
  return {{"type", "degenerate"}, {"value", std::get<Degenerate>(p).value}};
}

PhaseProcess process_from_json(const json& j) {
  const std::string t = get_or<std::string>(j, "type", "iid_uniform");
  if (t == "iid_uniform") return IidUniform{};
  if (t == "wrapped_wiener") {
    const double s2 = get_or<double>(j, "sigma2", 0.1);
    if (!(s2 > 0.0)) throw ConfigError("config field 'phase_process.sigma2' must be positive");
    return WrappedWiener{s2};
  }
  if (t == "degenerate") return Degenerate{get_or<double>(j, "value", 0.0)};
  throw ConfigError("unknown phase_process type '" + t + "' (allowed: iid_uniform, wrapped_wiener, degenerate)");
}

Eigen::MatrixXcd read_input_csv(const std::string& path, Eigen::Index n_t) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open custom input file " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(v.size()) != 2 * n_t)
      throw ConfigError("custom input file rows must hold re,im pairs for n_t antennas");
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw ConfigError("custom input file is empty");
  Eigen::MatrixXcd x(n_t, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (Eigen::Index k = 0; k < n_t; ++k) x(k, static_cast<Eigen::Index>(t)) = cd(rows[t][2 * k], rows[t][2 * k + 1]);
  const double e = x.colwise().squaredNorm().mean();
  if (!(e > 0.0)) throw ConfigError("custom input file has zero energy");
  return x / std::sqrt(e);
}

std::string alpha_string(const Eigen::VectorXd& a) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < a.size(); ++i) os << (i ? ";" : "") << a(i);
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

json fit_json(const PrelogFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"window", {f.window_lo, f.window_hi}}};
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<double> ExperimentConfig::powers() const {
  std::vector<double> p;
  for (double db : snr_db) p.push_back(std::pow(10.0, db / 10.0));
  return p;
}

std::uint64_t ExperimentConfig::effective_channel_seed() const {
  return channel_seed ? *channel_seed : derive_seed(seed, 0xC4A11E1ULL);
}

EstimatorConfig ExperimentConfig::estimator(std::uint64_t stream) const {
  EstimatorConfig e;
  e.n_samples = n_samples;
  e.n_conditional = n_conditional;
  e.knn.k = k;
  e.knn.folds = folds;
  e.marginal.n_importance = n_importance;
  e.seed = derive_seed(seed, stream);
  return e;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.schema_version = get_or<int>(j, "schema_version", -1);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("config field 'schema_version' must be " + std::to_string(kSchemaVersion));
  if (!j.contains("seed")) throw ConfigError("config field 'seed' is mandatory");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.model = parse_model(get_or<std::string>(j, "model", "A"));
  c.n_t = get_or<Eigen::Index>(j, "n_t", 2);
  c.n_r = get_or<Eigen::Index>(j, "n_r", 2);
  require_positive(c.n_t, "n_t");
  require_positive(c.n_r, "n_r");
  if (j.contains("channel_seed") && !j.at("channel_seed").is_null())
    c.channel_seed = get_or<std::uint64_t>(j, "channel_seed", 0);
  if (j.contains("phase_process")) c.process = process_from_json(j.at("phase_process"));
  if (j.contains("input")) {
    const json& in = j.at("input");
    c.input.kind = get_or<std::string>(in, "scheme", "gaussian");
    if (c.input.kind != "gaussian" && c.input.kind != "single_antenna_amplitude" && c.input.kind != "custom_file")
      throw ConfigError("unknown input scheme '" + c.input.kind +
                        "' (allowed: gaussian, single_antenna_amplitude, custom_file)");
    c.input.n_active = get_or<Eigen::Index>(in, "n_active", 0);
    c.input.antenna = get_or<Eigen::Index>(in, "antenna", 0);
    c.input.path = get_or<std::string>(in, "path", "");
    if (c.input.n_active < 0 || c.input.n_active > c.n_t) throw ConfigError("config field 'input.n_active' out of range");
    if (c.input.antenna < 0 || c.input.antenna >= c.n_t) throw ConfigError("config field 'input.antenna' out of range");
    if (c.input.kind == "custom_file" && c.input.path.empty()) throw ConfigError("custom_file input needs 'path'");
  }
  c.snr_db = get_or<std::vector<double>>(j, "snr_db", {});
  for (std::size_t i = 1; i < c.snr_db.size(); ++i)
    if (!(c.snr_db[i] > c.snr_db[i - 1])) throw ConfigError("config field 'snr_db' must be strictly increasing");
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    c.k = get_or<int>(e, "k", 4);
    c.folds = get_or<int>(e, "folds", 10);
    c.n_samples = get_or<Eigen::Index>(e, "n_samples", 20000);
    c.n_conditional = get_or<Eigen::Index>(e, "n_conditional", 0);
    c.n_importance = get_or<int>(e, "n_importance", 32);
    c.fit_window = get_or<int>(e, "fit_window", 4);
  }
  require_positive(c.k, "estimator.k");
  if (c.folds < 2) throw ConfigError("config field 'estimator.folds' must be >= 2");
  if (c.n_samples < 100) throw ConfigError("config field 'estimator.n_samples' must be >= 100");
  if (c.n_conditional < 0) throw ConfigError("config field 'estimator.n_conditional' must be >= 0");
  require_positive(c.n_importance, "estimator.n_importance");
  if (c.fit_window < 3) throw ConfigError("config field 'estimator.fit_window' must be >= 3");
  c.alpha_grid = get_or<std::vector<double>>(j, "alpha_grid", c.alpha_grid);
  if (c.alpha_grid.empty()) throw ConfigError("config field 'alpha_grid' must not be empty");
  for (double a : c.alpha_grid)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("config field 'alpha_grid' entries must lie in (0, 1)");
  if (j.contains("simulate")) c.simulate_n = get_or<Eigen::Index>(j.at("simulate"), "n", 1000);
  require_positive(c.simulate_n, "simulate.n");
  if (j.contains("recovery")) {
    const json& r = j.at("recovery");
    c.recovery.n_t = get_or<Eigen::Index>(r, "n_t", 2);
    c.recovery.n_r = get_or<Eigen::Index>(r, "n_r", 3);
    c.recovery.trials = get_or<int>(r, "trials", 100);
    c.recovery.max_starts = get_or<int>(r, "max_starts", 50);
    c.recovery.tol = get_or<double>(r, "tol", 1e-10);
    c.recovery.noise_level = get_or<double>(r, "noise_level", 0.0);
    c.recovery.separation = get_or<double>(r, "separation", 1e-3);
    require_positive(c.recovery.n_t, "recovery.n_t");
    require_positive(c.recovery.n_r, "recovery.n_r");
    require_positive(c.recovery.max_starts, "recovery.max_starts");
    if (c.recovery.trials < 0) throw ConfigError("config field 'recovery.trials' must be >= 0");
    if (!(c.recovery.tol > 0.0)) throw ConfigError("config field 'recovery.tol' must be positive");
    if (c.recovery.noise_level < 0.0) throw ConfigError("config field 'recovery.noise_level' must be >= 0");
  }
  if (j.contains("output")) c.output_dir = get_or<std::string>(j.at("output"), "dir", "out");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["model"] = to_string(c.model);
  j["n_t"] = c.n_t;
  j["n_r"] = c.n_r;
  j["channel_seed"] = c.channel_seed ? json(*c.channel_seed) : json(nullptr);
  j["phase_process"] = process_to_json(c.process);
  j["input"] = {{"scheme", c.input.kind}, {"n_active", c.input.n_active}, {"antenna", c.input.antenna},
                {"path", c.input.path}};
  j["snr_db"] = c.snr_db;
  j["estimator"] = {{"k", c.k},
                    {"folds", c.folds},
                    {"n_samples", c.n_samples},
                    {"n_conditional", c.n_conditional},
                    {"n_importance", c.n_importance},
                    {"fit_window", c.fit_window}};
  j["alpha_grid"] = c.alpha_grid;
  j["simulate"] = {{"n", c.simulate_n}};
  j["recovery"] = {{"n_t", c.recovery.n_t},
                   {"n_r", c.recovery.n_r},
                   {"trials", c.recovery.trials},
                   {"max_starts", c.recovery.max_starts},
                   {"tol", c.recovery.tol},
                   {"noise_level", c.recovery.noise_level},
                   {"separation", c.recovery.separation}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return parse_config(j.at("config"));
  return parse_config(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

InputSampler make_input_sampler(const ExperimentConfig& cfg) {
  if (cfg.input.kind == "single_antenna_amplitude") return single_antenna_amplitude(cfg.n_t, cfg.input.antenna);
  if (cfg.input.kind == "custom_file") {
    const Eigen::MatrixXcd pool = read_input_csv(cfg.input.path, cfg.n_t);
    return [pool](Eigen::Index count, double power, std::uint64_t seed) {
      Rng rng = make_rng(seed, 48);
      std::uniform_int_distribution<Eigen::Index> pick(0, pool.cols() - 1);
      Eigen::MatrixXcd x(pool.rows(), count);
      for (Eigen::Index t = 0; t < count; ++t) x.col(t) = std::sqrt(power) * pool.col(pick(rng));
      return x;
    };
  }
  const Eigen::Index na = cfg.input.n_active > 0 ? cfg.input.n_active : default_active_antennas(cfg.model, cfg.n_t, cfg.n_r);
  return gaussian_input(cfg.n_t, na);
}

std::vector<std::string> run_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.snr_db.empty()) throw ConfigError("config field 'snr_db' must not be empty");
  ensure_dir(out_dir);
  const ChannelRealization ch = generate_generic_matrix(cfg.n_r, cfg.n_t, cfg.effective_channel_seed());
  const PhaseNoiseSpec spec{structure_for(cfg.model), cfg.process};
  const InputSampler sampler = make_input_sampler(cfg);
  const std::vector<double> p = cfg.powers();
  std::vector<std::string> files;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Eigen::MatrixXcd x = sampler(cfg.simulate_n, p[i], derive_seed(cfg.seed, 100 + 2 * i));
    const SampleBatch b = apply_channel(ch, spec, x, derive_seed(cfg.seed, 101 + 2 * i));
    std::ostringstream name;
    name << "samples_" << std::setw(2) << std::setfill('0') << i << ".csv";
    const std::string path = (fs::path(out_dir) / name.str()).string();
    write_batch_csv(b, path);
    files.push_back(path);
  }
  return files;
}

SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.snr_db.empty()) throw ConfigError("config field 'snr_db' must not be empty");
  if (std::holds_alternative<Degenerate>(cfg.process))
    throw ConfigError("sweep requires a phase process with uniform marginal (iid_uniform or wrapped_wiener)");
  ensure_dir(out_dir);
  const ChannelRealization ch = generate_generic_matrix(cfg.n_r, cfg.n_t, cfg.effective_channel_seed());
  const InputSampler sampler = make_input_sampler(cfg);
  const std::vector<double> p = cfg.powers();
  const bool upper = cfg.model == Model::A || cfg.model == Model::B1;

  SweepOutcome out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const EstimatorConfig est = cfg.estimator(200 + i);
    BoundRow row;
    row.model = cfg.model;
    row.n_t = cfg.n_t;
    row.n_r = cfg.n_r;
    row.power = p[i];
    try {
      if (upper) {
        DualityConfig d;
        d.alpha_grid = cfg.alpha_grid;
        const DualitySweep s = duality_upper_estimate(ch.h, cfg.model, sampler, p[i], est, d);
        row = s.rows[s.best];
      } else {
        const MiBreakdown mi = mutual_information_estimate(ch.h, cfg.model, sampler, p[i], est);
        row.mi_lower = mi.mi.value;
        row.se_mi_lower = mi.mi.std_err;
        row.duality_term = row.se_duality = NAN;
        row.cond_term = row.se_cond = NAN;
        row.h_w_given_u = row.se_h_w_given_u = NAN;
        row.lb_terms = row.ub_terms = NAN;
      }
      out.status.push_back("ok");
    } catch (const std::exception& e) {
      out.status.push_back(std::string("failed: ") + e.what());
      out.any_failed = true;
    }
    out.rows.push_back(row);
  }

  std::vector<PrelogPoint> pts;
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    if (out.status[i] == "ok") pts.push_back({std::log2(out.rows[i].power), out.rows[i].mi_lower, out.rows[i].se_mi_lower});
  if (pts.size() >= 3) out.fit = fit_prelog(pts, cfg.fit_window);

  std::ofstream csv(fs::path(out_dir) / "bounds.csv");
  csv << "model,n_t,n_r,P,alpha_vec,duality_term,cond_term,mi_lower,mi_upper,se_duality,se_cond,se_mi_lower,"
         "se_mi_upper,h_w_given_u,se_h_w_given_u,status\n"
      << std::setprecision(10);
  json rows = json::array();
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const BoundRow& r = out.rows[i];
    const std::string st = out.status[i] == "ok" ? "ok" : "failed";
    csv << to_string(r.model) << ',' << r.n_t << ',' << r.n_r << ',' << r.power << ',' << alpha_string(r.alphas) << ','
        << r.duality_term << ',' << r.cond_term << ',' << r.mi_lower << ',' << r.mi_upper << ',' << r.se_duality << ','
        << r.se_cond << ',' << r.se_mi_lower << ',' << r.se_mi_upper << ',' << r.h_w_given_u << ','
        << r.se_h_w_given_u << ',' << st << '\n';
    rows.push_back({{"P", r.power},
                    {"alpha_vec", std::vector<double>(r.alphas.data(), r.alphas.data() + r.alphas.size())},
                    {"duality_term", num(r.duality_term)},
                    {"cond_term", num(r.cond_term)},
                    {"mi_lower", num(r.mi_lower)},
                    {"mi_upper", num(r.mi_upper)},
                    {"se_duality", num(r.se_duality)},
                    {"se_cond", num(r.se_cond)},
                    {"se_mi_lower", num(r.se_mi_lower)},
                    {"se_mi_upper", num(r.se_mi_upper)},
                    {"status", out.status[i]}});
  }
  if (!csv) throw std::runtime_error("failed writing bounds.csv");

  json summary;
  summary["config_hash"] = config_hash(cfg);
  summary["config"] = to_json(cfg);
  summary["rows"] = rows;
  summary["prelog_fit"] = out.fit ? fit_json(*out.fit) : json(nullptr);
  const PrelogPrediction pred = prelog_prediction(cfg.model, static_cast<int>(cfg.n_t), static_cast<int>(cfg.n_r));
  summary["prediction"] = {{"lower", pred.lower}, {"upper", pred.upper}, {"tight", pred.tight}};
  std::ofstream js(fs::path(out_dir) / "summary.json");
  js << summary.dump(2) << '\n';
  if (!js) throw std::runtime_error("failed writing summary.json");
  out.summary = summary;
  return out;
}

RecoverOutcome run_recover(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const RecoveryConfig& rc = cfg.recovery;
  RecoverOutcome out;
  std::ofstream csv(fs::path(out_dir) / "recovery.csv");
  csv << "n_t,n_r,trial,status,residual,amp_rel_err,second_preimage\n" << std::setprecision(10);
  for (int trial = 0; trial < rc.trials; ++trial) {
    const std::uint64_t ts = derive_seed(cfg.seed, 7000 + static_cast<std::uint64_t>(trial));
    const ChannelRealization ch = generate_generic_matrix(rc.n_r, rc.n_t, ts);
    Rng rng = make_rng(ts, 1);
    std::uniform_real_distribution<double> ua(0.0, 1.0), ut(0.0, 2.0 * kPi);
    Eigen::VectorXd a(rc.n_t), th(rc.n_t - 1);
    for (Eigen::Index j = 0; j < rc.n_t; ++j) a(j) = ua(rng);
    for (Eigen::Index j = 0; j + 1 < rc.n_t; ++j) th(j) = ut(rng);
    Eigen::VectorXd s = forward_magnitudes(ch.h, a, th);
    if (rc.noise_level > 0.0) s = perturb_observations(s, rc.noise_level, derive_seed(ts, 2));
    const RecoveryProblem prob{ch.h, s};
    const RecoveryResult r = recover_amplitudes(prob, rc.max_starts, rc.tol, derive_seed(ts, 3));
    const double err = (r.amplitudes - a).norm() / a.norm();
    const bool second = find_second_preimage(prob, a, th, rc.separation, rc.max_starts, derive_seed(ts, 4)).has_value();
    ++out.trials;
    if (err < 1e-6) ++out.recovered;
    if (second) ++out.second_preimages;
    if (r.status == RecoveryStatus::failed) ++out.failed;
    csv << rc.n_t << ',' << rc.n_r << ',' << trial << ',' << to_string(r.status) << ',' << r.residual << ',' << err
        << ',' << (second ? 1 : 0) << '\n';
  }
  if (!csv) throw std::runtime_error("failed writing recovery.csv");
  std::ofstream sum(fs::path(out_dir) / "recovery_summary.csv");
  sum << "n_t,n_r,trials,success_rate,ambiguity_rate,failure_rate\n";
  const double n = std::max(out.trials, 1);
  sum << rc.n_t << ',' << rc.n_r << ',' << out.trials << ',' << (out.trials ? out.recovered / n : 0.0) << ','
      << (out.trials ? out.second_preimages / n : 0.0) << ',' << (out.trials ? out.failed / n : 0.0) << '\n';
  out.any_failed = out.failed > 0;
  return out;
}

bool run_selftest(std::ostream& os) {
  bool all = true;
  const auto check = [&](const std::string& name, bool ok) {
    os << (ok ? "PASS " : "FAIL ") << name << '\n';
    all = all && ok;
  };
  const auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  const PrelogPrediction b45 = prelog_prediction(Model::B1, 4, 5);
  check("prelog B1 4x5", b45.lower == 1.5 && b45.upper == 2.0 && !b45.tight);
  check("log_plus", log_plus(8.0) == 3.0 && log_plus(0.5) == 0.0);
  check("chi2 k=2 central", near(expected_log_chi2(2, 0.0).value, (kLn2 - kEulerGamma) / kLn2, 1e-10));
  check("beta identity", near(beta_function(0.5, 0.5), kPi, 1e-12));
  {
    AuxGammaParams p{Eigen::VectorXd::Ones(1), 1.0};
    check("aux gaussian reduction", near(aux_logq_modelA(Eigen::VectorXcd::Constant(1, cd(1.0, 0.0)), p), -1.0 - std::log(kPi), 1e-12));
  }
  {
    Rng rng = make_rng(1, 0);
    Eigen::MatrixXd s(2, 20000);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = n(rng);
    const EntropyEstimate e = knn_entropy(s);
    check("knn gaussian 2d", near(e.value, std::log2(2.0 * kPi * std::exp(1.0)), 0.05));
  }
  {
    const ChannelRealization ch = generate_generic_matrix(3, 2, 5);
    Eigen::VectorXcd yh(2);
    yh << cd(0.3, -1.1), cd(0.7, 0.4);
    const JacobianResult j = analytic_jacobian(ch.h, yh);
    check("jacobian determinant constant", near(j.constant, 1.0, 1e-8));
  }
  {
    const ChannelRealization ch = generate_generic_matrix(3, 1, 9);
    Eigen::VectorXd a(1);
    a << 0.7;
    const RecoveryResult r = recover_amplitudes({ch.h, forward_magnitudes(ch.h, a, Eigen::VectorXd(0))}, 1);
    check("recovery single antenna", r.status == RecoveryStatus::recovered && near(r.amplitudes(0), 0.7, 1e-9));
  }
  return all;
}

}  // namespace pnlab
