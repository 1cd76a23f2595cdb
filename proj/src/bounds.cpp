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

#include "pnlab/bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "pnlab/errors.hpp"
#include "pnlab/mathfn.hpp"
#include "pnlab/rng.hpp"

namespace pnlab {

std::string to_string(Model m) {
  switch (m) {
    case Model::A: return "A";
    case Model::B1: return "B1";
    case Model::B2: return "B2";
    case Model::B3: return "B3";
    case Model::Common: return "Common";
  }
  return "A";
}

Model parse_model(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "A") return Model::A;
  if (u == "B1") return Model::B1;
  if (u == "B2") return Model::B2;
  if (u == "B3") return Model::B3;
  if (u == "COMMON") return Model::Common;
  throw ConfigError("unknown model '" + s + "' (allowed: A, B1, B2, B3, Common)");
}

PhaseStructure structure_for(Model m) {
  switch (m) {
    case Model::A: return PhaseStructure::PerPath;
    case Model::B1: return PhaseStructure::TxRx;
    case Model::B2: return PhaseStructure::TxOnly;
    case Model::B3: return PhaseStructure::RxOnly;
    case Model::Common: return PhaseStructure::Common;
  }
  return PhaseStructure::PerPath;
}

PrelogPrediction prelog_prediction(Model model, int n_t, int n_r) {
  if (n_t < 1 || n_r < 1) throw std::invalid_argument("prelog_prediction: dimensions must be >= 1");
  switch (model) {
    case Model::A: return {0.5, 0.5, true};
    case Model::B1: {
      const double lo = 0.5 * std::min(n_t, (n_r + 1) / 2);
      const double hi = 0.5 * std::min(n_t, std::max(n_r - 2, 0) + 1);
      return {lo, hi, n_r <= 3 || n_r >= 2 * n_t - 1};
    }
    case Model::B2: {
      const double v = 0.5 * std::min(n_t, n_r);
      return {v, v, true};
    }
    case Model::B3: {
      const double v = std::min(0.5 * n_r, n_t - 0.5);
      return {v, v, true};
    }
    case Model::Common: {
      const double v = std::min(n_t, n_r) - 0.5;
      return {v, v, true};
    }
  }
  return {};
}

PrelogFit fit_prelog(const std::vector<PrelogPoint>& points, int window) {
  if (points.size() < 3) throw std::invalid_argument("fit_prelog: need at least 3 points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].log2p > points[i - 1].log2p)) throw std::invalid_argument("fit_prelog: SNR grid must be increasing");
  const std::size_t w = std::min(points.size(), static_cast<std::size_t>(std::max(window, 3)));
  const std::size_t first = points.size() - w;
  bool weighted = true;
  for (std::size_t i = first; i < points.size(); ++i)
    if (!(points[i].std_err > 0.0) || !std::isfinite(points[i].std_err)) weighted = false;
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = first; i < points.size(); ++i) {
    const double wi = weighted ? 1.0 / (points[i].std_err * points[i].std_err) : 1.0;
    sw += wi;
    sx += wi * points[i].log2p;
    sy += wi * points[i].value;
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = first; i < points.size(); ++i) {
    const double wi = weighted ? 1.0 / (points[i].std_err * points[i].std_err) : 1.0;
    const double dx = points[i].log2p - mx, dy = points[i].value - my;
    sxx += wi * dx * dx;
    sxy += wi * dx * dy;
    syy += wi * dy * dy;
  }
  PrelogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  f.window_lo = points[first].log2p;
  f.window_hi = points.back().log2p;
  f.n_points = static_cast<int>(w);
  return f;
}

InputSampler gaussian_input(Eigen::Index n_t, Eigen::Index n_active) {
  if (n_active < 1 || n_active > n_t) throw std::invalid_argument("gaussian_input: 1 <= n_active <= n_t required");
  return [n_t, n_active](Eigen::Index count, double power, std::uint64_t seed) {
    Rng rng = make_rng(seed, 41);
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n_t, count);
    const double var = power / static_cast<double>(n_active);
    for (Eigen::Index t = 0; t < count; ++t)
      for (Eigen::Index k = 0; k < n_active; ++k) x(k, t) = complex_normal(rng, var);
    return x;
  };
}

InputSampler single_antenna_amplitude(Eigen::Index n_t, Eigen::Index antenna) {
  if (antenna < 0 || antenna >= n_t) throw std::invalid_argument("single_antenna_amplitude: antenna out of range");
  return [n_t, antenna](Eigen::Index count, double power, std::uint64_t seed) {
    Rng rng = make_rng(seed, 42);
    std::exponential_distribution<double> e(1.0);
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n_t, count);
    for (Eigen::Index t = 0; t < count; ++t) x(antenna, t) = std::sqrt(power * e(rng));
    return x;
  };
}

std::string random_input_law_name(std::uint64_t law_seed) {
  static const char* names[] = {"gaussian_random_covariance", "single_antenna_amplitude", "discrete_constellation",
                                "amplitude_phase", "gaussian_mixture"};
  return names[law_seed % 5];
}

InputSampler random_input_law(Eigen::Index n_t, std::uint64_t law_seed) {
  Rng rng = make_rng(law_seed, 43);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  switch (law_seed % 5) {
    case 0: {
      Eigen::MatrixXcd m(n_t, n_t);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_normal(rng);
      m /= std::sqrt(m.squaredNorm());
      return [m](Eigen::Index count, double power, std::uint64_t seed) {
        Rng r = make_rng(seed, 44);
        Eigen::MatrixXcd w(m.cols(), count);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = complex_normal(r);
        return Eigen::MatrixXcd(std::sqrt(power) * m * w);
      };
    }
    case 1: {
      const auto antenna = static_cast<Eigen::Index>(uni(rng) * static_cast<double>(n_t)) % n_t;
      return single_antenna_amplitude(n_t, antenna);
    }
    case 2: {
      const int points = 4 + static_cast<int>(uni(rng) * 13.0);
      Eigen::MatrixXcd c(n_t, points);
      for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = complex_normal(rng);
      c /= std::sqrt(c.colwise().squaredNorm().mean());
      return [c](Eigen::Index count, double power, std::uint64_t seed) {
        Rng r = make_rng(seed, 45);
        std::uniform_int_distribution<Eigen::Index> pick(0, c.cols() - 1);
        Eigen::MatrixXcd x(c.rows(), count);
        for (Eigen::Index t = 0; t < count; ++t) x.col(t) = std::sqrt(power) * c.col(pick(r));
        return x;
      };
    }
    case 3: {
      Eigen::VectorXd b(n_t);
      for (Eigen::Index k = 0; k < n_t; ++k) b(k) = 0.2 + uni(rng);
      b *= std::sqrt(3.0 / b.squaredNorm());
      return [b](Eigen::Index count, double power, std::uint64_t seed) {
        Rng r = make_rng(seed, 46);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Eigen::MatrixXcd x(b.size(), count);
        for (Eigen::Index t = 0; t < count; ++t)
          for (Eigen::Index k = 0; k < b.size(); ++k)
            x(k, t) = std::polar(std::sqrt(power) * b(k) * u(r), 2.0 * kPi * u(r));
        return x;
      };
    }
    default: {
      const int comps = 2 + static_cast<int>(uni(rng) * 2.0);
      Eigen::MatrixXcd means(n_t, comps);
      for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = complex_normal(rng, 2.0);
      const double spread = 0.1 + 0.5 * uni(rng);
      const double norm2 = means.colwise().squaredNorm().mean() + spread * static_cast<double>(n_t);
      return [means, spread, norm2](Eigen::Index count, double power, std::uint64_t seed) {
        Rng r = make_rng(seed, 47);
        std::uniform_int_distribution<Eigen::Index> pick(0, means.cols() - 1);
        const double scale = std::sqrt(power / norm2);
        Eigen::MatrixXcd x(means.rows(), count);
        for (Eigen::Index t = 0; t < count; ++t) {
          const Eigen::Index j = pick(r);
          for (Eigen::Index k = 0; k < means.rows(); ++k) x(k, t) = scale * (means(k, j) + complex_normal(r, spread));
        }
        return x;
      };
    }
  }
}

double canonical_scaling(Model model, const Eigen::MatrixXcd& h) {
  if (model == Model::A) return 1.0 / h.cwiseAbs().maxCoeff();
  if (model == Model::B1) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    return 1.0 / svd.singularValues()(0);
  }
  throw std::invalid_argument("canonical_scaling: defined for models A and B1");
}

static double log_plus_or_zero(double v) { return v > 1.0 ? std::log2(v) : 0.0; }

static void top_two(const Eigen::VectorXcd& x, Eigen::Index& u, Eigen::Index& v) {
  u = strongest_index(x);
  v = -1;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (k == u) continue;
    if (v < 0 || std::abs(x(k)) > std::abs(x(v))) v = k;
  }
}

double cond_entropy_lb_terms(Model model, Eigen::Index n_r, const Eigen::MatrixXcd& x_tilde) {
  if (model != Model::A && model != Model::B1) throw std::invalid_argument("cond_entropy_lb_terms: model A or B1");
  if (x_tilde.cols() == 0) throw std::invalid_argument("cond_entropy_lb_terms: empty batch");
  const double nr = static_cast<double>(n_r);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < x_tilde.cols(); ++t) {
    Eigen::Index u, v;
    top_two(x_tilde.col(t), u, v);
    const double lu = log_plus_or_zero(std::abs(x_tilde(u, t)));
    const double lv = v >= 0 ? log_plus_or_zero(std::abs(x_tilde(v, t))) : 0.0;
    acc += model == Model::A ? nr * (lu + lv) : nr * lu + lv;
  }
  return acc / static_cast<double>(x_tilde.cols());
}

double cond_entropy_ub_terms(Eigen::Index n_r, const Eigen::MatrixXcd& x_tilde) {
  if (x_tilde.cols() == 0) throw std::invalid_argument("cond_entropy_ub_terms: empty batch");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < x_tilde.cols(); ++t) {
    Eigen::Index u, v;
    top_two(x_tilde.col(t), u, v);
    acc += static_cast<double>(n_r) * log_plus_or_zero(std::abs(x_tilde(u, t)));
    for (Eigen::Index k = 0; k < x_tilde.rows(); ++k)
      if (k != u) acc += log_plus_or_zero(std::abs(x_tilde(k, t)));
  }
  return acc / static_cast<double>(x_tilde.cols());
}

EntropyEstimate output_entropy(const Eigen::MatrixXcd& y, PhaseStructure s, const KnnOptions& knn) {
  switch (s) {
    case PhaseStructure::PerPath:
    case PhaseStructure::RxOnly:
    case PhaseStructure::TxRx: return circular_entropy(y, knn);
    default: return knn_entropy(to_real(y), knn);
  }
}

static PhaseNoiseSpec uniform_spec(Model m) { return {structure_for(m), IidUniform{}}; }

MiBreakdown mutual_information_estimate(const Eigen::MatrixXcd& h, Model model, const InputSampler& sampler,
                                        double power, const EstimatorConfig& cfg) {
  const PhaseNoiseSpec spec = uniform_spec(model);
  const Eigen::MatrixXcd x = sampler(cfg.n_samples, power, derive_seed(cfg.seed, 51));
  const SampleBatch batch = apply_channel({h, cfg.seed}, spec, x, derive_seed(cfg.seed, 52));
  MiBreakdown r;
  r.h_y = output_entropy(batch.y, spec.structure, cfg.knn);
  const Eigen::Index nc = cfg.n_conditional > 0 ? std::min(cfg.n_conditional, x.cols()) : x.cols();
  r.h_y_given_x = conditional_entropy_exact(h, spec, x.leftCols(nc), derive_seed(cfg.seed, 53), cfg.marginal);
  r.mi.value = r.h_y.value - r.h_y_given_x.value;
  r.mi.std_err = std::hypot(r.h_y.std_err, r.h_y_given_x.std_err);
  r.mi.k = cfg.knn.k;
  r.mi.n = cfg.n_samples;
  r.mi.dim = r.h_y.dim;
  return r;
}

Eigen::Index default_active_antennas(Model model, Eigen::Index n_t, Eigen::Index n_r) {
  switch (model) {
    case Model::B1: return std::min(n_t, (n_r + 1) / 2);
    case Model::B2: return std::min(n_t, n_r);
    default: return n_t;
  }
}

MiBreakdown gaussian_input_mi_lower(const Eigen::MatrixXcd& h, Model model, double power, Eigen::Index n_active,
                                    const EstimatorConfig& cfg, bool channel_inversion) {
  if (model == Model::A) throw std::invalid_argument("gaussian_input_mi_lower: model must be B1, B2, B3 or Common");
  const Eigen::Index n_t = h.cols();
  const Eigen::Index na = n_active > 0 ? n_active : default_active_antennas(model, n_t, h.rows());
  if (na > n_t) throw std::invalid_argument("gaussian_input_mi_lower: n_active exceeds n_t");
  if (!channel_inversion) return mutual_information_estimate(h, model, gaussian_input(n_t, na), power, cfg);
  if (model != Model::B2) throw std::invalid_argument("gaussian_input_mi_lower: channel inversion applies to B2");
  if (h.rows() < na) throw std::invalid_argument("gaussian_input_mi_lower: channel inversion needs n_r >= n_active");
  // (H'^H H')^{-1/2} H'^H y = (H'^H H')^{1/2} (e^{j theta} o x) + white noise
  const Eigen::MatrixXcd hp = h.leftCols(na);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hp.adjoint() * hp);
  const Eigen::MatrixXcd root = es.operatorSqrt();
  return mutual_information_estimate(root, model, gaussian_input(na, na), power, cfg);
}

GrowthReport hY_growth_check(const Eigen::MatrixXcd& h, const std::vector<double>& powers, const EstimatorConfig& cfg) {
  const PhaseNoiseSpec spec{PhaseStructure::RxOnly, IidUniform{}};
  const Eigen::Index n_t = h.cols(), n_r = h.rows();
  GrowthReport rep;
  std::vector<PrelogPoint> pts;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const Eigen::MatrixXcd x = gaussian_input(n_t, n_t)(cfg.n_samples, powers[i], derive_seed(cfg.seed, 60 + 2 * i));
    const SampleBatch b = apply_channel({h, cfg.seed}, spec, x, derive_seed(cfg.seed, 61 + 2 * i));
    GrowthPoint gp{powers[i], circular_entropy(b.y, cfg.knn)};
    pts.push_back({std::log2(powers[i]), gp.h_y.value, gp.h_y.std_err});
    rep.points.push_back(gp);
  }
  rep.fit = fit_prelog(pts, static_cast<int>(pts.size()));
  rep.predicted_slope = 0.5 * static_cast<double>(n_r) + 0.5 * static_cast<double>(std::min(n_r, 2 * n_t - 1));
  return rep;
}

static std::vector<Eigen::VectorXd> alpha_vectors(const std::vector<double>& grid, Eigen::Index n) {
  std::vector<Eigen::VectorXd> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Eigen::VectorXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = grid[idx[i]];
    out.push_back(a);
    Eigen::Index i = n - 1;
    while (i >= 0 && ++idx[i] == grid.size()) idx[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

DualitySweep duality_upper_estimate(const Eigen::MatrixXcd& h, Model model, const InputSampler& sampler, double power,
                                    const EstimatorConfig& cfg, const DualityConfig& dcfg) {
  if (model != Model::A && model != Model::B1) throw std::invalid_argument("duality_upper_estimate: model A or B1");
  if (dcfg.alpha_grid.empty()) throw std::invalid_argument("duality_upper_estimate: empty alpha grid");
  for (double a : dcfg.alpha_grid)
    if (!(a > 0.0 && a < 1.0)) throw std::domain_error("duality_upper_estimate: alpha must lie in (0, 1)");
  const Eigen::Index n_t = h.cols(), n_r = h.rows();
  const Eigen::Index n = cfg.n_samples;
  const PhaseNoiseSpec spec = uniform_spec(model);

  const double a = canonical_scaling(model, h);
  const Eigen::MatrixXcd xt = sampler(n, power, derive_seed(cfg.seed, 71)) / a;
  std::vector<Eigen::MatrixXcd> g(static_cast<std::size_t>(n_t));
  for (Eigen::Index u = 0; u < n_t; ++u) g[u] = canonical_transform(h, u);

  std::vector<Eigen::Index> u_of(static_cast<std::size_t>(n));
  std::map<Eigen::Index, std::vector<Eigen::Index>> groups;
  for (Eigen::Index t = 0; t < n; ++t) {
    u_of[t] = strongest_index(xt.col(t));
    groups[u_of[t]].push_back(t);
  }
  std::vector<Eigen::Index> kept;
  for (auto& [u, idx] : groups)
    if (static_cast<Eigen::Index>(idx.size()) >= dcfg.min_group) kept.insert(kept.end(), idx.begin(), idx.end());
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) throw EstimationError("duality_upper_estimate: no index group large enough", NAN);
  const Eigen::Index nk = static_cast<Eigen::Index>(kept.size());

  const PhaseDraws ph = sample_phase_matrix(spec, n_r, n_t, n, derive_seed(cfg.seed, 72));
  Rng rng = make_rng(cfg.seed, 73);
  Eigen::MatrixXcd w(n_r, nk);
  Eigen::MatrixXcd xk(n_t, nk);
  for (Eigen::Index j = 0; j < nk; ++j) {
    const Eigen::Index t = kept[j];
    const Eigen::MatrixXd th = ph.path_phases(t);
    const Eigen::MatrixXcd& gu = g[u_of[t]];
    for (Eigen::Index i = 0; i < n_r; ++i) {
      cd acc = complex_normal(rng);
      for (Eigen::Index k = 0; k < n_t; ++k) acc += gu(i, k) * std::polar(1.0, th(i, k)) * xt(k, t);
      w(i, j) = acc;
    }
    xk.col(j) = xt.col(t);
  }

  // h(W | U) over the retained index groups
  double h_wu = 0.0, var_wu = 0.0;
  double cond = 0.0, var_cond = 0.0;
  for (auto& [u, idx] : groups) {
    if (static_cast<Eigen::Index>(idx.size()) < dcfg.min_group) continue;
    const double pu = static_cast<double>(idx.size()) / static_cast<double>(nk);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < nk; ++j)
      if (u_of[kept[j]] == u) cols.push_back(j);
    Eigen::MatrixXcd wu(n_r, static_cast<Eigen::Index>(cols.size()));
    Eigen::MatrixXcd xu(n_t, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      wu.col(static_cast<Eigen::Index>(c)) = w.col(cols[c]);
      xu.col(static_cast<Eigen::Index>(c)) = xk.col(cols[c]);
    }
    const EntropyEstimate e = output_entropy(wu, spec.structure, cfg.knn);
    h_wu += pu * e.value;
    var_wu += pu * pu * e.std_err * e.std_err;
    if (dcfg.estimate_cond) {
      Eigen::Index nc = xu.cols();
      if (cfg.n_conditional > 0) nc = std::min(nc, std::max<Eigen::Index>(2, cfg.n_conditional * xu.cols() / nk));
      const EntropyEstimate c =
          conditional_entropy_exact(g[u], spec, xu.leftCols(nc), derive_seed(cfg.seed, 80 + u), cfg.marginal);
      cond += pu * c.value;
      var_cond += pu * pu * c.std_err * c.std_err;
    }
  }

  MiBreakdown lower;
  if (dcfg.estimate_mi_lower) lower = mutual_information_estimate(h, model, sampler, power, cfg);

  DualitySweep sweep;
  const double mu = dcfg.mu > 0.0 ? dcfg.mu : std::min(1.0 / power, 1.0);
  const double lb = cond_entropy_lb_terms(model, n_r, xk);
  const double ub = cond_entropy_ub_terms(n_r, xk);
  double best = INFINITY;
  for (const Eigen::VectorXd& av : alpha_vectors(dcfg.alpha_grid, n_r)) {
    const AuxGammaParams p{av, mu};
    double m = 0.0, m2 = 0.0;
    for (Eigen::Index j = 0; j < nk; ++j) {
      const double v = -nats_to_bits(aux_logq_modelA(w.col(j), p));
      const double d = v - m;
      m += d / static_cast<double>(j + 1);
      m2 += d * (v - m);
    }
    BoundRow r;
    r.model = model;
    r.n_t = n_t;
    r.n_r = n_r;
    r.power = power;
    r.alphas = av;
    r.mu = mu;
    r.duality_term = m;
    r.se_duality = std::sqrt(m2 / static_cast<double>(nk - 1) / static_cast<double>(nk));
    r.h_w_given_u = h_wu;
    r.se_h_w_given_u = std::sqrt(var_wu);
    r.lb_terms = lb;
    r.ub_terms = model == Model::B1 ? ub : NAN;
    r.dropped_mass = 1.0 - static_cast<double>(nk) / static_cast<double>(n);
    if (dcfg.estimate_cond) {
      r.cond_term = cond;
      r.se_cond = std::sqrt(var_cond);
      r.mi_upper = r.duality_term + std::log2(static_cast<double>(n_t)) - r.cond_term;
      r.se_mi_upper = std::hypot(r.se_duality, r.se_cond);
    } else {
      r.cond_term = NAN;
      r.se_cond = NAN;
    }
    if (dcfg.estimate_mi_lower) {
      r.mi_lower = lower.mi.value;
      r.se_mi_lower = lower.mi.std_err;
    }
    if (m < best) {
      best = m;
      sweep.best = sweep.rows.size();
    }
    sweep.rows.push_back(r);
  }
  return sweep;
}

}  // namespace pnlab
