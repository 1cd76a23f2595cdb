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

#include "pnlab/conditional_density.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pnlab/mathfn.hpp"
#include "pnlab/parallel.hpp"

namespace pnlab {

namespace {

const double kLogPi = std::log(kPi);
const double kTwoPi = 2.0 * kPi;

double wrap_angle(double v) {
  double r = std::fmod(v, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

/// log-integrand of one phase group as a function of the relative phases.
struct Integrand {
  bool vector_mode = false;
  Eigen::VectorXcd c0;  // reference column
  Eigen::MatrixXcd c;   // relative columns
  Eigen::VectorXcd y;
  double y_norm2 = 0.0;

  int dims() const { return static_cast<int>(c.cols()); }

  double operator()(const double* phi) const {
    Eigen::VectorXcd m = c0;
    for (Eigen::Index k = 0; k < c.cols(); ++k) m += c.col(k) * std::polar(1.0, phi[k]);
    const Eigen::Index n = y.size();
    if (vector_mode) {
      const double u = std::abs(m.dot(y));
      const double dist = y_norm2 + m.squaredNorm() - 2.0 * u;
      return -dist + log_i0e(2.0 * u) - static_cast<double>(n) * kLogPi;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double am = std::abs(m(i));
      const double ay = std::abs(y(i));
      acc += -kLogPi - (am - ay) * (am - ay) + log_i0e(2.0 * am * ay);
    }
    return acc;
  }
};

struct Component {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;  // lower factor of the covariance
  Eigen::MatrixXd prec;  // inverse covariance
  double log_norm = 0.0; // -0.5 log det(2 pi Sigma)
  double weight = 0.0;
};

struct Local {
  Eigen::VectorXd phi;
  double value = 0.0;
  Eigen::MatrixXd hess;
  bool ok = false;
};

/// Finite-difference gradient and Hessian with per-coordinate steps.
void derivatives(const Integrand& f, const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& step,
                 Eigen::VectorXd& g, Eigen::MatrixXd& h) {
  const int d = static_cast<int>(x.size());
  g.resize(d);
  h.resize(d, d);
  Eigen::VectorXd p = x;
  std::vector<double> fp(d), fm(d);
  for (int i = 0; i < d; ++i) {
    p(i) = x(i) + step(i);
    fp[i] = f(p.data());
    p(i) = x(i) - step(i);
    fm[i] = f(p.data());
    p(i) = x(i);
    g(i) = (fp[i] - fm[i]) / (2.0 * step(i));
    h(i, i) = (fp[i] - 2.0 * fx + fm[i]) / (step(i) * step(i));
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      double acc = 0.0;
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          p(i) = x(i) + si * step(i);
          p(j) = x(j) + sj * step(j);
          acc += si * sj * f(p.data());
        }
      }
      p(i) = x(i);
      p(j) = x(j);
      h(i, j) = h(j, i) = acc / (4.0 * step(i) * step(j));
    }
  }
}

void adapt_steps(const Eigen::MatrixXd& h, Eigen::VectorXd& step) {
  for (Eigen::Index i = 0; i < step.size(); ++i) {
    const double curv = std::max(-h(i, i), 1e-8);
    step(i) = std::clamp(0.05 / std::sqrt(curv), 1e-7, 0.05);
  }
}

/// Damped Newton ascent on the torus.
Local ascend(const Integrand& f, Eigen::VectorXd x) {
  const int d = static_cast<int>(x.size());
  Local out;
  double fx = f(x.data());
  Eigen::VectorXd step = Eigen::VectorXd::Constant(d, 1e-3);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (int iter = 0; iter < 60; ++iter) {
    derivatives(f, x, fx, step, g, h);
    adapt_steps(h, step);
    derivatives(f, x, fx, step, g, h);
    const Eigen::MatrixXd neg = -h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg);
    const double min_eig = es.eigenvalues().minCoeff();
    double lambda = min_eig > 0.0 ? 0.0 : -min_eig + 1e-3 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
    bool moved = false;
    Eigen::VectorXd s;
    for (int tries = 0; tries < 30; ++tries) {
      const Eigen::MatrixXd a = neg + lambda * Eigen::MatrixXd::Identity(d, d);
      s = a.ldlt().solve(g);
      const double len = s.norm();
      if (len > 1.0) s *= 1.0 / len;
      const Eigen::VectorXd xn = x + s;
      const double fn = f(xn.data());
      if (fn >= fx) {
        x = xn;
        fx = fn;
        moved = true;
        break;
      }
      lambda = std::max(4.0 * lambda, 1e-3 * (1.0 + std::abs(min_eig)));
    }
    if (!moved || s.norm() < 1e-10) break;
  }
  derivatives(f, x, fx, step, g, h);
  adapt_steps(h, step);
  derivatives(f, x, fx, step, g, h);
  for (int i = 0; i < d; ++i) x(i) = wrap_angle(x(i));
  out.phi = x;
  out.value = fx;
  out.hess = h;
  out.ok = std::isfinite(fx) && h.allFinite();
  return out;
}

double torus_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double t = std::abs(wrap_angle(a(i) - b(i)));
    t = std::min(t, kTwoPi - t);
    acc = std::max(acc, t);
  }
  return acc;
}

std::vector<Eigen::VectorXd> grid_starts(const Integrand& f, int d) {
  const int g = d == 1 ? 16 : (d == 2 ? 8 : (d == 3 ? 5 : 4));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(g);
  std::vector<double> vals(total);
  std::vector<int> idx(d);
  Eigen::VectorXd p(d);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t r = t;
    for (int i = 0; i < d; ++i) {
      idx[i] = static_cast<int>(r % g);
      r /= g;
      p(i) = kTwoPi * idx[i] / g;
    }
    vals[t] = f(p.data());
  }
  std::vector<std::pair<double, std::size_t>> maxima;
  for (std::size_t t = 0; t < total; ++t) {
    bool is_max = true;
    std::size_t stride = 1;
    for (int i = 0; i < d && is_max; ++i) {
      const int c = static_cast<int>((t / stride) % g);
      const std::size_t up = t - c * stride + ((c + 1) % g) * stride;
      const std::size_t dn = t - c * stride + ((c + g - 1) % g) * stride;
      if (vals[up] > vals[t] || vals[dn] > vals[t]) is_max = false;
      stride *= g;
    }
    if (is_max) maxima.emplace_back(vals[t], t);
  }
  std::sort(maxima.begin(), maxima.end(), [](auto& a, auto& b) { return a.first > b.first; });
  if (maxima.size() > 4) maxima.resize(4);
  std::vector<Eigen::VectorXd> out;
  for (auto& [v, t] : maxima) {
    std::size_t r = t;
    for (int i = 0; i < d; ++i) {
      p(i) = kTwoPi * static_cast<double>(r % g) / g;
      r /= g;
    }
    out.push_back(p);
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// log of the uniform average of exp(f) over the d-torus.
double log_phase_average(const Integrand& f, const Eigen::VectorXd* hint, Rng& rng, const MarginalOptions& opt) {
  const int d = f.dims();
  if (d == 0) return f(nullptr);

  std::vector<Eigen::VectorXd> starts = grid_starts(f, d);
  if (hint) starts.insert(starts.begin(), *hint);
  std::vector<Local> modes;
  for (const auto& s : starts) {
    Local loc = ascend(f, s);
    if (!loc.ok) continue;
    bool dup = false;
    for (auto& m : modes) {
      if (torus_distance(m.phi, loc.phi) < 1e-4) {
        dup = true;
        break;
      }
    }
    if (!dup) modes.push_back(std::move(loc));
  }

  std::vector<Component> comps;
  std::vector<double> log_mass;
  for (const auto& m : modes) {
    const Eigen::MatrixXd neg = -m.hess;
    Eigen::LLT<Eigen::MatrixXd> llt(neg);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::MatrixXd cov0 = llt.solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd cov = opt.inflate * opt.inflate * cov0;
    if ((cov.diagonal().array().sqrt() > opt.max_std).any()) continue;
    Eigen::LLT<Eigen::MatrixXd> cl(cov);
    if (cl.info() != Eigen::Success) continue;
    Component c;
    c.mean = m.phi;
    c.chol = cl.matrixL();
    c.prec = cov.inverse();
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(c.chol(i, i));
    c.log_norm = -0.5 * (d * std::log(kTwoPi) + logdet);
    double logdet0 = logdet - 2.0 * d * std::log(opt.inflate);
    log_mass.push_back(m.value + 0.5 * (d * std::log(kTwoPi) + logdet0));
    comps.push_back(std::move(c));
  }
  double uniform_weight = 1.0;
  if (!comps.empty()) {
    const double lse = log_sum_exp(log_mass);
    for (std::size_t i = 0; i < comps.size(); ++i) comps[i].weight = (1.0 - opt.defensive) * std::exp(log_mass[i] - lse);
    uniform_weight = opt.defensive;
  }

  const double log_unif = -d * std::log(kTwoPi);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::vector<double> terms(opt.n_importance);
  Eigen::VectorXd phi(d), z(d), diff(d);
  std::vector<int> img(d);
  for (int s = 0; s < opt.n_importance; ++s) {
    double pick = uni(rng);
    int which = -1;
    if (pick >= uniform_weight) {
      pick -= uniform_weight;
      which = 0;
      while (which + 1 < static_cast<int>(comps.size()) && pick >= comps[which].weight) {
        pick -= comps[which].weight;
        ++which;
      }
    }
    if (which < 0) {
      for (int i = 0; i < d; ++i) phi(i) = kTwoPi * uni(rng);
    } else {
      for (int i = 0; i < d; ++i) z(i) = nrm(rng);
      phi = comps[which].mean + comps[which].chol * z;
      for (int i = 0; i < d; ++i) phi(i) = wrap_angle(phi(i));
    }
    // proposal density, wrapped Gaussians summed over neighbouring images
    std::vector<double> parts{std::log(uniform_weight) + log_unif};
    for (const auto& c : comps) {
      int n_img = 1;
      for (int i = 0; i < d; ++i) n_img *= 3;
      std::vector<double> ip(n_img);
      for (int t = 0; t < n_img; ++t) {
        int r = t;
        for (int i = 0; i < d; ++i) {
          img[i] = r % 3 - 1;
          r /= 3;
        }
        for (int i = 0; i < d; ++i) diff(i) = phi(i) + kTwoPi * img[i] - c.mean(i);
        ip[t] = c.log_norm - 0.5 * diff.dot(c.prec * diff);
      }
      parts.push_back(std::log(c.weight) + log_sum_exp(ip));
    }
    const double log_q = log_sum_exp(parts);
    terms[s] = f(phi.data()) + log_unif - log_q;
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(opt.n_importance));
}

Eigen::Index reference_index(const Eigen::MatrixXcd& cols, const std::vector<Eigen::Index>& active) {
  Eigen::Index best = active.front();
  for (Eigen::Index k : active)
    if (cols.col(k).squaredNorm() > cols.col(best).squaredNorm()) best = k;
  return best;
}

bool uniform_marginal(const PhaseNoiseSpec& spec) { return !std::holds_alternative<Degenerate>(spec.process); }

}  // namespace

ConditionalDensity::ConditionalDensity(Eigen::MatrixXcd h, PhaseNoiseSpec spec, MarginalOptions opt)
    : h_(std::move(h)), spec_(spec), opt_(opt) {
  if (opt_.n_importance < 1) throw std::invalid_argument("MarginalOptions: n_importance must be >= 1");
  if (!(opt_.defensive > 0.0 && opt_.defensive <= 1.0))
    throw std::invalid_argument("MarginalOptions: defensive weight must lie in (0, 1]");
}

int ConditionalDensity::numeric_dims(const Eigen::VectorXcd& x) const {
  int active = 0;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (x(k) != cd(0.0, 0.0)) ++active;
  if (!uniform_marginal(spec_) || active == 0) return 0;
  switch (spec_.structure) {
    case PhaseStructure::PerPath:
    case PhaseStructure::TxRx:
    case PhaseStructure::TxOnly: return active - 1;
    default: return 0;
  }
}

double ConditionalDensity::log_density(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y, Rng& rng,
                                       const Eigen::MatrixXd* path_phases) const {
  const Eigen::Index n_r = h_.rows();
  const Eigen::Index n_t = h_.cols();
  if (x.size() != n_t || y.size() != n_r) throw std::invalid_argument("ConditionalDensity: dimension mismatch");

  if (spec_.structure == PhaseStructure::None || !uniform_marginal(spec_)) {
    Eigen::VectorXcd m;
    if (spec_.structure == PhaseStructure::None) {
      m = h_ * x;
    } else {
      PhaseNoiseSpec one = spec_;
      const PhaseDraws d = sample_phase_matrix(one, n_r, n_t, 1, 0);
      const Eigen::MatrixXd th = d.path_phases(0);
      Eigen::MatrixXcd g(n_r, n_t);
      for (Eigen::Index i = 0; i < n_r; ++i)
        for (Eigen::Index k = 0; k < n_t; ++k) g(i, k) = h_(i, k) * std::polar(1.0, th(i, k));
      m = g * x;
    }
    return -static_cast<double>(n_r) * kLogPi - (y - m).squaredNorm();
  }

  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < n_t; ++k)
    if (x(k) != cd(0.0, 0.0)) active.push_back(k);
  Eigen::MatrixXcd cols(n_r, n_t);
  for (Eigen::Index k = 0; k < n_t; ++k) cols.col(k) = h_.col(k) * x(k);

  Integrand f;
  f.y = y;
  f.y_norm2 = y.squaredNorm();

  if (active.empty()) {
    f.vector_mode = true;
    f.c0 = Eigen::VectorXcd::Zero(n_r);
    f.c.resize(n_r, 0);
    return f(nullptr);
  }

  const auto build_group = [&](const Eigen::MatrixXcd& cc, Eigen::Index ref, Integrand& g,
                               const Eigen::VectorXd* ref_phases, Eigen::VectorXd& hint) {
    g.c0 = cc.col(ref);
    g.c.resize(cc.rows(), static_cast<Eigen::Index>(active.size()) - 1);
    hint.resize(g.c.cols());
    Eigen::Index j = 0;
    for (Eigen::Index k : active) {
      if (k == ref) continue;
      g.c.col(j) = cc.col(k);
      if (ref_phases) hint(j) = wrap_angle((*ref_phases)(k) - (*ref_phases)(ref));
      ++j;
    }
  };

  switch (spec_.structure) {
    case PhaseStructure::Common:
    case PhaseStructure::RxOnly: {
      f.vector_mode = spec_.structure == PhaseStructure::Common;
      f.c0 = cols.rowwise().sum();
      f.c.resize(n_r, 0);
      return f(nullptr);
    }
    case PhaseStructure::TxOnly:
    case PhaseStructure::TxRx: {
      f.vector_mode = spec_.structure == PhaseStructure::TxOnly;
      const Eigen::Index ref = reference_index(cols, active);
      Eigen::VectorXd hint;
      Eigen::VectorXd row0;
      if (path_phases) row0 = path_phases->row(0).transpose();
      build_group(cols, ref, f, path_phases ? &row0 : nullptr, hint);
      return log_phase_average(f, path_phases ? &hint : nullptr, rng, opt_);
    }
    case PhaseStructure::PerPath: {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n_r; ++i) {
        Integrand g;
        g.vector_mode = false;
        g.y = y.segment(i, 1);
        g.y_norm2 = std::norm(y(i));
        const Eigen::MatrixXcd row = cols.row(i);
        const Eigen::Index ref = reference_index(row, active);
        Eigen::VectorXd hint;
        Eigen::VectorXd rp;
        if (path_phases) rp = path_phases->row(i).transpose();
        build_group(row, ref, g, path_phases ? &rp : nullptr, hint);
        acc += log_phase_average(g, path_phases ? &hint : nullptr, rng, opt_);
      }
      return acc;
    }
    case PhaseStructure::None: break;
  }
  return 0.0;
}

EntropyEstimate conditional_entropy_exact(const Eigen::MatrixXcd& h, const PhaseNoiseSpec& spec,
                                          const Eigen::MatrixXcd& x, std::uint64_t seed, MarginalOptions opt) {
  const Eigen::Index n = x.cols();
  if (n < 2) throw std::invalid_argument("conditional_entropy_exact: need at least two samples");
  ChannelRealization ch{h, seed};
  const SampleBatch batch = apply_channel(ch, spec, x, derive_seed(seed, 21));
  const ConditionalDensity dens(h, spec, opt);
  const std::size_t chunks = static_cast<std::size_t>(std::min<Eigen::Index>(n, 256));
  std::vector<double> vals(static_cast<std::size_t>(n));
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_rng(seed, 5000 + c);
    const Eigen::Index lo = n * static_cast<Eigen::Index>(c) / static_cast<Eigen::Index>(chunks);
    const Eigen::Index hi = n * static_cast<Eigen::Index>(c + 1) / static_cast<Eigen::Index>(chunks);
    for (Eigen::Index t = lo; t < hi; ++t) {
      const Eigen::MatrixXd th = batch.phases.path_phases(t);
      vals[t] = -nats_to_bits(dens.log_density(batch.x.col(t), batch.y.col(t), rng, &th));
    }
  });
  double m = 0.0;
  for (double v : vals) m += v;
  m /= static_cast<double>(n);
  double var = 0.0;
  for (double v : vals) var += (v - m) * (v - m);
  var /= static_cast<double>(n - 1);
  EntropyEstimate e;
  e.value = m;
  e.std_err = std::sqrt(var / static_cast<double>(n));
  e.k = 0;
  e.n = n;
  e.dim = 2.0 * static_cast<double>(h.rows());
  return e;
}

}  // namespace pnlab
