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

#include <cstddef>
#include <functional>
#include <string>

namespace pnlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kEulerGamma = 0.57721566490153286061;

inline double nats_to_bits(double v) { return v / kLn2; }
inline double bits_to_nats(double v) { return v * kLn2; }

enum class MomentMethod { series, quadrature, monte_carlo };

std::string to_string(MomentMethod m);

/// A scalar moment in bits together with how it was obtained.
/// For monte_carlo values abs_tol holds one standard error.
struct LogMoment {
  double value = 0.0;
  MomentMethod method = MomentMethod::series;
  double abs_tol = 0.0;
};

/// max(log2 x, 0). Throws std::domain_error for x <= 0.
double log_plus(double x);

double log_gamma(double x);
double digamma(double x);
double beta_function(double x, double y);
double log_beta(double x, double y);

/// log I0(x) - x for x >= 0, stable for large arguments.
double log_i0e(double x);
inline double log_bessel_i0(double x) { return log_i0e(x) + x; }

/// E[log2 X] for X ~ noncentral chi-square with k degrees of freedom and
/// noncentrality lambda, via the Poisson mixture of central moments.
/// Throws EstimationError (carrying the partial sum in bits) if the series
/// has not met tol within the iteration cap.
LogMoment expected_log_chi2(int k, double lambda, double tol = 1e-12, long max_terms = 10000000);

/// Monte-Carlo E[log2 |sin Theta|] from n draws of sampler.
LogMoment log_abs_sin_moment(const std::function<double()>& theta_sampler, std::size_t n);

/// Lower bound on E[log2 |sin Theta|] for a phase with differential entropy
/// h_theta (bits), from the density family |sin theta|^(-alpha) on [0, 2pi).
double log_sin_lower_bound(double h_theta, double alpha);

/// Differential entropy (bits) of a wrapped normal phase with variance sigma2.
double wrapped_normal_entropy_bits(double sigma2);

}  // namespace pnlab
