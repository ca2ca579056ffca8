/* Copyright 2026 The Rafiki Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RAFIKI_GP_H_
#define RAFIKI_GP_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace rafiki {

// Fixed-hyper-parameter RBF kernel:
//   k(x, x') = signal_var * exp(-|x - x'|^2 / (2 lengthscale^2))
struct GpConfig {
  double lengthscale = 0.2;
  double signal_var = 1.0;
  double noise_var = 1e-4;
  // Targets are shifted to zero mean and unit variance before the fit and the
  // posterior is mapped back.
  bool standardize = true;
};

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;  // latent function variance, >= 0
};

class GaussianProcess {
 public:
  static constexpr int kMaxJitterRetries = 3;

  explicit GaussianProcess(GpConfig config) : config_(config) {}

  // Factorizes K + noise I. On failure the jitter is doubled up to
  // kMaxJitterRetries times before reporting NumericalFailure.
  absl::Status Fit(const std::vector<std::vector<double>>& x,
                   std::span<const double> y);

  absl::StatusOr<GpPosterior> Predict(std::span<const double> x) const;

  double Kernel(std::span<const double> a, std::span<const double> b) const;

  bool fitted() const { return fitted_; }
  size_t num_points() const { return train_x_.size(); }
  // Jitter actually used by the last successful fit.
  double effective_noise() const { return noise_; }
  const GpConfig& config() const { return config_; }

 private:
  GpConfig config_;
  bool fitted_ = false;
  std::vector<std::vector<double>> train_x_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double noise_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

// EI(x) = (mu - best) Phi(z) + sigma phi(z), z = (mu - best) / sigma.
// Zero-variance points score max(0, mu - best).
double ExpectedImprovement(double mean, double variance, double best);

// Index of the largest EI; the lowest index wins ties. `posteriors` must be
// nonempty.
size_t ArgmaxExpectedImprovement(std::span<const GpPosterior> posteriors,
                                 double best);

}  // namespace rafiki

#endif  // RAFIKI_GP_H_
