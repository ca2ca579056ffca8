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

#include "rafiki/gp.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "absl/strings/str_cat.h"

namespace rafiki {

double GaussianProcess::Kernel(std::span<const double> a,
                               std::span<const double> b) const {
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  const double l = config_.lengthscale;
  return config_.signal_var * std::exp(-sq / (2.0 * l * l));
}

absl::Status GaussianProcess::Fit(const std::vector<std::vector<double>>& x,
                                  std::span<const double> y) {
  if (x.empty() || x.size() != y.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("GP fit needs matching nonempty inputs, got ", x.size(),
                     " points and ", y.size(), " targets"));
  }
  fitted_ = false;
  train_x_ = x;
  const auto n = static_cast<Eigen::Index>(x.size());

  y_mean_ = 0.0;
  y_scale_ = 1.0;
  if (config_.standardize) {
    for (double v : y) y_mean_ += v;
    y_mean_ /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - y_mean_) * (v - y_mean_);
    var /= static_cast<double>(n);
    y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    target(i) = (y[static_cast<size_t>(i)] - y_mean_) / y_scale_;
  }

  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = Kernel(x[i], x[j]);
    }
  }
  double jitter = config_.noise_var;
  for (int attempt = 0; attempt <= kMaxJitterRetries; ++attempt) {
    Eigen::MatrixXd kn = k;
    kn.diagonal().array() += jitter;
    llt_.compute(kn);
    if (llt_.info() == Eigen::Success) {
      noise_ = jitter;
      alpha_ = llt_.solve(target);
      fitted_ = alpha_.allFinite();
      if (fitted_) return absl::OkStatus();
    }
    jitter = jitter > 0.0 ? 2.0 * jitter : 1e-10;
  }
  return absl::InternalError(absl::StrCat(
      "NumericalFailure: GP covariance not positive definite after ",
      kMaxJitterRetries, " jitter retries"));
}

absl::StatusOr<GpPosterior> GaussianProcess::Predict(
    std::span<const double> x) const {
  if (!fitted_) {
    return absl::FailedPreconditionError("GP posterior requested before fit");
  }
  const auto n = static_cast<Eigen::Index>(train_x_.size());
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar(i) = Kernel(train_x_[i], x);
  const double mean = kstar.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(kstar);
  const double var = std::max(0.0, config_.signal_var - v.squaredNorm());
  return GpPosterior{y_mean_ + y_scale_ * mean, var * y_scale_ * y_scale_};
}

double ExpectedImprovement(double mean, double variance, double best) {
  const double gap = mean - best;
  const double sigma = std::sqrt(std::max(0.0, variance));
  if (sigma < 1e-12) return std::max(0.0, gap);
  const double z = gap / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gap * cdf + sigma * pdf);
}

size_t ArgmaxExpectedImprovement(std::span<const GpPosterior> posteriors,
                                 double best) {
  size_t arg = 0;
  double top = -1.0;
  for (size_t i = 0; i < posteriors.size(); ++i) {
    const double ei =
        ExpectedImprovement(posteriors[i].mean, posteriors[i].variance, best);
    if (ei > top) {
      top = ei;
      arg = i;
    }
  }
  return arg;
}

}  // namespace rafiki
