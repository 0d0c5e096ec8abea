// Copyright 2026 The HistoForge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "histoforge/diffusion.hpp"

#include <cmath>
#include <string>

#include "histoforge/error.hpp"

namespace histoforge {
namespace {

void check_shapes(std::span<const float> a, std::span<const float> b, const char* what) {
  require(a.size() == b.size(), Errc::dimension_mismatch, std::string(what) + ": shape mismatch");
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
  require(!beta_.empty(), Errc::invalid_argument, "schedule needs at least one step");
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size());
  double cumulative = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    require(beta_[i] > 0.0 && beta_[i] < 1.0, Errc::invalid_argument,
            "beta values must lie in (0, 1)");
    alpha_[i] = 1.0 - beta_[i];
    cumulative *= alpha_[i];
    alpha_bar_[i] = cumulative;
  }
}

std::size_t NoiseSchedule::index(int t) const {
  require(t >= 1 && t <= steps(), Errc::out_of_range,
          "step " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  return static_cast<std::size_t>(t - 1);
}

Tensor<float> NoiseSchedule::to_tensor() const {
  const auto n = beta_.size();
  Tensor<float> t({3, static_cast<std::uint64_t>(n)});
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = static_cast<float>(beta_[i]);
    t.data[n + i] = static_cast<float>(alpha_[i]);
    t.data[2 * n + i] = static_cast<float>(alpha_bar_[i]);
  }
  return t;
}

NoiseSchedule linear_schedule(double beta_start, double beta_end, int steps) {
  require(steps >= 1, Errc::invalid_argument, "schedule needs T >= 1");
  require(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0, Errc::invalid_argument,
          "need 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  betas.back() = steps == 1 ? beta_start : beta_end;
  return NoiseSchedule(std::move(betas));
}

Latent forward_closed(std::span<const float> z0, int t, std::span<const float> eps,
                      const NoiseSchedule& schedule) {
  check_shapes(z0, eps, "forward_closed");
  require(t >= 1, Errc::out_of_range, "forward_closed: step must be >= 1");
  const double abar = schedule.alpha_bar(t);
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  Latent z(z0.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = static_cast<float>(a * z0[i] + b * eps[i]);
  return z;
}

Latent forward_step(std::span<const float> z_prev, int t, const NoiseSchedule& schedule, Rng& rng) {
  const double beta = schedule.beta(t);
  const double keep = std::sqrt(1.0 - beta);
  const double noise = std::sqrt(beta);
  Latent z(z_prev.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = static_cast<float>(keep * z_prev[i] + noise * rng.normal());
  return z;
}

TrainingPair make_training_pair(std::span<const float> z0, int t, const NoiseSchedule& schedule,
                                Rng& rng) {
  schedule.beta(t);  // range check before drawing
  TrainingPair pair;
  pair.eps.resize(z0.size());
  rng.fill_normal(pair.eps);
  pair.z_t = forward_closed(z0, t, pair.eps, schedule);
  return pair;
}

Latent ddpm_reverse_step(std::span<const float> z_t, int t, std::span<const float> eps_hat,
                         const NoiseSchedule& schedule, Rng& rng) {
  check_shapes(z_t, eps_hat, "ddpm_reverse_step");
  const double beta = schedule.beta(t);
  const double alpha = schedule.alpha(t);
  const double abar = schedule.alpha_bar(t);
  const double abar_prev = schedule.alpha_bar(t - 1);
  const double scale = 1.0 / std::sqrt(alpha);
  const double eps_coef = beta / std::sqrt(1.0 - abar);
  const double sigma = t == 1 ? 0.0 : std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar));
  Latent z(z_t.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double v = scale * (z_t[i] - eps_coef * eps_hat[i]);
    if (sigma > 0.0) v += sigma * rng.normal();
    z[i] = static_cast<float>(v);
  }
  return z;
}

Latent sample(const Denoiser& denoiser, const NoiseSchedule& schedule, std::size_t size,
              const LatentCondition* cond, Rng& rng) {
  require(static_cast<bool>(denoiser), Errc::invalid_argument, "sample: no denoiser");
  Latent z(size);
  rng.fill_normal(z);
  for (int t = schedule.steps(); t >= 1; --t) {
    const Latent eps_hat = denoiser(z, t, cond);
    require(eps_hat.size() == z.size(), Errc::dimension_mismatch,
            "denoiser changed the latent shape at step " + std::to_string(t));
    for (float v : eps_hat)
      require(std::isfinite(v), Errc::numerical,
              "denoiser produced a non-finite value at step " + std::to_string(t));
    z = ddpm_reverse_step(z, t, eps_hat, schedule, rng);
  }
  return z;
}

Denoiser analytic_gaussian_denoiser(std::vector<double> mu, std::vector<double> var,
                                    const NoiseSchedule& schedule) {
  require(!mu.empty() && !var.empty(), Errc::invalid_argument, "mu and var must be non-empty");
  for (double v : var) require(v > 0.0, Errc::invalid_argument, "variance must be positive");
  return [mu = std::move(mu), var = std::move(var), schedule](
             std::span<const float> z_t, int t, const LatentCondition*) {
    require(mu.size() == 1 || mu.size() == z_t.size(), Errc::dimension_mismatch,
            "mu does not match the latent size");
    require(var.size() == 1 || var.size() == z_t.size(), Errc::dimension_mismatch,
            "var does not match the latent size");
    const double abar = schedule.alpha_bar(t);
    const double root_abar = std::sqrt(abar);
    const double root_noise = std::sqrt(1.0 - abar);
    Latent eps(z_t.size());
    for (std::size_t i = 0; i < z_t.size(); ++i) {
      const double m0 = mu.size() == 1 ? mu[0] : mu[i];
      const double v0 = var.size() == 1 ? var[0] : var[i];
      // Posterior mean of z0 given z_t under the Gaussian prior.
      const double post_mean =
          (root_abar * v0 * z_t[i] + (1.0 - abar) * m0) / (abar * v0 + (1.0 - abar));
      eps[i] = static_cast<float>((z_t[i] - root_abar * post_mean) / root_noise);
    }
    return eps;
  };
}

}  // namespace histoforge
