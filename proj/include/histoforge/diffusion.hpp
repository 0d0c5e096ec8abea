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

#ifndef HISTOFORGE_DIFFUSION_HPP
#define HISTOFORGE_DIFFUSION_HPP

#include <functional>
#include <span>
#include <vector>

#include "histoforge/conditioning.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/rng.hpp"

namespace histoforge {

/// Variance schedule indexed by step t in [1, T]. Cumulative products are
/// accumulated in double.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  /// alpha_bar(0) is 1 by convention.
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[index(t)]; }

  /// Rows beta, alpha, alpha_bar: FTensor f32 [3, T].
  Tensor<float> to_tensor() const;

 private:
  std::size_t index(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

inline constexpr double kDefaultBetaStart = 0.0015;
inline constexpr double kDefaultBetaEnd = 0.0205;
inline constexpr int kDefaultSteps = 1000;

/// beta linearly interpolated from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule linear_schedule(double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd, int steps = kDefaultSteps);

using Latent = std::vector<float>;

/// eps_hat = denoiser(z_t, t, cond). Must return a finite vector of z_t's size.
using Denoiser =
    std::function<Latent(std::span<const float> z_t, int t, const LatentCondition* cond)>;

/// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps
Latent forward_closed(std::span<const float> z0, int t, std::span<const float> eps,
                      const NoiseSchedule& schedule);

/// One ancestral step of q(z_t | z_{t-1}).
Latent forward_step(std::span<const float> z_prev, int t, const NoiseSchedule& schedule, Rng& rng);

struct TrainingPair {
  Latent z_t;
  Latent eps;
};

TrainingPair make_training_pair(std::span<const float> z0, int t, const NoiseSchedule& schedule,
                                Rng& rng);

/// Standard DDPM posterior step with sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t);
/// sigma_1 = 0, so the last step is deterministic.
Latent ddpm_reverse_step(std::span<const float> z_t, int t, std::span<const float> eps_hat,
                         const NoiseSchedule& schedule, Rng& rng);

/// Ancestral sampling from z_T ~ N(0, I) down to z_0.
Latent sample(const Denoiser& denoiser, const NoiseSchedule& schedule, std::size_t size,
              const LatentCondition* cond, Rng& rng);

/// Exact noise predictor for a diagonal Gaussian data distribution N(mu, var).
/// mu and var either match the latent size or have one element (broadcast).
Denoiser analytic_gaussian_denoiser(std::vector<double> mu, std::vector<double> var,
                                    const NoiseSchedule& schedule);

}  // namespace histoforge

#endif  // HISTOFORGE_DIFFUSION_HPP
