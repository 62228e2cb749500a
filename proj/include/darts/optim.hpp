#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace darts {

/// Heavy-ball SGD. Update: v <- mu*v + (g + lambda*p); p <- p - lr*v.
struct SgdMomentumState {
  double learning_rate = 0.025;
  double momentum = 0.9;
  double weight_decay = 3e-4;
  std::vector<double> velocity;

  bool operator==(const SgdMomentumState&) const = default;
};

/// Bias-corrected Adam; weight decay enters as lambda*p added to the gradient.
struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay = 1e-3;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  bool operator==(const AdamState&) const = default;
};

/// Cosine annealing without restart from `initial` down to zero at step `total_steps`.
struct CosineSchedule {
  double initial = 0.025;
  std::uint64_t total_steps = 1;
};

/// Applies one step in place. Velocity buffers are sized on first use.
void sgd_momentum_step(SgdMomentumState& state, std::span<double> params,
                       std::span<const double> grads);

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

double cosine_rate(const CosineSchedule& schedule, std::uint64_t t);

/// Rescales grads in place so their L2 norm is at most max_norm. Returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

double l2_norm(std::span<const double> v);

}  // namespace darts
