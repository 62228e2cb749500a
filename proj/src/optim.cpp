#include "darts/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace darts {

namespace {

void check_sizes(const char* who, std::size_t params, std::size_t grads) {
  if (params != grads) {
    throw std::invalid_argument(std::string(who) + ": parameter length " + std::to_string(params) +
                                " does not match gradient length " + std::to_string(grads));
  }
}

void check_buffer(const char* who, std::vector<double>& buf, std::size_t n) {
  if (buf.empty()) {
    buf.assign(n, 0.0);
  } else if (buf.size() != n) {
    throw std::invalid_argument(std::string(who) + ": state buffer length " +
                                std::to_string(buf.size()) + " does not match parameters " +
                                std::to_string(n));
  }
}

}  // namespace

void sgd_momentum_step(SgdMomentumState& state, std::span<double> params,
                       std::span<const double> grads) {
  check_sizes("sgd_momentum_step", params.size(), grads.size());
  check_buffer("sgd_momentum_step", state.velocity, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& v = state.velocity[i];
    v = state.momentum * v + (grads[i] + state.weight_decay * params[i]);
    params[i] -= state.learning_rate * v;
  }
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  check_sizes("adam_step", params.size(), grads.size());
  check_buffer("adam_step", state.first_moment, params.size());
  check_buffer("adam_step", state.second_moment, params.size());
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + state.weight_decay * params[i];
    double& m = state.first_moment[i];
    double& s = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    s = state.beta2 * s + (1.0 - state.beta2) * g * g;
    params[i] -= state.learning_rate * (m / c1) / (std::sqrt(s / c2) + state.epsilon);
  }
}

double cosine_rate(const CosineSchedule& schedule, std::uint64_t t) {
  if (schedule.total_steps == 0) throw std::invalid_argument("cosine_rate: total_steps must be positive");
  if (t > schedule.total_steps) {
    throw std::out_of_range("cosine_rate: step " + std::to_string(t) + " outside [0, " +
                            std::to_string(schedule.total_steps) + "]");
  }
  if (t == schedule.total_steps) return 0.0;
  const double ratio = static_cast<double>(t) / static_cast<double>(schedule.total_steps);
  return 0.5 * schedule.initial * (1.0 + std::cos(std::numbers::pi * ratio));
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  const double norm = l2_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (double& g : grads) g *= f;
  }
  return norm;
}

}  // namespace darts
