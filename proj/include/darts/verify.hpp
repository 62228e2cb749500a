#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "darts/task.hpp"

namespace darts {

// Reference computations that only call BilevelTask::evaluate, never the
// architecture-gradient code they are used to check.

/// L_val(w - xi * grad_w L_train(w, alpha), alpha).
double unrolled_val_loss(BilevelTask& task, std::span<const double> w, std::span<const double> alpha,
                         double xi, const Batch& train, const Batch& val);

/// Central differences of unrolled_val_loss over every alpha coordinate.
std::vector<double> finite_difference_hypergradient(BilevelTask& task, std::span<const double> w,
                                                    std::span<const double> alpha, double xi,
                                                    const Batch& train, const Batch& val,
                                                    double step = 1e-5);

/// Mixed Hessian-vector product H_{alpha,w} v by Richardson-extrapolated
/// central differences of grad_alpha L_train along v.
std::vector<double> richardson_hvp(BilevelTask& task, std::span<const double> w,
                                   std::span<const double> alpha, std::span<const double> v,
                                   const Batch& train, double step = 1e-3);

/// Hypergradient assembled from an externally supplied HVP.
std::vector<double> hypergradient_with_hvp(BilevelTask& task, std::span<const double> w,
                                           std::span<const double> alpha, double xi,
                                           const Batch& train, const Batch& val,
                                           bool use_richardson);

double relative_l2_error(std::span<const double> actual, std::span<const double> expected);

struct FidelityOptions {
  std::uint64_t seed = 0;
  std::size_t networks = 20;
  std::size_t intermediates = 2;
  std::size_t hidden = 3;
  std::size_t dims = 3;
  std::size_t rows = 16;
  std::size_t batch = 8;
  double xi = 0.025;  // equals the default eta_w
  double fd_step = 1e-5;
  double tolerance_eps_rule = 1e-2;
  double tolerance_exact_hvp = 1e-4;
};

struct FidelityCase {
  std::size_t parameters = 0;
  std::size_t alpha_size = 0;
  double error_eps_rule = 0.0;   // second-order gradient vs finite differences
  double error_exact_hvp = 0.0;  // same with the Richardson HVP substituted
};

struct FidelityReport {
  std::vector<FidelityCase> cases;
  double max_error_eps_rule = 0.0;
  double max_error_exact_hvp = 0.0;
  bool passed = false;
};

/// Second-order architecture gradient on random small cell networks against
/// central differences of the one-step unrolled validation loss.
FidelityReport run_fidelity_suite(const FidelityOptions& options);

}  // namespace darts
