#include "darts/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "darts/optim.hpp"
#include "darts/search.hpp"

namespace darts {

double unrolled_val_loss(BilevelTask& task, std::span<const double> w, std::span<const double> alpha,
                         double xi, const Batch& train, const Batch& val) {
  std::vector<double> w_prime(w.begin(), w.end());
  if (xi != 0.0) {
    const Evaluation e = task.evaluate(Objective::kTrain, train, w, alpha, {true, false});
    for (std::size_t i = 0; i < w_prime.size(); ++i) w_prime[i] -= xi * e.weight_grad[i];
  }
  return task.evaluate(Objective::kValidation, val, w_prime, alpha, {false, false}).loss;
}

std::vector<double> finite_difference_hypergradient(BilevelTask& task, std::span<const double> w,
                                                    std::span<const double> alpha, double xi,
                                                    const Batch& train, const Batch& val,
                                                    double step) {
  std::vector<double> a(alpha.begin(), alpha.end());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double orig = a[i];
    a[i] = orig + step;
    const double up = unrolled_val_loss(task, w, a, xi, train, val);
    a[i] = orig - step;
    const double down = unrolled_val_loss(task, w, a, xi, train, val);
    a[i] = orig;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

namespace {

std::vector<double> central_alpha_grad_difference(BilevelTask& task, std::span<const double> w,
                                                  std::span<const double> alpha,
                                                  std::span<const double> v, const Batch& train,
                                                  double h) {
  std::vector<double> shifted(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + h * v[i];
  const auto plus = task.evaluate(Objective::kTrain, train, shifted, alpha, {false, true}).alpha_grad;
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] - h * v[i];
  const auto minus = task.evaluate(Objective::kTrain, train, shifted, alpha, {false, true}).alpha_grad;
  std::vector<double> out(plus.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (plus[i] - minus[i]) / (2.0 * h);
  return out;
}

}  // namespace

std::vector<double> richardson_hvp(BilevelTask& task, std::span<const double> w,
                                   std::span<const double> alpha, std::span<const double> v,
                                   const Batch& train, double step) {
  const double norm = l2_norm(v);
  if (norm == 0.0) return std::vector<double>(alpha.size(), 0.0);
  const double h = step / norm;
  // Two Richardson levels on central differences: error O(h^6).
  const auto d1 = central_alpha_grad_difference(task, w, alpha, v, train, h);
  const auto d2 = central_alpha_grad_difference(task, w, alpha, v, train, h / 2);
  const auto d4 = central_alpha_grad_difference(task, w, alpha, v, train, h / 4);
  std::vector<double> out(d1.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r1 = (4.0 * d2[i] - d1[i]) / 3.0;
    const double r2 = (4.0 * d4[i] - d2[i]) / 3.0;
    out[i] = (16.0 * r2 - r1) / 15.0;
  }
  return out;
}

std::vector<double> hypergradient_with_hvp(BilevelTask& task, std::span<const double> w,
                                           std::span<const double> alpha, double xi,
                                           const Batch& train, const Batch& val,
                                           bool use_richardson) {
  if (!use_richardson) {
    return arch_gradient_second_order(task, w, alpha, xi, train, val).grad;
  }
  std::vector<double> w_prime(w.begin(), w.end());
  const Evaluation tr = task.evaluate(Objective::kTrain, train, w, alpha, {true, false});
  for (std::size_t i = 0; i < w_prime.size(); ++i) w_prime[i] -= xi * tr.weight_grad[i];
  const Evaluation outer = task.evaluate(Objective::kValidation, val, w_prime, alpha, {true, true});
  const auto hvp = richardson_hvp(task, w, alpha, outer.weight_grad, train);
  std::vector<double> out = outer.alpha_grad;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= xi * hvp[i];
  return out;
}

double relative_l2_error(std::span<const double> actual, std::span<const double> expected) {
  if (actual.size() != expected.size()) throw std::invalid_argument("relative_l2_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    num += (actual[i] - expected[i]) * (actual[i] - expected[i]);
    den += expected[i] * expected[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

FidelityReport run_fidelity_suite(const FidelityOptions& o) {
  FidelityReport report;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t n = 0; n < o.networks; ++n) {
    SyntheticConfig sc;
    sc.samples = o.rows;
    sc.dims = o.dims;
    sc.classes = 2;
    sc.clusters_per_class = 1;
    sc.noise = 1.0;
    sc.test_fraction = 0.0;
    sc.seed = rng();
    auto data = std::make_shared<const Dataset>(holdout_split(make_synthetic_classification(sc), 0.5, rng()));
    CellSpec spec;
    spec.intermediates = o.intermediates;
    spec.hidden = o.hidden;
    CellClassifierTask task(data, spec);

    const std::vector<double> w = task.initial_weights(rng());
    std::vector<double> alpha(task.alpha_count());
    for (double& a : alpha) a = 0.5 * normal(rng);
    auto pool_train = task.rows(Objective::kTrain);
    auto pool_val = task.rows(Objective::kValidation);
    pool_train.resize(std::min(pool_train.size(), o.batch));
    pool_val.resize(std::min(pool_val.size(), o.batch));
    const Batch train{pool_train}, val{pool_val};

    const auto reference = finite_difference_hypergradient(task, w, alpha, o.xi, train, val, o.fd_step);
    const auto with_eps_rule = hypergradient_with_hvp(task, w, alpha, o.xi, train, val, false);
    const auto with_exact = hypergradient_with_hvp(task, w, alpha, o.xi, train, val, true);

    FidelityCase c;
    c.parameters = task.weight_count();
    c.alpha_size = task.alpha_count();
    c.error_eps_rule = relative_l2_error(with_eps_rule, reference);
    c.error_exact_hvp = relative_l2_error(with_exact, reference);
    report.max_error_eps_rule = std::max(report.max_error_eps_rule, c.error_eps_rule);
    report.max_error_exact_hvp = std::max(report.max_error_exact_hvp, c.error_exact_hvp);
    report.cases.push_back(c);
  }
  report.passed = !report.cases.empty() && report.max_error_eps_rule < o.tolerance_eps_rule &&
                  report.max_error_exact_hvp < o.tolerance_exact_hvp;
  return report;
}

}  // namespace darts
