#pragma once

// Test-only helpers. The finite-difference oracle evaluates functions on
// detached Values, so it never goes through Tape::backward.

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "darts/tensor.hpp"

namespace darts::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

/// Values bounded away from zero, for functions with a kink there.
inline Tensor away_from_zero(const Shape& shape, std::mt19937_64& rng, double gap = 0.1) {
  std::uniform_real_distribution<double> u(gap, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor t(shape);
  for (double& v : t.data()) v = sign(rng) ? u(rng) : -u(rng);
  return t;
}

inline double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

using ScalarFn = std::function<Value(std::span<const Value>)>;

/// Relative L2 error between tape gradients and central differences over
/// every input flagged in `differentiable`.
inline double gradcheck(const ScalarFn& f, const std::vector<Tensor>& inputs,
                        const std::vector<bool>& differentiable, double step = 1e-5) {
  Tape tape;
  std::vector<Value> taped;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    taped.push_back(differentiable[i] ? tape.parameter(inputs[i]) : tape.constant(inputs[i]));
  }
  tape.backward(f(taped));

  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!differentiable[i]) continue;
    const Tensor* g = taped[i].grad();
    analytic.insert(analytic.end(), g->data().begin(), g->data().end());
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      auto eval = [&](double delta) {
        std::vector<Value> detached;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          Tensor t = inputs[j];
          if (j == i) t[k] += delta;
          detached.emplace_back(std::move(t));
        }
        return f(detached).item();
      };
      numeric.push_back((eval(step) - eval(-step)) / (2.0 * step));
    }
  }
  return rel_l2(analytic, numeric);
}

}  // namespace darts::testing
