#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "darts/tensor.hpp"

namespace darts {

/// Candidate operations. The enumerator value is the alpha coordinate of the op.
enum class OpKind : std::uint8_t {
  kZero = 0,
  kIdentity = 1,
  kLinearTanh = 2,
  kLinearRelu = 3,
  kLinearSigmoid = 4,
};

inline constexpr std::size_t kNumOps = 5;

/// Registry order: [zero, identity, linear_tanh, linear_relu, linear_sigmoid].
inline constexpr std::array<OpKind, kNumOps> kOpRegistry = {
    OpKind::kZero, OpKind::kIdentity, OpKind::kLinearTanh, OpKind::kLinearRelu,
    OpKind::kLinearSigmoid};

constexpr std::size_t op_index(OpKind kind) { return static_cast<std::size_t>(kind); }
OpKind op_from_index(std::size_t index);

std::string_view op_name(OpKind kind);
OpKind op_from_name(std::string_view name);

constexpr bool is_parameterized(OpKind kind) {
  return kind == OpKind::kLinearTanh || kind == OpKind::kLinearRelu ||
         kind == OpKind::kLinearSigmoid;
}

/// Weights owned by one op on one edge. Parameter-free kinds leave `weight` empty.
struct OpParams {
  Value weight;  // (hidden, hidden)
};

/// zero -> 0, identity -> x, linear_sigma -> sigma(x W). x is (batch, hidden) or (hidden).
Value apply_op(OpKind kind, const OpParams& params, const Value& x);

/// Uniform in [-1/sqrt(hidden), 1/sqrt(hidden)] for parameterized kinds.
Tensor init_op_weight(std::size_t hidden, std::mt19937_64& rng);
OpParams init_op_params(OpKind kind, std::size_t hidden, std::mt19937_64& rng);

}  // namespace darts
