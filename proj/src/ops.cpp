#include "darts/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace darts {

OpKind op_from_index(std::size_t index) {
  if (index >= kNumOps) throw std::out_of_range("op index " + std::to_string(index) + " out of range");
  return kOpRegistry[index];
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kZero: return "zero";
    case OpKind::kIdentity: return "identity";
    case OpKind::kLinearTanh: return "linear_tanh";
    case OpKind::kLinearRelu: return "linear_relu";
    case OpKind::kLinearSigmoid: return "linear_sigmoid";
  }
  return "unknown";
}

OpKind op_from_name(std::string_view name) {
  for (OpKind k : kOpRegistry) {
    if (op_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown op name '" + std::string(name) + "'");
}

Value apply_op(OpKind kind, const OpParams& params, const Value& x) {
  switch (kind) {
    case OpKind::kZero:
      return scale(x, 0.0);
    case OpKind::kIdentity:
      return x;
    case OpKind::kLinearTanh:
    case OpKind::kLinearRelu:
    case OpKind::kLinearSigmoid: {
      if (params.weight.empty()) {
        throw std::invalid_argument("apply_op: " + std::string(op_name(kind)) +
                                    " requires a weight matrix");
      }
      Value in = x;
      const bool is_vector = x.shape().size() == 1;
      if (is_vector) in = reshape(x, Shape{1, x.shape()[0]});
      Value pre = matmul(in, params.weight);
      Value out = kind == OpKind::kLinearTanh   ? darts::tanh(pre)
                  : kind == OpKind::kLinearRelu ? darts::relu(pre)
                                                : darts::sigmoid(pre);
      return is_vector ? reshape(out, x.shape()) : out;
    }
  }
  throw std::invalid_argument("apply_op: unknown op kind");
}

Tensor init_op_weight(std::size_t hidden, std::mt19937_64& rng) {
  if (hidden == 0) throw std::invalid_argument("init_op_weight: hidden must be >= 1");
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-s, s);
  Tensor w(Shape{hidden, hidden});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

OpParams init_op_params(OpKind kind, std::size_t hidden, std::mt19937_64& rng) {
  if (hidden == 0) throw std::invalid_argument("init_op_params: hidden must be >= 1");
  OpParams p;
  if (is_parameterized(kind)) p.weight = Value(init_op_weight(hidden, rng));
  return p;
}

}  // namespace darts
