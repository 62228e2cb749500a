#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "darts/ops.hpp"

using namespace darts;
using darts::testing::gradcheck;
using darts::testing::random_tensor;

TEST_SUITE("ops") {

TEST_CASE("registry order is fixed") {
  const char* names[] = {"zero", "identity", "linear_tanh", "linear_relu", "linear_sigmoid"};
  for (std::size_t i = 0; i < kNumOps; ++i) {
    CHECK(op_index(kOpRegistry[i]) == i);
    CHECK(op_name(op_from_index(i)) == names[i]);
    CHECK(op_from_name(names[i]) == kOpRegistry[i]);
  }
  CHECK_THROWS(op_from_name("conv_3x3"));
  CHECK_THROWS(op_from_index(kNumOps));
}

TEST_CASE("apply_op worked examples") {
  std::mt19937_64 rng(3);
  const Value x(random_tensor({4}, rng));
  const Value zeros = apply_op(OpKind::kZero, {}, x);
  for (double v : zeros.data().values()) CHECK(v == 0.0);
  CHECK(apply_op(OpKind::kIdentity, {}, x).data() == x.data());
  const OpParams zero_w{Value(Tensor(Shape{4, 4}))};
  const Value tanh_zero = apply_op(OpKind::kLinearTanh, zero_w, x);
  for (double v : tanh_zero.data().values()) CHECK(v == 0.0);
  CHECK(apply_op(OpKind::kZero, {}, x).shape() == x.shape());
}

TEST_CASE("linear ops compute sigma(x W)") {
  const Value x(Tensor::matrix(1, 2, {1.0, -1.0}));
  const OpParams p{Value(Tensor::matrix(2, 2, {0.5, 1.0, 0.25, -2.0}))};
  // x W = [0.25, 3.0]
  const auto relu_out = apply_op(OpKind::kLinearRelu, p, x).data().values();
  CHECK(relu_out == std::vector<double>{0.25, 3.0});
  const auto sig = apply_op(OpKind::kLinearSigmoid, p, x).data().values();
  CHECK(sig[1] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
  CHECK(apply_op(OpKind::kLinearTanh, p, x).data().values()[0] == doctest::Approx(std::tanh(0.25)));
}

TEST_CASE("missing weights are rejected") {
  const Value x(Tensor::vector({1, 2}));
  CHECK_THROWS(apply_op(OpKind::kLinearTanh, {}, x));
  CHECK_THROWS(apply_op(OpKind::kLinearRelu, {}, x));
  CHECK_THROWS(apply_op(OpKind::kLinearSigmoid, {}, x));
}

TEST_CASE("init_op_params is seeded and bounded") {
  std::mt19937_64 a(11), b(11);
  const OpParams pa = init_op_params(OpKind::kLinearRelu, 4, a);
  const OpParams pb = init_op_params(OpKind::kLinearRelu, 4, b);
  CHECK(pa.weight.data() == pb.weight.data());
  CHECK(pa.weight.shape() == Shape{4, 4});
  double largest = 0.0;
  for (double v : pa.weight.data().values()) largest = std::max(largest, std::abs(v));
  CHECK(largest <= 0.5);
  std::mt19937_64 c(12);
  const Tensor big = init_op_weight(64, c);
  double big_max = 0.0;
  for (double v : big.values()) big_max = std::max(big_max, std::abs(v));
  CHECK(big_max <= 1.0 / 8.0);
  CHECK(big_max > 0.9 / 8.0);
  CHECK(init_op_params(OpKind::kIdentity, 4, c).weight.empty());
  CHECK(init_op_params(OpKind::kZero, 4, c).weight.empty());
}

TEST_CASE("weight gradients of parameterized ops match finite differences") {
  std::mt19937_64 rng(21);
  for (OpKind kind : {OpKind::kLinearTanh, OpKind::kLinearRelu, OpKind::kLinearSigmoid}) {
    for (int t = 0; t < 5; ++t) {
      const Tensor x = random_tensor({3, 4}, rng), w = random_tensor({4, 4}, rng), r = random_tensor({3, 4}, rng);
      auto f = [&](std::span<const Value> in) {
        return sum(multiply(apply_op(kind, OpParams{in[1]}, in[0]), Value(r)));
      };
      INFO(op_name(kind));
      CHECK(gradcheck(f, {x, w}, {true, true}) < 1e-4);
    }
  }
}

TEST_CASE("zero and identity leave weight gradients at zero") {
  Tape tape;
  const Value w = tape.parameter(Tensor(Shape{2, 2}, 0.3));
  const Value x = tape.parameter(Tensor::vector({1.0, 2.0}));
  const OpParams p{w};
  tape.backward(sum(add(apply_op(OpKind::kZero, p, x), apply_op(OpKind::kIdentity, p, x))));
  for (double g : w.grad()->values()) CHECK(g == 0.0);
  CHECK(x.grad()->values() == std::vector<double>{1.0, 1.0});
}

}  // TEST_SUITE
