#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "darts/tensor.hpp"

using namespace darts;
using darts::testing::away_from_zero;
using darts::testing::gradcheck;
using darts::testing::random_tensor;

namespace {

constexpr int kTrials = 20;
constexpr double kTol = 1e-4;

Shape random_shape(std::mt19937_64& rng, std::size_t rank) {
  std::uniform_int_distribution<std::size_t> d(1, 5);
  Shape s;
  for (std::size_t i = 0; i < rank; ++i) s.push_back(d(rng));
  return s;
}

// Reduces any output to a scalar through a fixed random projection.
Value project(const Value& out, const Tensor& r) { return sum(multiply(out, Value(r))); }

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("apply_primitive worked examples") {
  const Value a(Tensor::vector({1, 2})), b(Tensor::vector({3, 4}));
  CHECK(add(a, b).data().values() == std::vector<double>{4, 6});

  const Value s = softmax(Value(Tensor::vector({0, 0, 0})), 0);
  for (double v : s.data().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Value eye(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  const Value m(Tensor::matrix(2, 2, {5, -6, 7.5, 8}));
  CHECK(matmul(eye, m).data() == m.data());
}

TEST_CASE("shape mismatch names the primitive and both shapes") {
  const Value a(Tensor(Shape{2, 3})), b(Tensor(Shape{3, 2}));
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()) == "add: shape mismatch [2,3] vs [3,2]");
  }
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(softmax_cross_entropy(a, Value(Tensor::vector({0, 5}))), ShapeError);
}

TEST_CASE("backward worked examples") {
  Tape tape;
  const Value w = tape.parameter(Tensor::vector({1, -2}));
  tape.backward(sum(multiply(w, w)));
  CHECK(w.grad()->values() == std::vector<double>{2, -4});

  Tape t2;
  const Value c = t2.parameter(Tensor::scalar(3.0));
  const Value zero = t2.constant(Tensor::scalar(0.0));
  t2.backward(multiply(tanh(zero), c));
  CHECK(c.grad()->item() == 0.0);
  CHECK(zero.grad() == nullptr);
}

TEST_CASE("backward rejects non-scalar and untaped losses") {
  Tape tape;
  const Value w = tape.parameter(Tensor::vector({1, 2}));
  CHECK_THROWS(tape.backward(w));
  CHECK_THROWS(backward(Value(Tensor::scalar(1.0))));
  Tape other;
  const Value x = other.parameter(Tensor::scalar(1.0));
  CHECK_THROWS(tape.backward(x));
  CHECK_THROWS(add(w, other.parameter(Tensor::vector({1, 2}))));
}

TEST_CASE("detach") {
  Tape tape;
  const Value x = tape.parameter(Tensor::vector({0.25, -1.5}));
  const Value y = tanh(x);
  const Value d = detach(y);
  CHECK_FALSE(d.on_tape());
  CHECK(d.data() == y.data());
  CHECK(detach(d).data() == d.data());

  tape.backward(add(sum(detach(x)), sum(tanh(scale(x, 0.0)))));
  for (double g : x.grad()->values()) CHECK(g == 0.0);
}

TEST_CASE("gradcheck: every primitive over random shapes") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> rank_d(1, 2);
  std::uniform_int_distribution<std::size_t> dim_d(1, 5);

  auto unary = [&](const char* name, auto op, bool kink) {
    for (int t = 0; t < kTrials; ++t) {
      const Shape s = random_shape(rng, rank_d(rng));
      const Tensor x = kink ? away_from_zero(s, rng) : random_tensor(s, rng, -2, 2);
      const Tensor r = random_tensor(s, rng);
      const double err = gradcheck([&](std::span<const Value> in) { return project(op(in[0]), r); }, {x}, {true});
      INFO(name << " shape " << to_string(s));
      CHECK(err < kTol);
    }
  };
  unary("tanh", [](const Value& v) { return tanh(v); }, false);
  unary("relu", [](const Value& v) { return relu(v); }, true);
  unary("sigmoid", [](const Value& v) { return sigmoid(v); }, false);
  unary("scale", [](const Value& v) { return scale(v, -1.7); }, false);

  auto binary = [&](const char* name, auto op) {
    for (int t = 0; t < kTrials; ++t) {
      const Shape s = random_shape(rng, rank_d(rng));
      const int variant = t % 3;  // same shape, scalar left, scalar right
      const Shape sa = variant == 1 ? Shape{} : s;
      const Shape sb = variant == 2 ? Shape{} : s;
      const Tensor a = random_tensor(sa, rng), b = random_tensor(sb, rng), r = random_tensor(s, rng);
      const double err = gradcheck([&](std::span<const Value> in) { return project(op(in[0], in[1]), r); },
                                   {a, b}, {true, true});
      INFO(name << " shapes " << to_string(sa) << " " << to_string(sb));
      CHECK(err < kTol);
    }
  };
  binary("add", [](const Value& a, const Value& b) { return add(a, b); });
  binary("subtract", [](const Value& a, const Value& b) { return subtract(a, b); });
  binary("multiply", [](const Value& a, const Value& b) { return multiply(a, b); });

  for (int t = 0; t < kTrials; ++t) {
    const std::size_t m = dim_d(rng), k = dim_d(rng), n = dim_d(rng);
    const Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng), r = random_tensor({m, n}, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return project(matmul(in[0], in[1]), r); }, {a, b},
                    {true, true}) < kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const Shape s = random_shape(rng, rank_d(rng));
    const std::size_t axis = t % s.size();
    const Tensor x = random_tensor(s, rng, -3, 3), r = random_tensor(s, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return project(softmax(in[0], axis), r); }, {x}, {true}) <
          kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const std::size_t rank = rank_d(rng);
    const std::size_t axis = t % rank;
    Shape s1 = random_shape(rng, rank), s2 = s1, s3 = s1;
    s2[axis] = dim_d(rng);
    s3[axis] = dim_d(rng);
    Shape so = s1;
    so[axis] = s1[axis] + s2[axis] + s3[axis];
    const Tensor a = random_tensor(s1, rng), b = random_tensor(s2, rng), c = random_tensor(s3, rng);
    const Tensor r = random_tensor(so, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return project(concat(in, axis), r); }, {a, b, c},
                    {true, false, true}) < kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const Shape s = random_shape(rng, rank_d(rng) + (t % 2));
    const std::size_t axis = t % s.size();
    Shape so = s;
    so.erase(so.begin() + static_cast<std::ptrdiff_t>(axis));
    const Tensor x = random_tensor(s, rng), r = random_tensor(so, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return project(mean(in[0], axis), r); }, {x}, {true}) < kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const Shape s = random_shape(rng, rank_d(rng));
    const Tensor x = random_tensor(s, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return sum(in[0]); }, {x}, {true}) < kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const Shape s = random_shape(rng, rank_d(rng));
    const Tensor p = random_tensor(s, rng), q = random_tensor(s, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return mse_loss(in[0], in[1]); }, {p, q}, {true, true}) <
          kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const std::size_t rows = dim_d(rng), classes = dim_d(rng) + 1;
    const Tensor logits = random_tensor({rows, classes}, rng, -3, 3);
    std::uniform_int_distribution<std::size_t> cls(0, classes - 1);
    Tensor labels(Shape{rows});
    for (double& v : labels.data()) v = static_cast<double>(cls(rng));
    CHECK(gradcheck([&](std::span<const Value> in) { return softmax_cross_entropy(in[0], in[1]); },
                    {logits, labels}, {true, false}) < kTol);
  }

  for (int t = 0; t < kTrials; ++t) {
    const Shape s = random_shape(rng, 2);
    const Tensor x = random_tensor(s, rng), r = random_tensor({s[1], s[0]}, rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return project(reshape(in[0], {s[1], s[0]}), r); }, {x},
                    {true}) < kTol);
    std::uniform_int_distribution<std::size_t> idx(0, x.size() - 1);
    const std::size_t k = idx(rng);
    CHECK(gradcheck([&](std::span<const Value> in) { return pick(in[0], k); }, {x}, {true}) < kTol);
  }
}

TEST_CASE("random two-layer network matches finite differences") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const Tensor x = random_tensor({6, 4}, rng), w1 = random_tensor({4, 5}, rng), w2 = random_tensor({5, 3}, rng);
    Tensor labels(Shape{6});
    for (std::size_t i = 0; i < 6; ++i) labels[i] = static_cast<double>(i % 3);
    auto net = [](std::span<const Value> in) {
      return softmax_cross_entropy(matmul(tanh(matmul(in[0], in[1])), in[2]), in[3]);
    };
    CHECK(gradcheck(net, {x, w1, w2, labels}, {false, true, true, false}) < kTol);
  }
}

TEST_CASE("determinism: identical inputs give bit-identical values and gradients") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tape tape;
    const Value w = tape.parameter(random_tensor({3, 4}, rng));
    const Value x = tape.constant(random_tensor({5, 3}, rng));
    const Value loss = mean(mean(sigmoid(matmul(x, w)), 0), 0);
    tape.backward(loss);
    return std::make_pair(loss.item(), w.grad()->values());
  };
  CHECK(run() == run());
}

TEST_CASE("linearity of backward") {
  std::mt19937_64 rng(5);
  const Tensor x0 = random_tensor({4}, rng);
  const double a = 0.75, b = -2.5;
  auto grad_of = [&](auto build) {
    Tape tape;
    const Value x = tape.parameter(x0);
    tape.backward(build(x));
    return x.grad()->values();
  };
  auto f = [](const Value& x) { return sum(tanh(x)); };
  auto g = [](const Value& x) { return sum(multiply(x, sigmoid(x))); };
  const auto gf = grad_of(f);
  const auto gg = grad_of(g);
  const auto combined = grad_of([&](const Value& x) { return add(scale(f(x), a), scale(g(x), b)); });
  for (std::size_t i = 0; i < combined.size(); ++i) {
    CHECK(combined[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-14));
  }
}

TEST_CASE("unreached parameters get zero gradients") {
  Tape tape;
  const Value used = tape.parameter(Tensor::vector({1, 2}));
  const Value unused = tape.parameter(Tensor::vector({3}));
  tape.backward(sum(used));
  REQUIRE(unused.grad() != nullptr);
  CHECK(unused.grad()->values() == std::vector<double>{0});
  CHECK(tape.primitive_count() == 1);
}

}  // TEST_SUITE
