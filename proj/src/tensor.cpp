#include "darts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace darts {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto extent : shape_) {
    if (extent == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto extent : shape_) {
    if (extent == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape_));
  }
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " +
                     to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("tensor: item() on non-scalar shape " + to_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

const char* primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kAdd: return "add";
    case Primitive::kSubtract: return "subtract";
    case Primitive::kScale: return "scale";
    case Primitive::kMultiply: return "multiply";
    case Primitive::kMatmul: return "matmul";
    case Primitive::kTanh: return "tanh";
    case Primitive::kRelu: return "relu";
    case Primitive::kSigmoid: return "sigmoid";
    case Primitive::kSoftmax: return "softmax";
    case Primitive::kConcat: return "concat";
    case Primitive::kMean: return "mean";
    case Primitive::kSum: return "sum";
    case Primitive::kMse: return "mse";
    case Primitive::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case Primitive::kReshape: return "reshape";
    case Primitive::kPick: return "pick";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Value

Value::Value(Tensor t) : detached_(std::make_shared<const Tensor>(std::move(t))) {}

const Tensor& Value::data() const {
  if (tape_) return tape_->value(id_);
  if (!detached_) throw std::logic_error("value: access to an empty Value");
  return *detached_;
}

const Tensor* Value::grad() const { return tape_ ? tape_->grad(id_) : nullptr; }

namespace {

[[noreturn]] void mismatch(Primitive kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(primitive_name(kind)) + ": shape mismatch " + to_string(a) +
                   " vs " + to_string(b));
}

[[noreturn]] void bad_shape(Primitive kind, const std::string& what) {
  throw ShapeError(std::string(primitive_name(kind)) + ": " + what);
}

void require_arity(Primitive kind, std::span<const Value> inputs, std::size_t n) {
  if (inputs.size() != n) {
    bad_shape(kind, "expected " + std::to_string(n) + " inputs, got " +
                        std::to_string(inputs.size()));
  }
}

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(Primitive kind, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    bad_shape(kind, "axis " + std::to_string(axis) + " out of range for " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Elementwise binary shape rule: equal shapes, or one side is rank 0.
Shape broadcast_shape(Primitive kind, const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (a.empty()) return b;
  if (b.empty()) return a;
  mismatch(kind, a, b);
}

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const Shape& out_shape, F f) {
  Tensor out(out_shape);
  const bool sa = a.size() == 1 && out.size() != 1;
  const bool sb = b.size() == 1 && out.size() != 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(a[sa ? 0 : i], b[sb ? 0 : i]);
  }
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// out[m,n] (+)= sum_k A[m,k] B[k,n] with optional transposes, row-major.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> out,
          std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? a[p * m + i] : a[i * k + p];
      if (av == 0.0) continue;
      if (trans_b) {
        for (std::size_t j = 0; j < n; ++j) row[j] += av * b[j * k + p];
      } else {
        const double* brow = b.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
      }
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Reduce a gradient of out_shape down to an operand that may have been broadcast.
void accumulate_broadcast(Tensor& dst, std::span<const double> g) {
  if (dst.size() == g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  } else {
    double s = 0.0;
    for (double v : g) s += v;
    dst[0] += s;
  }
}

struct Forward {
  Tensor value;
  std::vector<double> saved;
};

Forward forward(Primitive kind, std::span<const Value> in, const PrimitiveAttrs& attrs) {
  switch (kind) {
    case Primitive::kLeaf:
      bad_shape(kind, "leaves are created through Tape::parameter or Tape::constant");
    case Primitive::kAdd:
    case Primitive::kSubtract:
    case Primitive::kMultiply: {
      require_arity(kind, in, 2);
      const Tensor& a = in[0].data();
      const Tensor& b = in[1].data();
      const Shape s = broadcast_shape(kind, a.shape(), b.shape());
      if (kind == Primitive::kAdd) return {binary(a, b, s, std::plus<>()), {}};
      if (kind == Primitive::kSubtract) return {binary(a, b, s, std::minus<>()), {}};
      return {binary(a, b, s, std::multiplies<>()), {}};
    }
    case Primitive::kScale: {
      require_arity(kind, in, 1);
      const double c = attrs.scalar;
      return {unary(in[0].data(), [c](double x) { return c * x; }), {}};
    }
    case Primitive::kMatmul: {
      require_arity(kind, in, 2);
      const Tensor& a = in[0].data();
      const Tensor& b = in[1].data();
      if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        mismatch(kind, a.shape(), b.shape());
      }
      Tensor out(Shape{a.dim(0), b.dim(1)});
      gemm(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1), false, false);
      return {std::move(out), {}};
    }
    case Primitive::kTanh:
      require_arity(kind, in, 1);
      return {unary(in[0].data(), [](double x) { return std::tanh(x); }), {}};
    case Primitive::kRelu:
      require_arity(kind, in, 1);
      return {unary(in[0].data(), [](double x) { return x > 0.0 ? x : 0.0; }), {}};
    case Primitive::kSigmoid:
      require_arity(kind, in, 1);
      return {unary(in[0].data(), stable_sigmoid), {}};
    case Primitive::kSoftmax: {
      require_arity(kind, in, 1);
      const Tensor& a = in[0].data();
      const AxisSplit s = split_axis(kind, a.shape(), attrs.axis);
      Tensor out(a.shape());
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          auto idx = [&](std::size_t k) { return (o * s.len + k) * s.inner + i; };
          double mx = a[idx(0)];
          for (std::size_t k = 1; k < s.len; ++k) mx = std::max(mx, a[idx(k)]);
          double z = 0.0;
          for (std::size_t k = 0; k < s.len; ++k) z += (out[idx(k)] = std::exp(a[idx(k)] - mx));
          for (std::size_t k = 0; k < s.len; ++k) out[idx(k)] /= z;
        }
      }
      return {std::move(out), {}};
    }
    case Primitive::kConcat: {
      if (in.empty()) bad_shape(kind, "needs at least one input");
      const Shape& first = in[0].shape();
      const AxisSplit s0 = split_axis(kind, first, attrs.axis);
      std::size_t total = 0;
      for (const auto& v : in) {
        const Shape& sh = v.shape();
        if (sh.size() != first.size()) mismatch(kind, first, sh);
        for (std::size_t d = 0; d < sh.size(); ++d) {
          if (d != attrs.axis && sh[d] != first[d]) mismatch(kind, first, sh);
        }
        total += sh[attrs.axis];
      }
      Shape out_shape = first;
      out_shape[attrs.axis] = total;
      Tensor out(out_shape);
      std::size_t offset = 0;
      for (const auto& v : in) {
        const Tensor& t = v.data();
        const std::size_t len = t.dim(attrs.axis);
        for (std::size_t o = 0; o < s0.outer; ++o) {
          std::copy_n(t.data().data() + o * len * s0.inner, len * s0.inner,
                      out.data().data() + (o * total + offset) * s0.inner);
        }
        offset += len;
      }
      return {std::move(out), {}};
    }
    case Primitive::kMean: {
      require_arity(kind, in, 1);
      const Tensor& a = in[0].data();
      const AxisSplit s = split_axis(kind, a.shape(), attrs.axis);
      Shape out_shape = a.shape();
      out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(attrs.axis));
      Tensor out(out_shape);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          double acc = 0.0;
          for (std::size_t k = 0; k < s.len; ++k) acc += a[(o * s.len + k) * s.inner + i];
          out[o * s.inner + i] = acc / static_cast<double>(s.len);
        }
      }
      return {std::move(out), {}};
    }
    case Primitive::kSum: {
      require_arity(kind, in, 1);
      double acc = 0.0;
      for (double v : in[0].data().data()) acc += v;
      return {Tensor::scalar(acc), {}};
    }
    case Primitive::kMse: {
      require_arity(kind, in, 2);
      const Tensor& p = in[0].data();
      const Tensor& t = in[1].data();
      if (p.shape() != t.shape()) mismatch(kind, p.shape(), t.shape());
      double acc = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
      return {Tensor::scalar(acc / static_cast<double>(p.size())), {}};
    }
    case Primitive::kSoftmaxCrossEntropy: {
      require_arity(kind, in, 2);
      const Tensor& logits = in[0].data();
      const Tensor& labels = in[1].data();
      if (logits.rank() != 2 || labels.rank() != 1 || labels.dim(0) != logits.dim(0)) {
        mismatch(kind, logits.shape(), labels.shape());
      }
      const std::size_t rows = logits.dim(0), classes = logits.dim(1);
      std::vector<double> probs(logits.size());
      double loss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double lv = labels[r];
        if (lv < 0 || lv >= static_cast<double>(classes) || lv != std::floor(lv)) {
          bad_shape(kind, "label " + std::to_string(lv) + " outside [0, " +
                              std::to_string(classes) + ")");
        }
        const double* row = logits.data().data() + r * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += (probs[r * classes + c] = std::exp(row[c] - mx));
        for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= z;
        loss += -(row[static_cast<std::size_t>(lv)] - mx - std::log(z));
      }
      return {Tensor::scalar(loss / static_cast<double>(rows)), std::move(probs)};
    }
    case Primitive::kReshape: {
      require_arity(kind, in, 1);
      const Tensor& a = in[0].data();
      if (shape_size(attrs.shape) != a.size()) mismatch(kind, a.shape(), attrs.shape);
      return {a.reshaped(attrs.shape), {}};
    }
    case Primitive::kPick: {
      require_arity(kind, in, 1);
      const Tensor& a = in[0].data();
      if (attrs.index >= a.size()) {
        bad_shape(kind, "index " + std::to_string(attrs.index) + " out of range for " +
                            to_string(a.shape()));
      }
      return {Tensor::scalar(a[attrs.index]), {}};
    }
  }
  bad_shape(kind, "unknown primitive");
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Value Tape::parameter(Tensor t) {
  Record rec;
  rec.value = std::move(t);
  rec.parameter = true;
  rec.requires_grad = true;
  records_.push_back(std::move(rec));
  return Value(this, records_.size() - 1);
}

Value Tape::constant(Tensor t) {
  Record rec;
  rec.value = std::move(t);
  records_.push_back(std::move(rec));
  return Value(this, records_.size() - 1);
}

Value Tape::record(Primitive kind, std::span<const Value> inputs, const PrimitiveAttrs& attrs,
                   Tensor output, std::vector<double> saved) {
  Record rec;
  rec.kind = kind;
  rec.attrs = attrs;
  rec.saved = std::move(saved);
  rec.inputs.reserve(inputs.size());
  for (const auto& v : inputs) {
    std::size_t id = 0;
    if (v.tape() == this) {
      id = v.tape_id();
    } else {
      id = constant(v.data()).tape_id();
    }
    rec.inputs.push_back(id);
    rec.requires_grad = rec.requires_grad || records_[id].requires_grad;
  }
  rec.value = std::move(output);
  records_.push_back(std::move(rec));
  ++primitive_count_;
  return Value(this, records_.size() - 1);
}

const Tensor* Tape::grad(std::size_t id) const {
  const Record& rec = records_.at(id);
  return rec.parameter && rec.has_grad ? &rec.grad : nullptr;
}

Tensor& Tape::grad_slot(std::size_t id) {
  Record& rec = records_[id];
  if (!rec.has_grad) {
    rec.grad = Tensor(rec.value.shape(), 0.0);
    rec.has_grad = true;
  }
  return rec.grad;
}

void Tape::backward(const Value& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss is not recorded on this tape");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                to_string(loss.shape()));
  }
  for (auto& rec : records_) {
    rec.has_grad = false;
    rec.grad = Tensor();
  }
  grad_slot(loss.tape_id())[0] = 1.0;
  for (std::size_t id = loss.tape_id() + 1; id-- > 0;) {
    const Record& rec = records_[id];
    if (rec.kind == Primitive::kLeaf || !rec.requires_grad || !rec.has_grad) continue;
    propagate(rec);
  }
  for (std::size_t id = 0; id < records_.size(); ++id) {
    if (records_[id].parameter) grad_slot(id);
  }
}

void Tape::propagate(const Record& rec) {
  const Tensor& g = rec.grad;
  const auto wants = [&](std::size_t k) { return records_[rec.inputs[k]].requires_grad; };
  const auto in_value = [&](std::size_t k) -> const Tensor& { return records_[rec.inputs[k]].value; };

  switch (rec.kind) {
    case Primitive::kLeaf:
      return;
    case Primitive::kAdd:
    case Primitive::kSubtract: {
      if (wants(0)) accumulate_broadcast(grad_slot(rec.inputs[0]), g.data());
      if (wants(1)) {
        Tensor tmp = g;
        if (rec.kind == Primitive::kSubtract) {
          for (double& v : tmp.data()) v = -v;
        }
        accumulate_broadcast(grad_slot(rec.inputs[1]), tmp.data());
      }
      return;
    }
    case Primitive::kMultiply: {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        const Tensor& other = in_value(1 - k);
        Tensor tmp(g.shape());
        const bool so = other.size() == 1 && g.size() != 1;
        for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = g[i] * other[so ? 0 : i];
        accumulate_broadcast(grad_slot(rec.inputs[k]), tmp.data());
      }
      return;
    }
    case Primitive::kScale: {
      if (!wants(0)) return;
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += rec.attrs.scalar * g[i];
      return;
    }
    case Primitive::kMatmul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
      if (wants(0)) gemm(g.data(), b.data(), grad_slot(rec.inputs[0]).data(), m, n, k, false, true);
      if (wants(1)) gemm(a.data(), g.data(), grad_slot(rec.inputs[1]).data(), k, m, n, true, false);
      return;
    }
    case Primitive::kTanh: {
      if (!wants(0)) return;
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = rec.value[i];
        dst[i] += g[i] * (1.0 - y * y);
      }
      return;
    }
    case Primitive::kRelu: {
      if (!wants(0)) return;
      const Tensor& x = in_value(0);
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) dst[i] += g[i];
      }
      return;
    }
    case Primitive::kSigmoid: {
      if (!wants(0)) return;
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = rec.value[i];
        dst[i] += g[i] * y * (1.0 - y);
      }
      return;
    }
    case Primitive::kSoftmax: {
      if (!wants(0)) return;
      const Tensor& y = rec.value;
      const AxisSplit s = split_axis(rec.kind, y.shape(), rec.attrs.axis);
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          auto idx = [&](std::size_t k) { return (o * s.len + k) * s.inner + i; };
          double dot = 0.0;
          for (std::size_t k = 0; k < s.len; ++k) dot += g[idx(k)] * y[idx(k)];
          for (std::size_t k = 0; k < s.len; ++k) dst[idx(k)] += y[idx(k)] * (g[idx(k)] - dot);
        }
      }
      return;
    }
    case Primitive::kConcat: {
      const AxisSplit s = split_axis(rec.kind, g.shape(), rec.attrs.axis);
      std::size_t offset = 0;
      for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
        const std::size_t len = in_value(k).dim(rec.attrs.axis);
        if (wants(k)) {
          Tensor& dst = grad_slot(rec.inputs[k]);
          for (std::size_t o = 0; o < s.outer; ++o) {
            const double* src = g.data().data() + (o * s.len + offset) * s.inner;
            double* out = dst.data().data() + o * len * s.inner;
            for (std::size_t i = 0; i < len * s.inner; ++i) out[i] += src[i];
          }
        }
        offset += len;
      }
      return;
    }
    case Primitive::kMean: {
      if (!wants(0)) return;
      const AxisSplit s = split_axis(rec.kind, in_value(0).shape(), rec.attrs.axis);
      Tensor& dst = grad_slot(rec.inputs[0]);
      const double inv = 1.0 / static_cast<double>(s.len);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t k = 0; k < s.len; ++k) {
          for (std::size_t i = 0; i < s.inner; ++i) {
            dst[(o * s.len + k) * s.inner + i] += g[o * s.inner + i] * inv;
          }
        }
      }
      return;
    }
    case Primitive::kSum: {
      if (!wants(0)) return;
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (double& v : dst.data()) v += g[0];
      return;
    }
    case Primitive::kMse: {
      const Tensor& p = in_value(0);
      const Tensor& t = in_value(1);
      const double c = 2.0 * g[0] / static_cast<double>(p.size());
      if (wants(0)) {
        Tensor& dst = grad_slot(rec.inputs[0]);
        for (std::size_t i = 0; i < p.size(); ++i) dst[i] += c * (p[i] - t[i]);
      }
      if (wants(1)) {
        Tensor& dst = grad_slot(rec.inputs[1]);
        for (std::size_t i = 0; i < p.size(); ++i) dst[i] -= c * (p[i] - t[i]);
      }
      return;
    }
    case Primitive::kSoftmaxCrossEntropy: {
      if (!wants(0)) return;
      const Tensor& logits = in_value(0);
      const Tensor& labels = in_value(1);
      const std::size_t rows = logits.dim(0), classes = logits.dim(1);
      const double c = g[0] / static_cast<double>(rows);
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto label = static_cast<std::size_t>(labels[r]);
        for (std::size_t k = 0; k < classes; ++k) {
          const double target = k == label ? 1.0 : 0.0;
          dst[r * classes + k] += c * (rec.saved[r * classes + k] - target);
        }
      }
      return;
    }
    case Primitive::kReshape: {
      if (!wants(0)) return;
      Tensor& dst = grad_slot(rec.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      return;
    }
    case Primitive::kPick: {
      if (!wants(0)) return;
      grad_slot(rec.inputs[0])[rec.attrs.index] += g[0];
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Free functions

Value apply_primitive(Primitive kind, std::span<const Value> inputs, const PrimitiveAttrs& attrs) {
  Tape* tape = nullptr;
  for (const auto& v : inputs) {
    if (v.empty()) bad_shape(kind, "empty input value");
    if (!v.on_tape()) continue;
    if (tape && v.tape() != tape) bad_shape(kind, "inputs recorded on different tapes");
    tape = v.tape();
  }
  Forward f = forward(kind, inputs, attrs);
  if (!tape) return Value(std::move(f.value));
  return tape->record(kind, inputs, attrs, std::move(f.value), std::move(f.saved));
}

Value detach(const Value& v) { return Value(v.data()); }

void backward(const Value& loss) {
  if (!loss.on_tape()) throw std::invalid_argument("backward: loss is not recorded on a tape");
  loss.tape()->backward(loss);
}

namespace {
Value unary_op(Primitive kind, const Value& a, const PrimitiveAttrs& attrs = {}) {
  const Value in[] = {a};
  return apply_primitive(kind, in, attrs);
}
Value binary_op(Primitive kind, const Value& a, const Value& b) {
  const Value in[] = {a, b};
  return apply_primitive(kind, in);
}
}  // namespace

Value add(const Value& a, const Value& b) { return binary_op(Primitive::kAdd, a, b); }
Value subtract(const Value& a, const Value& b) { return binary_op(Primitive::kSubtract, a, b); }
Value multiply(const Value& a, const Value& b) { return binary_op(Primitive::kMultiply, a, b); }
Value matmul(const Value& a, const Value& b) { return binary_op(Primitive::kMatmul, a, b); }
Value mse_loss(const Value& p, const Value& t) { return binary_op(Primitive::kMse, p, t); }
Value softmax_cross_entropy(const Value& logits, const Value& labels) {
  return binary_op(Primitive::kSoftmaxCrossEntropy, logits, labels);
}

Value scale(const Value& a, double c) {
  PrimitiveAttrs attrs;
  attrs.scalar = c;
  return unary_op(Primitive::kScale, a, attrs);
}
Value tanh(const Value& a) { return unary_op(Primitive::kTanh, a); }
Value relu(const Value& a) { return unary_op(Primitive::kRelu, a); }
Value sigmoid(const Value& a) { return unary_op(Primitive::kSigmoid, a); }
Value sum(const Value& a) { return unary_op(Primitive::kSum, a); }

Value softmax(const Value& a, std::size_t axis) {
  PrimitiveAttrs attrs;
  attrs.axis = axis;
  return unary_op(Primitive::kSoftmax, a, attrs);
}

Value mean(const Value& a, std::size_t axis) {
  PrimitiveAttrs attrs;
  attrs.axis = axis;
  return unary_op(Primitive::kMean, a, attrs);
}

Value concat(std::span<const Value> parts, std::size_t axis) {
  PrimitiveAttrs attrs;
  attrs.axis = axis;
  return apply_primitive(Primitive::kConcat, parts, attrs);
}

Value reshape(const Value& a, Shape shape) {
  PrimitiveAttrs attrs;
  attrs.shape = std::move(shape);
  return unary_op(Primitive::kReshape, a, attrs);
}

Value pick(const Value& a, std::size_t flat_index) {
  PrimitiveAttrs attrs;
  attrs.index = flat_index;
  return unary_op(Primitive::kPick, a, attrs);
}

}  // namespace darts
