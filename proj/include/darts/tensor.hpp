#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace darts {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. Rank 0 is a scalar.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_.at(1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_.at(1) + c]; }

  /// Value of a single-element tensor.
  double item() const;

  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Primitive {
  kLeaf,
  kAdd,
  kSubtract,
  kScale,
  kMultiply,
  kMatmul,
  kTanh,
  kRelu,
  kSigmoid,
  kSoftmax,
  kConcat,
  kMean,
  kSum,
  kMse,
  kSoftmaxCrossEntropy,
  kReshape,
  kPick,
};

const char* primitive_name(Primitive kind);

/// Non-tensor arguments of a primitive. Only the fields a kind documents are read.
struct PrimitiveAttrs {
  double scalar = 1.0;     // kScale
  std::size_t axis = 0;    // kSoftmax, kConcat, kMean
  std::size_t index = 0;   // kPick (flat index)
  Shape shape;             // kReshape
};

class Tape;

/// A tensor that is either detached (a plain constant) or a node on a Tape.
class Value {
 public:
  Value() = default;
  explicit Value(Tensor t);

  const Tensor& data() const;
  const Shape& shape() const { return data().shape(); }
  std::size_t size() const { return data().size(); }
  double item() const { return data().item(); }

  bool empty() const { return tape_ == nullptr && !detached_; }
  bool on_tape() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t tape_id() const { return id_; }

  /// Gradient slot; null unless this is a tape parameter after backward().
  const Tensor* grad() const;

 private:
  friend class Tape;
  Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  std::shared_ptr<const Tensor> detached_;
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run recording of primitive applications. Records are appended in
/// evaluation order, so the record list is always topologically sorted.
/// A Tape is not copyable or movable: Values refer to it by address.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is filled by backward().
  Value parameter(Tensor t);
  /// Leaf that participates in the graph but never receives a gradient.
  Value constant(Tensor t);

  Value record(Primitive kind, std::span<const Value> inputs, const PrimitiveAttrs& attrs,
               Tensor output, std::vector<double> saved = {});

  /// Reverse sweep from a scalar loss. Overwrites the gradient of every parameter.
  void backward(const Value& loss);

  const Tensor& value(std::size_t id) const { return records_.at(id).value; }
  const Tensor* grad(std::size_t id) const;
  std::size_t size() const { return records_.size(); }
  /// Number of non-leaf records.
  std::size_t primitive_count() const { return primitive_count_; }

 private:
  struct Record {
    Primitive kind = Primitive::kLeaf;
    std::vector<std::size_t> inputs;
    PrimitiveAttrs attrs;
    Tensor value;
    std::vector<double> saved;
    Tensor grad;
    bool parameter = false;
    bool requires_grad = false;
    bool has_grad = false;
  };

  void propagate(const Record& rec);
  Tensor& grad_slot(std::size_t id);

  std::vector<Record> records_;
  std::size_t primitive_count_ = 0;
};

/// Evaluates one primitive. Records on the inputs' tape when any input is taped;
/// all taped inputs must share one tape.
Value apply_primitive(Primitive kind, std::span<const Value> inputs,
                      const PrimitiveAttrs& attrs = {});

/// Same data, no tape participation.
Value detach(const Value& v);

/// Free-function form of backward for a loss on a tape.
void backward(const Value& loss);

// Convenience wrappers over apply_primitive.
Value add(const Value& a, const Value& b);
Value subtract(const Value& a, const Value& b);
Value scale(const Value& a, double c);
Value multiply(const Value& a, const Value& b);
Value matmul(const Value& a, const Value& b);
Value tanh(const Value& a);
Value relu(const Value& a);
Value sigmoid(const Value& a);
Value softmax(const Value& a, std::size_t axis);
Value concat(std::span<const Value> parts, std::size_t axis);
Value mean(const Value& a, std::size_t axis);
Value sum(const Value& a);
Value mse_loss(const Value& prediction, const Value& target);
/// Mean over rows of -log softmax(logits)[label]. labels holds integral class ids.
Value softmax_cross_entropy(const Value& logits, const Value& labels);
Value reshape(const Value& a, Shape shape);
Value pick(const Value& a, std::size_t flat_index);

}  // namespace darts
