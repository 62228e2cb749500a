#include "darts/task.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "darts/optim.hpp"

namespace darts {

namespace {

constexpr std::size_t kNoBlock = std::numeric_limits<std::size_t>::max();

std::vector<Value> make_leaves(Tape* tape, const ParamLayout& layout, std::span<const double> flat,
                               bool as_parameters) {
  if (flat.size() != layout.total()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(flat.size()) +
                                " entries, layout needs " + std::to_string(layout.total()));
  }
  std::vector<Value> out;
  out.reserve(layout.blocks());
  for (std::size_t b = 0; b < layout.blocks(); ++b) {
    Tensor t = layout.slice(flat, b);
    if (!tape) {
      out.emplace_back(std::move(t));
    } else if (as_parameters) {
      out.push_back(tape->parameter(std::move(t)));
    } else {
      out.push_back(tape->constant(std::move(t)));
    }
  }
  return out;
}

void collect_grads(const std::vector<Value>& leaves, std::vector<double>& out) {
  out.clear();
  for (const auto& v : leaves) {
    const Tensor* g = v.grad();
    if (!g) throw std::logic_error("missing gradient for a parameter leaf");
    out.insert(out.end(), g->data().begin(), g->data().end());
  }
}

std::size_t argmax_row(const Tensor& logits, std::size_t r) {
  const std::size_t c = logits.dim(1);
  const double* row = logits.data().data() + r * c;
  return static_cast<std::size_t>(std::max_element(row, row + c) - row);
}

double init_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

void fill_uniform(std::span<double> dst, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : dst) v = dist(rng);
}

std::vector<std::size_t> all_rows(const Dataset& d, SplitTag tag) { return d.indices(tag); }

}  // namespace

void BilevelTask::count(GradientRequest request, std::uint64_t primitives) {
  ++counters_.forward_passes;
  if (request.weights || request.alpha) ++counters_.backward_passes;
  if (request.weights) ++counters_.weight_gradients;
  if (request.alpha) ++counters_.alpha_gradients;
  counters_.primitives += primitives;
}

// ---------------------------------------------------------------------------
// ToyBilevelTask

Evaluation ToyBilevelTask::evaluate(Objective objective, const Batch&, std::span<const double> w,
                                    std::span<const double> alpha, GradientRequest request) {
  if (w.size() != 1 || alpha.size() != 1) {
    throw std::invalid_argument("toy task: expects one weight and one alpha");
  }
  Tape tape;
  Value a = request.alpha ? tape.parameter(Tensor::scalar(alpha[0])) : tape.constant(Tensor::scalar(alpha[0]));
  Value x = request.weights ? tape.parameter(Tensor::scalar(w[0])) : tape.constant(Tensor::scalar(w[0]));
  Value loss;
  switch (objective) {
    case Objective::kTrain: loss = toy_train_loss(a, x); break;
    case Objective::kValidation: loss = toy_val_loss(a, x); break;
    case Objective::kUnion: loss = add(toy_train_loss(a, x), toy_val_loss(a, x)); break;
  }
  Evaluation e;
  e.loss = loss.item();
  if (request.weights || request.alpha) {
    tape.backward(loss);
    if (request.weights) e.weight_grad = {x.grad()->item()};
    if (request.alpha) e.alpha_grad = {a.grad()->item()};
  }
  count(request, tape.primitive_count());
  return e;
}

// ---------------------------------------------------------------------------
// ParamLayout

std::size_t ParamLayout::add(Shape shape) {
  shapes_.push_back(shape);
  offsets_.push_back(total_);
  total_ += shape_size(shape);
  return shapes_.size() - 1;
}

Tensor ParamLayout::slice(std::span<const double> flat, std::size_t block) const {
  const std::size_t off = offsets_.at(block);
  const std::size_t n = shape_size(shapes_[block]);
  return Tensor(shapes_[block], std::vector<double>(flat.begin() + off, flat.begin() + off + n));
}

// ---------------------------------------------------------------------------
// CellClassifierTask

CellClassifierTask::CellClassifierTask(std::shared_ptr<const Dataset> data, CellSpec spec)
    : data_(std::move(data)), spec_(spec) {
  spec_.validate();
  if (!data_ || data_->rows() == 0) throw std::invalid_argument("cell classifier: empty dataset");
  for (std::size_t i = 0; i < spec_.input_arity; ++i) layout_.add(Shape{data_->dims(), spec_.hidden});
  edge_blocks_.resize(spec_.edge_count());
  for (auto& blocks : edge_blocks_) {
    for (std::size_t o = 0; o < kNumOps; ++o) {
      blocks[o] = is_parameterized(kOpRegistry[o]) ? layout_.add(Shape{spec_.hidden, spec_.hidden}) : kNoBlock;
    }
  }
  head_block_ = layout_.add(Shape{spec_.output_width(), data_->classes()});
}

std::vector<double> CellClassifierTask::initial_weights(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<double> w(layout_.total());
  for (std::size_t b = 0; b < layout_.blocks(); ++b) {
    const std::size_t fan_in = layout_.shape(b)[0];
    fill_uniform(std::span(w).subspan(layout_.offset(b), shape_size(layout_.shape(b))),
                 init_bound(fan_in), rng);
  }
  return w;
}

std::vector<double> CellClassifierTask::initial_alpha() const { return init_alpha(spec_).flat(); }

std::vector<std::size_t> CellClassifierTask::rows(Objective objective) const {
  switch (objective) {
    case Objective::kTrain: return data_->indices(SplitTag::kTrain);
    case Objective::kValidation: return data_->indices(SplitTag::kValidation);
    case Objective::kUnion: {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < data_->rows(); ++i) {
        if (data_->tags()[i] != SplitTag::kTest) out.push_back(i);
      }
      return out;
    }
  }
  return {};
}

namespace {

struct MixedForward {
  Value logits;
  std::vector<Value> weight_leaves;
  std::vector<Value> alpha_leaves;
};

// The mixed network forward pass, shared by evaluate() (on a tape) and
// accuracy() (detached, tape == nullptr).
MixedForward mixed_forward(Tape* tape, const CellSpec& spec, const ParamLayout& layout,
                                  const std::vector<std::array<std::size_t, kNumOps>>& edge_blocks,
                                  std::size_t head_block, const Tensor& features,
                                  std::span<const double> w, std::span<const double> alpha,
                                  GradientRequest request) {
  if (alpha.size() != spec.edge_count() * kNumOps) {
    throw std::invalid_argument("cell classifier: alpha has " + std::to_string(alpha.size()) +
                                " entries, expected " + std::to_string(spec.edge_count() * kNumOps));
  }
  MixedForward f;
  f.weight_leaves = make_leaves(tape, layout, w, request.weights);
  for (std::size_t e = 0; e < spec.edge_count(); ++e) {
    Tensor row = Tensor::vector(std::vector<double>(alpha.begin() + e * kNumOps, alpha.begin() + (e + 1) * kNumOps));
    if (!tape) {
      f.alpha_leaves.emplace_back(std::move(row));
    } else if (request.alpha) {
      f.alpha_leaves.push_back(tape->parameter(std::move(row)));
    } else {
      f.alpha_leaves.push_back(tape->constant(std::move(row)));
    }
  }
  Value x = tape ? tape->constant(features) : Value(features);
  std::vector<Value> inputs;
  for (std::size_t i = 0; i < spec.input_arity; ++i) inputs.push_back(matmul(x, f.weight_leaves[i]));
  MixedCellParams params;
  params.edges.resize(spec.edge_count());
  for (std::size_t e = 0; e < spec.edge_count(); ++e) {
    for (std::size_t o = 0; o < kNumOps; ++o) {
      if (edge_blocks[e][o] != kNoBlock) params.edges[e][o].weight = f.weight_leaves[edge_blocks[e][o]];
    }
  }
  CellOutput cell = cell_forward(spec, f.alpha_leaves, params, inputs);
  f.logits = matmul(cell.output, f.weight_leaves[head_block]);
  return f;
}

}  // namespace

Evaluation CellClassifierTask::evaluate(Objective objective, const Batch& batch,
                                        std::span<const double> w, std::span<const double> alpha,
                                        GradientRequest request) {
  (void)objective;
  const Dataset::Batch data = data_->gather(batch.rows);
  Tape tape;
  MixedForward f = mixed_forward(&tape, spec_, layout_, edge_blocks_, head_block_, data.features, w,
                                 alpha, request);
  Value loss = softmax_cross_entropy(f.logits, tape.constant(data.labels));
  Evaluation e;
  e.loss = loss.item();
  if (request.weights || request.alpha) {
    tape.backward(loss);
    if (request.weights) collect_grads(f.weight_leaves, e.weight_grad);
    if (request.alpha) collect_grads(f.alpha_leaves, e.alpha_grad);
  }
  count(request, tape.primitive_count());
  return e;
}

double CellClassifierTask::accuracy(SplitTag split, std::span<const double> w,
                                    std::span<const double> alpha) const {
  const auto rows = all_rows(*data_, split);
  if (rows.empty()) throw std::invalid_argument(std::string("accuracy: split '") + split_name(split) + "' is empty");
  const Dataset::Batch data = data_->gather(rows);
  MixedForward f = mixed_forward(nullptr, spec_, layout_, edge_blocks_, head_block_, data.features,
                                 w, alpha, {false, false});
  const Tensor& logits = f.logits.data();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<double>(argmax_row(logits, r)) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------------------
// GenotypeClassifier

GenotypeClassifier::GenotypeClassifier(std::shared_ptr<const Dataset> data, Genotype genotype)
    : data_(std::move(data)), genotype_(std::move(genotype)) {
  validate_genotype(genotype_);
  if (!data_ || data_->rows() == 0) throw std::invalid_argument("genotype classifier: empty dataset");
  const CellSpec& spec = genotype_.spec;
  for (std::size_t i = 0; i < spec.input_arity; ++i) layout_.add(Shape{data_->dims(), spec.hidden});
  for (const auto& pairs : genotype_.nodes) {
    auto& blocks = pair_blocks_.emplace_back();
    for (const auto& p : pairs) {
      blocks.push_back(is_parameterized(p.op) ? layout_.add(Shape{spec.hidden, spec.hidden}) : kNoBlock);
    }
  }
  head_block_ = layout_.add(Shape{spec.output_width(), data_->classes()});
}

std::vector<double> GenotypeClassifier::initial_weights(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<double> w(layout_.total());
  for (std::size_t b = 0; b < layout_.blocks(); ++b) {
    fill_uniform(std::span(w).subspan(layout_.offset(b), shape_size(layout_.shape(b))),
                 init_bound(layout_.shape(b)[0]), rng);
  }
  return w;
}

namespace {

struct DiscreteForward {
  Value logits;
  std::vector<Value> leaves;
};

DiscreteForward discrete_network(Tape* tape, const Genotype& g, const ParamLayout& layout,
                                 const std::vector<std::vector<std::size_t>>& pair_blocks,
                                 std::size_t head_block, const Tensor& features,
                                 std::span<const double> w, bool want_grad) {
  DiscreteForward f;
  f.leaves = make_leaves(tape, layout, w, want_grad);
  Value x = tape ? tape->constant(features) : Value(features);
  std::vector<Value> inputs;
  for (std::size_t i = 0; i < g.spec.input_arity; ++i) inputs.push_back(matmul(x, f.leaves[i]));
  DiscreteCellParams params;
  for (std::size_t m = 0; m < g.nodes.size(); ++m) {
    auto& node = params.nodes.emplace_back();
    for (std::size_t p = 0; p < g.nodes[m].size(); ++p) {
      OpParams op;
      if (pair_blocks[m][p] != kNoBlock) op.weight = f.leaves[pair_blocks[m][p]];
      node.push_back(op);
    }
  }
  CellOutput cell = discrete_forward(g, params, inputs);
  f.logits = matmul(cell.output, f.leaves[head_block]);
  return f;
}

}  // namespace

Evaluation GenotypeClassifier::evaluate(const Batch& batch, std::span<const double> w,
                                        bool want_grad) const {
  const Dataset::Batch data = data_->gather(batch.rows);
  Tape tape;
  DiscreteForward f = discrete_network(&tape, genotype_, layout_, pair_blocks_, head_block_,
                                       data.features, w, want_grad);
  Value loss = softmax_cross_entropy(f.logits, tape.constant(data.labels));
  Evaluation e;
  e.loss = loss.item();
  if (want_grad) {
    tape.backward(loss);
    collect_grads(f.leaves, e.weight_grad);
  }
  return e;
}

double GenotypeClassifier::accuracy(SplitTag split, std::span<const double> w) const {
  const auto rows = all_rows(*data_, split);
  if (rows.empty()) throw std::invalid_argument(std::string("accuracy: split '") + split_name(split) + "' is empty");
  const Dataset::Batch data = data_->gather(rows);
  DiscreteForward f = discrete_network(nullptr, genotype_, layout_, pair_blocks_, head_block_,
                                       data.features, w, false);
  const Tensor& logits = f.logits.data();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<double>(argmax_row(logits, r)) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double GenotypeClassifier::loss(SplitTag split, std::span<const double> w) const {
  Batch b{all_rows(*data_, split)};
  if (b.rows.empty()) throw std::invalid_argument(std::string("loss: split '") + split_name(split) + "' is empty");
  return evaluate(b, w, false).loss;
}

RetrainResult retrain_genotype(std::shared_ptr<const Dataset> data, const Genotype& genotype,
                               const RetrainConfig& config) {
  GenotypeClassifier net(data, genotype);
  RetrainResult result;
  result.weights = net.initial_weights(config.seed);
  SgdMomentumState opt;
  opt.learning_rate = config.learning_rate;
  opt.momentum = config.momentum;
  opt.weight_decay = config.weight_decay;
  const CosineSchedule schedule{config.learning_rate, std::max<std::uint64_t>(config.steps, 1)};
  BatchSampler sampler(data->indices(SplitTag::kTrain), config.batch_size, config.seed ^ 0x9e3779b97f4a7c15ULL);
  double tail_loss = 0.0;
  std::uint64_t tail_n = 0;
  const std::uint64_t tail_start = config.steps - std::min<std::uint64_t>(config.steps, 20);
  for (std::uint64_t t = 0; t < config.steps; ++t) {
    if (config.cosine) opt.learning_rate = cosine_rate(schedule, t);
    Evaluation e = net.evaluate(sampler.next(), result.weights, true);
    if (!std::isfinite(e.loss)) throw std::runtime_error("retrain: non-finite training loss");
    clip_global_norm(e.weight_grad, config.grad_clip);
    sgd_momentum_step(opt, result.weights, e.weight_grad);
    if (t >= tail_start) {
      tail_loss += e.loss;
      ++tail_n;
    }
  }
  result.train_loss = tail_n ? tail_loss / static_cast<double>(tail_n) : 0.0;
  result.val_accuracy = net.accuracy(SplitTag::kValidation, result.weights);
  result.val_loss = net.loss(SplitTag::kValidation, result.weights);
  return result;
}

// ---------------------------------------------------------------------------
// BatchSampler

BatchSampler::BatchSampler(std::vector<std::size_t> pool, std::size_t batch_size, std::uint64_t seed)
    : pool_(std::move(pool)), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ == 0) throw std::invalid_argument("batch sampler: batch size must be positive");
  std::shuffle(pool_.begin(), pool_.end(), rng_);
}

Batch BatchSampler::next() {
  if (pool_.empty()) return {};
  Batch b;
  const std::size_t n = std::min(batch_size_, pool_.size());
  b.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cursor_ == pool_.size()) {
      std::shuffle(pool_.begin(), pool_.end(), rng_);
      cursor_ = 0;
    }
    b.rows.push_back(pool_[cursor_++]);
  }
  return b;
}

}  // namespace darts
