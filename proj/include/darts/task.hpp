#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "darts/cell.hpp"
#include "darts/data.hpp"

namespace darts {

/// Which loss a task evaluates. kUnion is the train+validation objective used
/// by joint optimization.
enum class Objective { kTrain, kValidation, kUnion };

struct Batch {
  std::vector<std::size_t> rows;  // empty for data-free tasks
};

struct GradientRequest {
  bool weights = true;
  bool alpha = true;
};

struct Evaluation {
  double loss = 0.0;
  std::vector<double> weight_grad;  // empty unless requested
  std::vector<double> alpha_grad;   // empty unless requested
};

/// Instrumentation for cost accounting. One evaluate() call is one forward
/// pass; it is additionally a weight- and/or alpha-gradient evaluation when
/// the matching gradient was requested.
struct EvaluationCounters {
  std::uint64_t forward_passes = 0;
  std::uint64_t backward_passes = 0;
  std::uint64_t weight_gradients = 0;
  std::uint64_t alpha_gradients = 0;
  std::uint64_t primitives = 0;

  bool operator==(const EvaluationCounters&) const = default;
};

/// A bilevel problem over flat weight (w) and architecture (alpha) vectors.
class BilevelTask {
 public:
  virtual ~BilevelTask() = default;

  virtual std::size_t weight_count() const = 0;
  virtual std::size_t alpha_count() const = 0;
  virtual std::vector<double> initial_weights(std::uint64_t seed) const = 0;
  virtual std::vector<double> initial_alpha() const = 0;
  /// Row pool an objective samples from. Empty for data-free tasks.
  virtual std::vector<std::size_t> rows(Objective objective) const = 0;
  virtual Evaluation evaluate(Objective objective, const Batch& batch, std::span<const double> w,
                              std::span<const double> alpha, GradientRequest request) = 0;
  /// Cell the alpha vector parameterizes, when there is one.
  virtual std::optional<CellSpec> cell_spec() const { return std::nullopt; }

  const EvaluationCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }

 protected:
  void count(GradientRequest request, std::uint64_t primitives);

  EvaluationCounters counters_;
};

/// Scalar problem with w = weights[0], alpha = alpha[0]; losses from toy_losses.
/// The union objective is L_train + L_val.
class ToyBilevelTask final : public BilevelTask {
 public:
  explicit ToyBilevelTask(AnalyticBilevelProblem problem = {}) : problem_(problem) {}

  std::size_t weight_count() const override { return 1; }
  std::size_t alpha_count() const override { return 1; }
  std::vector<double> initial_weights(std::uint64_t) const override { return {problem_.w0}; }
  std::vector<double> initial_alpha() const override { return {problem_.alpha0}; }
  std::vector<std::size_t> rows(Objective) const override { return {}; }
  Evaluation evaluate(Objective objective, const Batch& batch, std::span<const double> w,
                      std::span<const double> alpha, GradientRequest request) override;

 private:
  AnalyticBilevelProblem problem_;
};

/// Contiguous blocks of a flat parameter vector.
class ParamLayout {
 public:
  std::size_t add(Shape shape);
  std::size_t blocks() const { return shapes_.size(); }
  std::size_t total() const { return total_; }
  const Shape& shape(std::size_t block) const { return shapes_.at(block); }
  std::size_t offset(std::size_t block) const { return offsets_.at(block); }
  Tensor slice(std::span<const double> flat, std::size_t block) const;

 private:
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// Linear input projections -> cell -> linear head -> softmax cross-entropy.
/// The mixed variant owns every edge-op; the discrete variant only the
/// genotype's retained ones. Head and projections belong to w.
class CellClassifierTask final : public BilevelTask {
 public:
  CellClassifierTask(std::shared_ptr<const Dataset> data, CellSpec spec);

  std::size_t weight_count() const override { return layout_.total(); }
  std::size_t alpha_count() const override { return spec_.edge_count() * kNumOps; }
  std::vector<double> initial_weights(std::uint64_t seed) const override;
  std::vector<double> initial_alpha() const override;
  std::vector<std::size_t> rows(Objective objective) const override;
  Evaluation evaluate(Objective objective, const Batch& batch, std::span<const double> w,
                      std::span<const double> alpha, GradientRequest request) override;
  std::optional<CellSpec> cell_spec() const override { return spec_; }

  /// Classification accuracy of the mixed network on every row of `split`.
  double accuracy(SplitTag split, std::span<const double> w, std::span<const double> alpha) const;

  const Dataset& data() const { return *data_; }
  const std::shared_ptr<const Dataset>& data_ptr() const { return data_; }

 private:
  std::shared_ptr<const Dataset> data_;
  CellSpec spec_;
  ParamLayout layout_;
  std::size_t head_block_ = 0;
  // block id per (edge, op) for parameterized ops, else npos
  std::vector<std::array<std::size_t, kNumOps>> edge_blocks_;
};

/// Training budget for a derived architecture trained from scratch.
struct RetrainConfig {
  std::uint64_t steps = 300;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 3e-4;
  double grad_clip = 5.0;
  bool cosine = true;
  std::uint64_t seed = 0;
};

struct RetrainResult {
  double train_loss = 0.0;       // mean over the last logged steps
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  std::vector<double> weights;
};

/// Fixed-architecture classifier for a genotype.
class GenotypeClassifier {
 public:
  GenotypeClassifier(std::shared_ptr<const Dataset> data, Genotype genotype);

  std::size_t weight_count() const { return layout_.total(); }
  std::vector<double> initial_weights(std::uint64_t seed) const;
  Evaluation evaluate(const Batch& batch, std::span<const double> w, bool want_grad) const;
  double accuracy(SplitTag split, std::span<const double> w) const;
  double loss(SplitTag split, std::span<const double> w) const;
  const Genotype& genotype() const { return genotype_; }

 private:
  std::shared_ptr<const Dataset> data_;
  Genotype genotype_;
  ParamLayout layout_;
  std::size_t head_block_ = 0;
  std::vector<std::vector<std::size_t>> pair_blocks_;
};

/// Trains a genotype from scratch on the train split with momentum SGD and
/// reports validation metrics. Never reads test rows.
RetrainResult retrain_genotype(std::shared_ptr<const Dataset> data, const Genotype& genotype,
                               const RetrainConfig& config);

/// Shuffled pass over a row pool; reshuffles after each epoch.
class BatchSampler {
 public:
  BatchSampler(std::vector<std::size_t> pool, std::size_t batch_size, std::uint64_t seed);
  Batch next();

 private:
  std::vector<std::size_t> pool_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace darts
