#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "darts/cell.hpp"
#include "darts/optim.hpp"
#include "darts/task.hpp"

namespace darts {

/// Raised when a loss or gradient stops being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SearchMode { kSecondOrder, kFirstOrder, kJoint, kRandom };
enum class JointSubMode { kCoordinate, kSimultaneous };
enum class AlphaOptimizer { kAdam, kSgd };

const char* mode_name(SearchMode mode);
SearchMode mode_from_name(const std::string& name);

struct SearchConfig {
  SearchMode mode = SearchMode::kSecondOrder;
  /// Unroll step. Unset means "the current weight learning rate".
  std::optional<double> xi;
  /// Finite-difference step is epsilon_scale / ||grad_w' L_val(w', alpha)||.
  double epsilon_scale = 0.01;

  double eta_w = 0.025;
  double momentum = 0.9;
  double weight_decay_w = 3e-4;
  bool cosine = true;
  /// Global-norm clip on w gradients; <= 0 disables.
  double grad_clip = 5.0;
  /// Unroll with the momentum-composite step instead of plain w - xi*g.
  bool momentum_unroll = false;

  AlphaOptimizer alpha_optimizer = AlphaOptimizer::kAdam;
  double eta_alpha = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay_alpha = 1e-3;

  JointSubMode joint = JointSubMode::kCoordinate;

  std::uint64_t iterations = 300;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// Write an alpha snapshot every this many iterations (0: final only).
  std::uint64_t snapshot_every = 0;

  CellSpec cell;
  RetrainConfig retrain;
  std::size_t random_samples = 8;

  void validate() const;
};

/// Defaults for the scalar problem: plain gradient descent on
/// both variables, xi = eta_w = 0.5, eta_alpha = 0.1, 500 iterations.
SearchConfig toy_search_config(SearchMode mode);

struct TrajectoryRecord {
  std::uint64_t iteration = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double eta_w = 0.0;
  double xi = 0.0;
  double epsilon_used = 0.0;
  double wall_seconds = 0.0;
  std::string alpha_snapshot;  // relative path, empty when none taken
  // Post-step alpha and w, recorded only for tasks without a cell (the scalar problem).
  std::vector<double> alpha_values;
  std::vector<double> weight_values;
};

struct AlphaSnapshot {
  std::uint64_t iteration = 0;
  std::string path;
  std::vector<double> alpha;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::vector<AlphaSnapshot> snapshots;
  std::vector<double> final_alpha;
  std::vector<double> final_weights;
  std::optional<Genotype> genotype;
  std::uint64_t skipped_corrections = 0;
  bool diverged = false;
  std::string failure;
  EvaluationCounters counters;
};

// ---------------------------------------------------------------------------
// Architecture-gradient building blocks. None of them modify w or alpha.

/// Optional momentum-composite unroll: w' = w - xi*(mu*v + g + lambda*w).
struct MomentumUnroll {
  std::span<const double> velocity;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

/// w' = w - xi * grad_w L_train(w, alpha) on `train`.
std::vector<double> unrolled_weights(BilevelTask& task, std::span<const double> w,
                                     std::span<const double> alpha, double xi, const Batch& train,
                                     const MomentumUnroll* momentum = nullptr);

struct ArchGradient {
  std::vector<double> grad;
  double val_loss = 0.0;
  double epsilon = 0.0;           // 0 when no finite difference was taken
  bool correction_skipped = false;
};

/// grad_alpha L_val(w, alpha).
ArchGradient arch_gradient_first_order(BilevelTask& task, std::span<const double> w,
                                       std::span<const double> alpha, const Batch& val);

/// [grad_alpha L_train(w + eps v) - grad_alpha L_train(w - eps v)] / (2 eps).
std::vector<double> hvp_finite_difference(BilevelTask& task, std::span<const double> w,
                                          std::span<const double> alpha, std::span<const double> v,
                                          const Batch& train, double epsilon);

/// grad_alpha L_val(w', alpha) - xi * H_{alpha,w} grad_w' L_val(w', alpha), with the
/// mixed Hessian-vector product taken by central differences. xi == 0 reduces to
/// the first-order gradient.
ArchGradient arch_gradient_second_order(BilevelTask& task, std::span<const double> w,
                                        std::span<const double> alpha, double xi,
                                        const Batch& train, const Batch& val,
                                        double epsilon_scale = 0.01,
                                        const MomentumUnroll* momentum = nullptr);

/// epsilon_scale / ||g||, or 0 when ||g|| is below 1e-12.
double finite_difference_epsilon(std::span<const double> direction, double epsilon_scale = 0.01);

// ---------------------------------------------------------------------------
// Drivers

/// Alternating alpha / w optimization. Joint mode is forwarded to joint_optimize.
Trajectory search(const SearchConfig& config, BilevelTask& task);

/// alpha and w optimized on the train+validation objective, either by
/// alternating steps or by one simultaneous step per iteration.
Trajectory joint_optimize(const SearchConfig& config, BilevelTask& task);

/// Uniform genotype: each node takes k distinct predecessors and a uniform non-zero op per edge.
Genotype sample_genotype(const CellSpec& spec, std::mt19937_64& rng);

struct RandomSearchResult {
  Genotype best;
  std::size_t best_index = 0;
  std::vector<Genotype> samples;
  std::vector<double> val_accuracy;
  std::vector<double> val_loss;
};

/// Best of n uniformly sampled genotypes, each retrained from scratch with config.retrain.
RandomSearchResult random_search(const SearchConfig& config, std::shared_ptr<const Dataset> data,
                                 std::size_t n_samples);

struct SelectionCandidate {
  std::uint64_t seed = 0;
  Genotype genotype;
  double search_val_loss = 0.0;  // at the end of search
  double retrain_val_accuracy = 0.0;
  double retrain_val_loss = 0.0;
  double final_entropy = 0.0;    // mean alpha entropy per edge at search end
  bool failed = false;
  std::string failure;
};

/// Highest retrain validation accuracy; ties go to the lowest seed. Failed runs never win.
std::size_t pick_best_candidate(std::span<const SelectionCandidate> candidates);

struct SelectionResult {
  Genotype best;
  std::size_t best_index = 0;
  std::vector<SelectionCandidate> candidates;
};

/// Runs search once per config, retrains each derived genotype from scratch and
/// keeps the best by validation accuracy.
/// `on_trajectory`, when set, sees each finished search before its retrain.
SelectionResult select_architecture(
    std::span<const SearchConfig> configs, std::shared_ptr<const Dataset> data,
    const std::function<void(std::size_t, const Trajectory&)>& on_trajectory = {});

/// splitmix64 of (seed, stream): independent sub-seeds for batch streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace darts
