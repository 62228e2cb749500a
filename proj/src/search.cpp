#include "darts/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace darts {

const char* mode_name(SearchMode mode) {
  switch (mode) {
    case SearchMode::kSecondOrder: return "second-order";
    case SearchMode::kFirstOrder: return "first-order";
    case SearchMode::kJoint: return "joint";
    case SearchMode::kRandom: return "random";
  }
  return "unknown";
}

SearchMode mode_from_name(const std::string& name) {
  if (name == "second-order") return SearchMode::kSecondOrder;
  if (name == "first-order") return SearchMode::kFirstOrder;
  if (name == "joint") return SearchMode::kJoint;
  if (name == "random") return SearchMode::kRandom;
  throw std::invalid_argument("unknown search mode '" + name +
                              "' (expected second-order, first-order, joint or random)");
}

void SearchConfig::validate() const {
  if (xi && *xi < 0.0) throw std::invalid_argument("search config: xi must be >= 0");
  if (epsilon_scale <= 0.0) throw std::invalid_argument("search config: epsilon_scale must be > 0");
  if (eta_w < 0.0 || eta_alpha < 0.0) throw std::invalid_argument("search config: learning rates must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("search config: momentum must lie in [0, 1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("search config: Adam betas must lie in [0, 1)");
  }
  if (batch_size == 0) throw std::invalid_argument("search config: batch_size must be positive");
  if (random_samples == 0) throw std::invalid_argument("search config: random_samples must be positive");
  cell.validate();
}

SearchConfig toy_search_config(SearchMode mode) {
  SearchConfig c;
  c.mode = mode;
  c.xi = mode == SearchMode::kFirstOrder ? 0.0 : 0.5;
  c.eta_w = 0.5;
  c.momentum = 0.0;
  c.weight_decay_w = 0.0;
  c.cosine = false;
  c.grad_clip = 0.0;
  c.alpha_optimizer = AlphaOptimizer::kSgd;
  c.eta_alpha = 0.1;
  c.weight_decay_alpha = 0.0;
  c.iterations = 500;
  c.batch_size = 1;
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(what) + " is not finite");
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

}  // namespace

double finite_difference_epsilon(std::span<const double> direction, double epsilon_scale) {
  const double norm = l2_norm(direction);
  return norm < 1e-12 ? 0.0 : epsilon_scale / norm;
}

std::vector<double> unrolled_weights(BilevelTask& task, std::span<const double> w,
                                     std::span<const double> alpha, double xi, const Batch& train,
                                     const MomentumUnroll* momentum) {
  if (xi < 0.0) throw std::invalid_argument("unrolled_weights: xi must be >= 0");
  std::vector<double> out(w.begin(), w.end());
  if (xi == 0.0) return out;
  Evaluation e = task.evaluate(Objective::kTrain, train, w, alpha, {true, false});
  require_finite(e.weight_grad, "training gradient for the unrolled step");
  if (momentum && !momentum->velocity.empty() && momentum->velocity.size() != w.size()) {
    throw std::invalid_argument("unrolled_weights: velocity length does not match w");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double step = e.weight_grad[i];
    if (momentum) {
      const double v = momentum->velocity.empty() ? 0.0 : momentum->velocity[i];
      step = momentum->momentum * v + step + momentum->weight_decay * w[i];
    }
    out[i] -= xi * step;
  }
  return out;
}

ArchGradient arch_gradient_first_order(BilevelTask& task, std::span<const double> w,
                                       std::span<const double> alpha, const Batch& val) {
  Evaluation e = task.evaluate(Objective::kValidation, val, w, alpha, {false, true});
  require_finite(e.loss, "validation loss");
  require_finite(e.alpha_grad, "architecture gradient");
  return {std::move(e.alpha_grad), e.loss, 0.0, false};
}

std::vector<double> hvp_finite_difference(BilevelTask& task, std::span<const double> w,
                                          std::span<const double> alpha, std::span<const double> v,
                                          const Batch& train, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("hvp_finite_difference: epsilon must be > 0");
  if (v.size() != w.size()) {
    throw std::invalid_argument("hvp_finite_difference: direction length " + std::to_string(v.size()) +
                                " does not match w length " + std::to_string(w.size()));
  }
  std::vector<double> shifted(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] + epsilon * v[i];
  Evaluation plus = task.evaluate(Objective::kTrain, train, shifted, alpha, {false, true});
  for (std::size_t i = 0; i < w.size(); ++i) shifted[i] = w[i] - epsilon * v[i];
  Evaluation minus = task.evaluate(Objective::kTrain, train, shifted, alpha, {false, true});
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (plus.alpha_grad[i] - minus.alpha_grad[i]) / (2.0 * epsilon);
  }
  require_finite(out, "finite-difference Hessian-vector product");
  return out;
}

ArchGradient arch_gradient_second_order(BilevelTask& task, std::span<const double> w,
                                        std::span<const double> alpha, double xi,
                                        const Batch& train, const Batch& val, double epsilon_scale,
                                        const MomentumUnroll* momentum) {
  if (xi < 0.0) throw std::invalid_argument("arch_gradient_second_order: xi must be >= 0");
  if (xi == 0.0) return arch_gradient_first_order(task, w, alpha, val);

  const std::vector<double> w_unrolled = unrolled_weights(task, w, alpha, xi, train, momentum);
  Evaluation outer = task.evaluate(Objective::kValidation, val, w_unrolled, alpha, {true, true});
  require_finite(outer.loss, "validation loss");
  require_finite(outer.alpha_grad, "architecture gradient");
  require_finite(outer.weight_grad, "validation gradient w.r.t. unrolled weights");

  ArchGradient out{std::move(outer.alpha_grad), outer.loss, 0.0, false};
  const double eps = finite_difference_epsilon(outer.weight_grad, epsilon_scale);
  if (eps == 0.0) {
    out.correction_skipped = true;
    return out;
  }
  out.epsilon = eps;
  const std::vector<double> hvp = hvp_finite_difference(task, w, alpha, outer.weight_grad, train, eps);
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] -= xi * hvp[i];
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string snapshot_name(std::uint64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "alpha/step_%06llu.tsv", static_cast<unsigned long long>(iteration));
  return buf;
}

/// Alpha-side optimizer selected by the config.
class AlphaStepper {
 public:
  explicit AlphaStepper(const SearchConfig& c) : kind_(c.alpha_optimizer) {
    adam_.learning_rate = c.eta_alpha;
    adam_.beta1 = c.beta1;
    adam_.beta2 = c.beta2;
    adam_.weight_decay = c.weight_decay_alpha;
    sgd_.learning_rate = c.eta_alpha;
    sgd_.momentum = 0.0;
    sgd_.weight_decay = c.weight_decay_alpha;
  }

  void step(std::span<double> alpha, std::span<const double> grad) {
    if (kind_ == AlphaOptimizer::kAdam) {
      adam_step(adam_, alpha, grad);
    } else {
      sgd_momentum_step(sgd_, alpha, grad);
    }
  }

 private:
  AlphaOptimizer kind_;
  AdamState adam_;
  SgdMomentumState sgd_;
};

struct RunState {
  std::vector<double> w;
  std::vector<double> alpha;
  SgdMomentumState w_opt;
  CosineSchedule schedule;
  Clock::time_point start = Clock::now();
};

RunState start_run(const SearchConfig& config, BilevelTask& task) {
  config.validate();
  RunState s;
  s.w = task.initial_weights(derive_seed(config.seed, 0));
  s.alpha = task.initial_alpha();
  s.w_opt.learning_rate = config.eta_w;
  s.w_opt.momentum = config.momentum;
  s.w_opt.weight_decay = config.weight_decay_w;
  s.schedule = {config.eta_w, std::max<std::uint64_t>(config.iterations, 1)};
  return s;
}

double weight_rate(const SearchConfig& config, const RunState& s, std::uint64_t t) {
  return config.cosine ? cosine_rate(s.schedule, t) : config.eta_w;
}

void maybe_snapshot(const SearchConfig& config, BilevelTask& task, std::uint64_t iteration,
                    const std::vector<double>& alpha, Trajectory& traj, TrajectoryRecord& rec) {
  if (!task.cell_spec()) {
    rec.alpha_values = alpha;
    return;
  }
  const bool periodic = config.snapshot_every > 0 && iteration % config.snapshot_every == 0;
  if (!periodic && iteration != config.iterations) return;
  rec.alpha_snapshot = snapshot_name(iteration);
  traj.snapshots.push_back({iteration, rec.alpha_snapshot, alpha});
}

void finish_run(BilevelTask& task, RunState& s, Trajectory& traj) {
  traj.final_alpha = s.alpha;
  traj.final_weights = s.w;
  if (auto spec = task.cell_spec()) {
    traj.genotype = derive_genotype(*spec, AlphaParams(spec->edge_count(), s.alpha));
  }
  traj.counters = task.counters();
}

void update_weights(const SearchConfig& config, RunState& s, std::vector<double>& grad, double eta) {
  require_finite(grad, "weight gradient");
  clip_global_norm(grad, config.grad_clip);
  s.w_opt.learning_rate = eta;
  sgd_momentum_step(s.w_opt, s.w, grad);
}

}  // namespace

Trajectory search(const SearchConfig& config, BilevelTask& task) {
  if (config.mode == SearchMode::kJoint) return joint_optimize(config, task);
  if (config.mode == SearchMode::kRandom) {
    throw std::invalid_argument("search: random mode is run through random_search()");
  }
  RunState s = start_run(config, task);
  BatchSampler train_batches(task.rows(Objective::kTrain), config.batch_size, derive_seed(config.seed, 1));
  BatchSampler val_batches(task.rows(Objective::kValidation), config.batch_size, derive_seed(config.seed, 2));
  AlphaStepper alpha_opt(config);
  Trajectory traj;

  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    TrajectoryRecord rec;
    rec.iteration = t + 1;
    rec.eta_w = weight_rate(config, s, t);
    rec.xi = config.mode == SearchMode::kFirstOrder ? 0.0 : config.xi.value_or(rec.eta_w);
    try {
      const Batch val = val_batches.next();
      const Batch train = train_batches.next();

      // 1. architecture step
      MomentumUnroll unroll{s.w_opt.velocity, config.momentum, config.weight_decay_w};
      ArchGradient ag = rec.xi == 0.0
                            ? arch_gradient_first_order(task, s.w, s.alpha, val)
                            : arch_gradient_second_order(task, s.w, s.alpha, rec.xi, train, val,
                                                         config.epsilon_scale,
                                                         config.momentum_unroll ? &unroll : nullptr);
      if (ag.correction_skipped) ++traj.skipped_corrections;
      rec.val_loss = ag.val_loss;
      rec.epsilon_used = ag.epsilon;
      alpha_opt.step(s.alpha, ag.grad);
      require_finite(s.alpha, "architecture parameters");

      // 2. weight step
      Evaluation tr = task.evaluate(Objective::kTrain, train, s.w, s.alpha, {true, false});
      require_finite(tr.loss, "training loss");
      rec.train_loss = tr.loss;
      update_weights(config, s, tr.weight_grad, rec.eta_w);
      require_finite(s.w, "weights");
    } catch (const NumericalError& e) {
      traj.diverged = true;
      traj.failure = "iteration " + std::to_string(rec.iteration) + ": " + e.what();
      break;
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - s.start).count();
    maybe_snapshot(config, task, rec.iteration, s.alpha, traj, rec);
    if (!task.cell_spec()) rec.weight_values = s.w;
    traj.records.push_back(std::move(rec));
  }
  finish_run(task, s, traj);
  return traj;
}

Trajectory joint_optimize(const SearchConfig& config, BilevelTask& task) {
  RunState s = start_run(config, task);
  BatchSampler batches(task.rows(Objective::kUnion), config.batch_size, derive_seed(config.seed, 3));
  AlphaStepper alpha_opt(config);
  Trajectory traj;

  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    TrajectoryRecord rec;
    rec.iteration = t + 1;
    rec.eta_w = weight_rate(config, s, t);
    try {
      const Batch batch = batches.next();
      if (config.joint == JointSubMode::kSimultaneous) {
        Evaluation e = task.evaluate(Objective::kUnion, batch, s.w, s.alpha, {true, true});
        require_finite(e.loss, "joint loss");
        require_finite(e.alpha_grad, "architecture gradient");
        rec.train_loss = rec.val_loss = e.loss;
        alpha_opt.step(s.alpha, e.alpha_grad);
        update_weights(config, s, e.weight_grad, rec.eta_w);
      } else {
        Evaluation ea = task.evaluate(Objective::kUnion, batch, s.w, s.alpha, {false, true});
        require_finite(ea.loss, "joint loss");
        require_finite(ea.alpha_grad, "architecture gradient");
        rec.val_loss = ea.loss;
        alpha_opt.step(s.alpha, ea.alpha_grad);
        Evaluation ew = task.evaluate(Objective::kUnion, batch, s.w, s.alpha, {true, false});
        require_finite(ew.loss, "joint loss");
        rec.train_loss = ew.loss;
        update_weights(config, s, ew.weight_grad, rec.eta_w);
      }
      require_finite(s.alpha, "architecture parameters");
      require_finite(s.w, "weights");
    } catch (const NumericalError& e) {
      traj.diverged = true;
      traj.failure = "iteration " + std::to_string(rec.iteration) + ": " + e.what();
      break;
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - s.start).count();
    maybe_snapshot(config, task, rec.iteration, s.alpha, traj, rec);
    if (!task.cell_spec()) rec.weight_values = s.w;
    traj.records.push_back(std::move(rec));
  }
  finish_run(task, s, traj);
  return traj;
}

Genotype sample_genotype(const CellSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  Genotype g;
  g.spec = spec;
  std::uniform_int_distribution<std::size_t> op_dist(1, kNumOps - 1);
  for (std::size_t m = 0; m < spec.intermediates; ++m) {
    const std::size_t j = spec.first_intermediate() + m;
    std::vector<std::size_t> preds(j);
    std::iota(preds.begin(), preds.end(), 0);
    // partial Fisher-Yates for k distinct predecessors
    for (std::size_t i = 0; i < spec.k; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, j - 1);
      std::swap(preds[i], preds[d(rng)]);
    }
    preds.resize(spec.k);
    std::sort(preds.begin(), preds.end());
    auto& pairs = g.nodes.emplace_back();
    for (std::size_t p : preds) pairs.push_back({p, kOpRegistry[op_dist(rng)]});
  }
  return g;
}

RandomSearchResult random_search(const SearchConfig& config, std::shared_ptr<const Dataset> data,
                                 std::size_t n_samples) {
  if (n_samples == 0) throw std::invalid_argument("random_search: need at least one sample");
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, 4));
  RandomSearchResult result;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Genotype g = sample_genotype(config.cell, rng);
    const RetrainResult r = retrain_genotype(data, g, config.retrain);
    result.samples.push_back(std::move(g));
    result.val_accuracy.push_back(r.val_accuracy);
    result.val_loss.push_back(r.val_loss);
  }
  for (std::size_t i = 1; i < n_samples; ++i) {
    if (result.val_accuracy[i] > result.val_accuracy[result.best_index]) result.best_index = i;
  }
  result.best = result.samples[result.best_index];
  return result;
}

std::size_t pick_best_candidate(std::span<const SelectionCandidate> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.failed) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.retrain_val_accuracy > b.retrain_val_accuracy ||
        (c.retrain_val_accuracy == b.retrain_val_accuracy && c.seed < b.seed)) {
      best = i;
    }
  }
  if (!best) throw std::runtime_error("select_architecture: every run failed");
  return *best;
}

SelectionResult select_architecture(
    std::span<const SearchConfig> configs, std::shared_ptr<const Dataset> data,
    const std::function<void(std::size_t, const Trajectory&)>& on_trajectory) {
  if (configs.empty()) throw std::invalid_argument("select_architecture: need at least one run");
  SelectionResult result;
  for (const auto& config : configs) {
    SelectionCandidate c;
    c.seed = config.seed;
    CellClassifierTask task(data, config.cell);
    Trajectory traj = search(config, task);
    if (on_trajectory) on_trajectory(result.candidates.size(), traj);
    if (traj.diverged || !traj.genotype) {
      c.failed = true;
      c.failure = traj.failure.empty() ? "no genotype derived" : traj.failure;
      result.candidates.push_back(std::move(c));
      continue;
    }
    c.genotype = *traj.genotype;
    c.search_val_loss = traj.records.empty() ? 0.0 : traj.records.back().val_loss;
    c.final_entropy = mean_edge_entropy(AlphaParams(config.cell.edge_count(), traj.final_alpha));
    const RetrainResult r = retrain_genotype(data, c.genotype, config.retrain);
    c.retrain_val_accuracy = r.val_accuracy;
    c.retrain_val_loss = r.val_loss;
    result.candidates.push_back(std::move(c));
  }
  result.best_index = pick_best_candidate(result.candidates);
  result.best = result.candidates[result.best_index].genotype;
  return result;
}

}  // namespace darts
