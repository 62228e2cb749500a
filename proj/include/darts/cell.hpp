#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "darts/ops.hpp"
#include "darts/tensor.hpp"

namespace darts {

enum class OutputReduction { kMean, kConcat };

/// Shape of the cell DAG. Nodes are numbered inputs first, then intermediates;
/// the output node is implicit (a reduction over the intermediates).
struct CellSpec {
  std::size_t input_arity = 2;
  std::size_t intermediates = 3;
  OutputReduction reduction = OutputReduction::kMean;
  std::size_t hidden = 16;
  std::size_t k = 2;

  std::size_t node_count() const { return input_arity + intermediates + 1; }
  /// Index of the first intermediate node.
  std::size_t first_intermediate() const { return input_arity; }
  /// One edge from every earlier node into every intermediate.
  std::size_t edge_count() const;
  std::size_t output_width() const {
    return reduction == OutputReduction::kMean ? hidden : hidden * intermediates;
  }
  void validate() const;

  bool operator==(const CellSpec&) const = default;
};

class InvalidGenotype : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Edge ids enumerate (pred, node) pairs node-major: for node j, preds 0..j-1.
std::size_t edge_index(const CellSpec& spec, std::size_t pred, std::size_t node);
std::vector<std::pair<std::size_t, std::size_t>> edge_list(const CellSpec& spec);

/// Architecture logits, one row of kNumOps per edge, flat row-major.
class AlphaParams {
 public:
  AlphaParams() = default;
  explicit AlphaParams(std::size_t edges) : edges_(edges), logits_(edges * kNumOps, 0.0) {}
  AlphaParams(std::size_t edges, std::vector<double> logits);

  std::size_t edge_count() const { return edges_; }
  std::span<double> row(std::size_t edge) { return {logits_.data() + edge * kNumOps, kNumOps}; }
  std::span<const double> row(std::size_t edge) const {
    return {logits_.data() + edge * kNumOps, kNumOps};
  }
  std::vector<double>& flat() { return logits_; }
  const std::vector<double>& flat() const { return logits_; }

  /// Softmax of one edge's logits over all ops, zero included.
  std::array<double, kNumOps> weights(std::size_t edge) const;

  bool operator==(const AlphaParams&) const = default;

 private:
  std::size_t edges_ = 0;
  std::vector<double> logits_;
};

/// All-zero logits: uniform attention over every op.
AlphaParams init_alpha(const CellSpec& spec);

/// Mean Shannon entropy (nats) of the per-edge softmax weights.
double mean_edge_entropy(const AlphaParams& alpha);

struct GenotypeEdge {
  std::size_t pred = 0;
  OpKind op = OpKind::kIdentity;

  bool operator==(const GenotypeEdge&) const = default;
};

/// Discrete cell: for every intermediate node, k retained (pred, op) pairs.
struct Genotype {
  CellSpec spec;
  std::vector<std::vector<GenotypeEdge>> nodes;

  bool operator==(const Genotype&) const = default;
};

/// Throws InvalidGenotype naming the first violated rule.
void validate_genotype(const Genotype& genotype);
bool is_valid_genotype(const Genotype& genotype);

/// Per edge, one OpParams slot per registry op (parameter-free slots stay empty).
using EdgeOpParams = std::array<OpParams, kNumOps>;

struct MixedCellParams {
  std::vector<EdgeOpParams> edges;
};

/// Per intermediate node, one OpParams per retained pair, aligned with Genotype::nodes.
struct DiscreteCellParams {
  std::vector<std::vector<OpParams>> nodes;
};

MixedCellParams init_mixed_params(const CellSpec& spec, std::mt19937_64& rng);
DiscreteCellParams init_discrete_params(const Genotype& genotype, std::mt19937_64& rng);

struct CellOutput {
  Value output;
  /// Inputs followed by intermediates.
  std::vector<Value> nodes;
};

/// sum_o softmax(alpha)_o * o(x), softmax over every op including zero.
Value mixed_edge_forward(const Value& alpha_row, const Value& x, const EdgeOpParams& ops);

/// Continuous cell. alpha_rows holds one (kNumOps) Value per edge so callers
/// can put the logits on a tape.
CellOutput cell_forward(const CellSpec& spec, std::span<const Value> alpha_rows,
                        const MixedCellParams& params, std::span<const Value> inputs);
CellOutput cell_forward(const CellSpec& spec, const AlphaParams& alpha,
                        const MixedCellParams& params, std::span<const Value> inputs);

CellOutput discrete_forward(const Genotype& genotype, const DiscreteCellParams& params,
                            std::span<const Value> inputs);

/// Top-k non-zero selection. Edge strength is the largest non-zero softmax
/// weight on the edge; ties go to the lower predecessor, then the lower op index.
/// Retained pairs are listed in increasing predecessor order.
Genotype derive_genotype(const CellSpec& spec, const AlphaParams& alpha);

/// Saturated logits reproducing `genotype`: retained edges put +magnitude on
/// their op, every other edge puts +magnitude on zero; all else -magnitude.
AlphaParams genotype_to_alpha(const Genotype& genotype, double magnitude);

/// Reuses mixed-cell weights for the retained edge-ops of a genotype.
DiscreteCellParams discrete_params_from_mixed(const Genotype& genotype,
                                              const MixedCellParams& mixed);

}  // namespace darts
