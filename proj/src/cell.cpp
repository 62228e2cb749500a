#include "darts/cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace darts {

void CellSpec::validate() const {
  if (input_arity < 1) throw std::invalid_argument("cell spec: input arity must be >= 1");
  if (intermediates < 1) throw std::invalid_argument("cell spec: need at least one intermediate node");
  if (hidden < 1) throw std::invalid_argument("cell spec: hidden size must be >= 1");
  if (k < 1) throw std::invalid_argument("cell spec: k must be >= 1");
  if (k > input_arity) {
    throw std::invalid_argument("cell spec: k=" + std::to_string(k) +
                                " exceeds input arity " + std::to_string(input_arity));
  }
}

std::size_t CellSpec::edge_count() const {
  // sum over intermediates m = 0..n-1 of (input_arity + m)
  return intermediates * input_arity + intermediates * (intermediates - 1) / 2;
}

std::size_t edge_index(const CellSpec& spec, std::size_t pred, std::size_t node) {
  const std::size_t first = spec.first_intermediate();
  if (node < first || node >= first + spec.intermediates || pred >= node) {
    throw std::out_of_range("edge (" + std::to_string(pred) + ", " + std::to_string(node) +
                            ") is not an edge of the cell");
  }
  const std::size_t m = node - first;
  return m * spec.input_arity + m * (m - 1) / 2 + pred;
}

std::vector<std::pair<std::size_t, std::size_t>> edge_list(const CellSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(spec.edge_count());
  for (std::size_t j = spec.first_intermediate(); j < spec.first_intermediate() + spec.intermediates; ++j) {
    for (std::size_t i = 0; i < j; ++i) out.emplace_back(i, j);
  }
  return out;
}

AlphaParams::AlphaParams(std::size_t edges, std::vector<double> logits)
    : edges_(edges), logits_(std::move(logits)) {
  if (logits_.size() != edges_ * kNumOps) {
    throw std::invalid_argument("alpha: expected " + std::to_string(edges_ * kNumOps) +
                                " logits, got " + std::to_string(logits_.size()));
  }
}

std::array<double, kNumOps> AlphaParams::weights(std::size_t edge) const {
  auto r = row(edge);
  const double mx = *std::max_element(r.begin(), r.end());
  std::array<double, kNumOps> w{};
  double z = 0.0;
  for (std::size_t o = 0; o < kNumOps; ++o) z += (w[o] = std::exp(r[o] - mx));
  for (double& v : w) v /= z;
  return w;
}

AlphaParams init_alpha(const CellSpec& spec) { return AlphaParams(spec.edge_count()); }

double mean_edge_entropy(const AlphaParams& alpha) {
  if (alpha.edge_count() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < alpha.edge_count(); ++e) {
    for (double p : alpha.weights(e)) {
      if (p > 0.0) total -= p * std::log(p);
    }
  }
  return total / static_cast<double>(alpha.edge_count());
}

void validate_genotype(const Genotype& g) {
  try {
    g.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw InvalidGenotype(std::string("genotype: ") + e.what());
  }
  if (g.nodes.size() != g.spec.intermediates) {
    throw InvalidGenotype("genotype: expected " + std::to_string(g.spec.intermediates) +
                          " nodes, got " + std::to_string(g.nodes.size()));
  }
  for (std::size_t m = 0; m < g.nodes.size(); ++m) {
    const std::size_t node = g.spec.first_intermediate() + m;
    const auto& pairs = g.nodes[m];
    if (pairs.size() != g.spec.k) {
      throw InvalidGenotype("genotype: node " + std::to_string(node) + " has " +
                            std::to_string(pairs.size()) + " pairs, expected k=" +
                            std::to_string(g.spec.k));
    }
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      if (pairs[a].pred >= node) {
        throw InvalidGenotype("genotype: node " + std::to_string(node) + " uses predecessor " +
                              std::to_string(pairs[a].pred));
      }
      if (pairs[a].op == OpKind::kZero) {
        throw InvalidGenotype("genotype: node " + std::to_string(node) + " retains the zero op");
      }
      if (op_index(pairs[a].op) >= kNumOps) {
        throw InvalidGenotype("genotype: node " + std::to_string(node) + " has an unknown op");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (pairs[a].pred == pairs[b].pred) {
          throw InvalidGenotype("genotype: node " + std::to_string(node) +
                                " repeats predecessor " + std::to_string(pairs[a].pred));
        }
      }
    }
  }
}

bool is_valid_genotype(const Genotype& g) {
  try {
    validate_genotype(g);
    return true;
  } catch (const InvalidGenotype&) {
    return false;
  }
}

MixedCellParams init_mixed_params(const CellSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  MixedCellParams p;
  p.edges.resize(spec.edge_count());
  for (auto& edge : p.edges) {
    for (std::size_t o = 0; o < kNumOps; ++o) edge[o] = init_op_params(kOpRegistry[o], spec.hidden, rng);
  }
  return p;
}

DiscreteCellParams init_discrete_params(const Genotype& genotype, std::mt19937_64& rng) {
  validate_genotype(genotype);
  DiscreteCellParams p;
  for (const auto& pairs : genotype.nodes) {
    auto& node = p.nodes.emplace_back();
    for (const auto& pair : pairs) node.push_back(init_op_params(pair.op, genotype.spec.hidden, rng));
  }
  return p;
}

DiscreteCellParams discrete_params_from_mixed(const Genotype& genotype,
                                              const MixedCellParams& mixed) {
  validate_genotype(genotype);
  DiscreteCellParams p;
  for (std::size_t m = 0; m < genotype.nodes.size(); ++m) {
    auto& node = p.nodes.emplace_back();
    const std::size_t j = genotype.spec.first_intermediate() + m;
    for (const auto& pair : genotype.nodes[m]) {
      node.push_back(mixed.edges.at(edge_index(genotype.spec, pair.pred, j))[op_index(pair.op)]);
    }
  }
  return p;
}

Value mixed_edge_forward(const Value& alpha_row, const Value& x, const EdgeOpParams& ops) {
  if (alpha_row.size() != kNumOps) {
    throw ShapeError("mixed_edge_forward: alpha has " + std::to_string(alpha_row.size()) +
                     " entries, expected " + std::to_string(kNumOps));
  }
  const Value w = softmax(reshape(alpha_row, Shape{kNumOps}), 0);
  Value acc;
  for (std::size_t o = 0; o < kNumOps; ++o) {
    const OpKind kind = kOpRegistry[o];
    if (kind == OpKind::kZero) continue;
    Value term = multiply(pick(w, o), apply_op(kind, ops[o], x));
    acc = acc.empty() ? term : add(acc, term);
  }
  return acc.empty() ? scale(x, 0.0) : acc;
}

namespace {

void check_inputs(const CellSpec& spec, std::span<const Value> inputs) {
  if (inputs.size() != spec.input_arity) {
    throw ShapeError("cell: expected " + std::to_string(spec.input_arity) + " inputs, got " +
                     std::to_string(inputs.size()));
  }
  const Shape& first = inputs[0].shape();
  if (first.empty() || first.size() > 2 || first.back() != spec.hidden) {
    throw ShapeError("cell: input shape " + to_string(first) + " incompatible with hidden size " +
                     std::to_string(spec.hidden));
  }
  for (const auto& v : inputs) {
    if (v.shape() != first) {
      throw ShapeError("cell: input shapes differ: " + to_string(first) + " vs " +
                       to_string(v.shape()));
    }
  }
}

Value reduce_output(const CellSpec& spec, std::span<const Value> intermediates) {
  if (spec.reduction == OutputReduction::kConcat) {
    return concat(intermediates, intermediates[0].shape().size() - 1);
  }
  Value acc = intermediates[0];
  for (std::size_t m = 1; m < intermediates.size(); ++m) acc = add(acc, intermediates[m]);
  return scale(acc, 1.0 / static_cast<double>(intermediates.size()));
}

}  // namespace

CellOutput cell_forward(const CellSpec& spec, std::span<const Value> alpha_rows,
                        const MixedCellParams& params, std::span<const Value> inputs) {
  spec.validate();
  check_inputs(spec, inputs);
  if (alpha_rows.size() != spec.edge_count() || params.edges.size() != spec.edge_count()) {
    throw ShapeError("cell_forward: expected " + std::to_string(spec.edge_count()) +
                     " edges, got alpha " + std::to_string(alpha_rows.size()) + " / params " +
                     std::to_string(params.edges.size()));
  }
  CellOutput out;
  out.nodes.assign(inputs.begin(), inputs.end());
  std::size_t edge = 0;
  for (std::size_t m = 0; m < spec.intermediates; ++m) {
    const std::size_t j = spec.first_intermediate() + m;
    Value node;
    for (std::size_t i = 0; i < j; ++i, ++edge) {
      Value term = mixed_edge_forward(alpha_rows[edge], out.nodes[i], params.edges[edge]);
      node = node.empty() ? term : add(node, term);
    }
    out.nodes.push_back(node);
  }
  out.output = reduce_output(spec, std::span(out.nodes).subspan(spec.input_arity));
  return out;
}

CellOutput cell_forward(const CellSpec& spec, const AlphaParams& alpha,
                        const MixedCellParams& params, std::span<const Value> inputs) {
  if (alpha.edge_count() != spec.edge_count()) {
    throw ShapeError("cell_forward: alpha has " + std::to_string(alpha.edge_count()) +
                     " edges, spec needs " + std::to_string(spec.edge_count()));
  }
  std::vector<Value> rows;
  rows.reserve(alpha.edge_count());
  for (std::size_t e = 0; e < alpha.edge_count(); ++e) {
    auto r = alpha.row(e);
    rows.emplace_back(Tensor::vector(std::vector<double>(r.begin(), r.end())));
  }
  return cell_forward(spec, rows, params, inputs);
}

CellOutput discrete_forward(const Genotype& genotype, const DiscreteCellParams& params,
                            std::span<const Value> inputs) {
  validate_genotype(genotype);
  const CellSpec& spec = genotype.spec;
  check_inputs(spec, inputs);
  if (params.nodes.size() != genotype.nodes.size()) {
    throw InvalidGenotype("discrete_forward: params cover " + std::to_string(params.nodes.size()) +
                          " nodes, genotype has " + std::to_string(genotype.nodes.size()));
  }
  CellOutput out;
  out.nodes.assign(inputs.begin(), inputs.end());
  for (std::size_t m = 0; m < genotype.nodes.size(); ++m) {
    const auto& pairs = genotype.nodes[m];
    if (params.nodes[m].size() != pairs.size()) {
      throw InvalidGenotype("discrete_forward: params for node " + std::to_string(m) +
                            " do not match the genotype");
    }
    Value node;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      Value term = apply_op(pairs[p].op, params.nodes[m][p], out.nodes[pairs[p].pred]);
      node = node.empty() ? term : add(node, term);
    }
    out.nodes.push_back(node);
  }
  out.output = reduce_output(spec, std::span(out.nodes).subspan(spec.input_arity));
  return out;
}

Genotype derive_genotype(const CellSpec& spec, const AlphaParams& alpha) {
  spec.validate();
  if (alpha.edge_count() != spec.edge_count()) {
    throw std::invalid_argument("derive_genotype: alpha has " + std::to_string(alpha.edge_count()) +
                                " edges, spec needs " + std::to_string(spec.edge_count()));
  }
  Genotype g;
  g.spec = spec;
  for (std::size_t m = 0; m < spec.intermediates; ++m) {
    const std::size_t j = spec.first_intermediate() + m;
    struct Candidate {
      std::size_t pred;
      OpKind op;
      double strength;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < j; ++i) {
      const auto w = alpha.weights(edge_index(spec, i, j));
      Candidate best{i, OpKind::kIdentity, -1.0};
      for (std::size_t o = 0; o < kNumOps; ++o) {
        if (kOpRegistry[o] == OpKind::kZero) continue;
        if (w[o] > best.strength) best = {i, kOpRegistry[o], w[o]};
      }
      candidates.push_back(best);
    }
    // Candidates are already in increasing predecessor order, so a stable sort
    // keeps the lower predecessor first on equal strength.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.strength > b.strength; });
    candidates.resize(spec.k);
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.pred < b.pred; });
    auto& pairs = g.nodes.emplace_back();
    for (const auto& c : candidates) pairs.push_back({c.pred, c.op});
  }
  return g;
}

AlphaParams genotype_to_alpha(const Genotype& genotype, double magnitude) {
  validate_genotype(genotype);
  const CellSpec& spec = genotype.spec;
  AlphaParams alpha(spec.edge_count());
  for (double& v : alpha.flat()) v = -magnitude;
  for (std::size_t e = 0; e < spec.edge_count(); ++e) alpha.row(e)[op_index(OpKind::kZero)] = magnitude;
  for (std::size_t m = 0; m < genotype.nodes.size(); ++m) {
    const std::size_t j = spec.first_intermediate() + m;
    for (const auto& pair : genotype.nodes[m]) {
      auto r = alpha.row(edge_index(spec, pair.pred, j));
      r[op_index(OpKind::kZero)] = -magnitude;
      r[op_index(pair.op)] = magnitude;
    }
  }
  return alpha;
}

}  // namespace darts
