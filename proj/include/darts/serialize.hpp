#pragma once

#include <filesystem>
#include <string>

#include "darts/cell.hpp"
#include "darts/optim.hpp"

namespace darts {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Genotype document:
///   {"spec": {"input_arity", "intermediates", "hidden", "k", "reduction"},
///    "nodes": [[{"pred": 0, "op": "linear_tanh"}, ...], ...]}
std::string genotype_to_json(const Genotype& genotype);
Genotype genotype_from_json(const std::string& text);
void write_genotype(const std::filesystem::path& path, const Genotype& genotype);
Genotype read_genotype(const std::filesystem::path& path);

std::string cell_spec_to_json(const CellSpec& spec);
CellSpec cell_spec_from_json(const std::string& text);

/// Tab-separated alpha table: header `edge pred node zero identity ...`,
/// then one row per edge with logits printed to 17 significant digits.
std::string alpha_to_tsv(const CellSpec& spec, const AlphaParams& alpha);
AlphaParams alpha_from_tsv(const CellSpec& spec, const std::string& text);
void write_alpha(const std::filesystem::path& path, const CellSpec& spec, const AlphaParams& alpha);
AlphaParams read_alpha(const std::filesystem::path& path, const CellSpec& spec);

std::string adam_state_to_json(const AdamState& state);
AdamState adam_state_from_json(const std::string& text);
std::string sgd_state_to_json(const SgdMomentumState& state);
SgdMomentumState sgd_state_from_json(const std::string& text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace darts
