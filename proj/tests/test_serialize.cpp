#include <filesystem>
#include <random>

#include "doctest.h"

#include "darts/serialize.hpp"

using namespace darts;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "darts_serialize_tests" / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("format_double round-trips every double exactly") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("genotype JSON round-trip") {
  CellSpec s;
  s.intermediates = 2;
  s.hidden = 5;
  s.reduction = OutputReduction::kConcat;
  const Genotype g{s, {{{0, OpKind::kLinearSigmoid}, {1, OpKind::kIdentity}},
                       {{1, OpKind::kLinearRelu}, {2, OpKind::kLinearTanh}}}};
  CHECK(genotype_from_json(genotype_to_json(g)) == g);
  CHECK(genotype_to_json(genotype_from_json(genotype_to_json(g))) == genotype_to_json(g));

  const fs::path p = scratch("g") / "nested" / "genotype.json";
  write_genotype(p, g);
  CHECK(read_genotype(p) == g);
  CHECK(cell_spec_from_json(cell_spec_to_json(s)) == s);
}

TEST_CASE("malformed genotype documents are rejected") {
  CHECK_THROWS_AS(genotype_from_json("{"), FormatError);
  CHECK_THROWS_AS(genotype_from_json(R"({"spec": {}, "nodes": []})"), FormatError);
  const std::string bad_op =
      R"({"spec":{"input_arity":2,"intermediates":1,"hidden":3,"k":2,"reduction":"mean"},)"
      R"("nodes":[[{"pred":0,"op":"conv"},{"pred":1,"op":"identity"}]]})";
  CHECK_THROWS(genotype_from_json(bad_op));
  const std::string zero_op =
      R"({"spec":{"input_arity":2,"intermediates":1,"hidden":3,"k":2,"reduction":"mean"},)"
      R"("nodes":[[{"pred":0,"op":"zero"},{"pred":1,"op":"identity"}]]})";
  CHECK_THROWS_AS(genotype_from_json(zero_op), InvalidGenotype);
  CHECK_THROWS(read_genotype(scratch("missing") / "nope.json"));
}

TEST_CASE("alpha TSV round-trip is exact") {
  CellSpec s;
  s.intermediates = 3;
  AlphaParams a(s.edge_count());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (double& v : a.flat()) v = n(rng) / 3.0;
  const std::string text = alpha_to_tsv(s, a);
  CHECK(text.rfind("edge\tpred\tnode\tzero\tidentity\tlinear_tanh\tlinear_relu\tlinear_sigmoid\n", 0) == 0);
  CHECK(alpha_from_tsv(s, text) == a);

  const fs::path p = scratch("alpha") / "step_000001.tsv";
  write_alpha(p, s, a);
  CHECK(read_alpha(p, s) == a);

  CellSpec other = s;
  other.intermediates = 2;
  CHECK_THROWS_AS(alpha_from_tsv(other, text), FormatError);
  CHECK_THROWS_AS(alpha_from_tsv(s, "edge\tpred\n"), FormatError);
}

}  // TEST_SUITE
