#include <functional>

#include "doctest.h"

#include "darts/cell.hpp"
#include "darts/space.hpp"

using namespace darts;

namespace {

std::string str(const BigInt& v) { return v.str(); }

// Counts edge-to-op assignments (each edge: absent or one of p ops) in which
// every intermediate node keeps exactly two incoming edges. Every counted
// assignment is also checked as a Genotype.
std::uint64_t brute_force(std::size_t n, std::size_t p) {
  CellSpec spec;
  spec.intermediates = n;
  const auto edges = edge_list(spec);
  std::vector<std::size_t> choice(edges.size(), 0);  // 0 = absent, i = registry op i
  std::uint64_t count = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t e) {
    if (e == edges.size()) {
      Genotype g{spec, std::vector<std::vector<GenotypeEdge>>(n)};
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (choice[i]) g.nodes[edges[i].second - 2].push_back({edges[i].first, op_from_index(choice[i])});
      }
      for (const auto& node : g.nodes) {
        if (node.size() != 2) return;
      }
      REQUIRE(is_valid_genotype(g));
      ++count;
      return;
    }
    for (std::size_t c = 0; c <= p; ++c) {
      choice[e] = c;
      rec(e + 1);
    }
  };
  rec(0);
  return count;
}

}  // namespace

TEST_SUITE("space") {

TEST_CASE("discrete counts") {
  CHECK(str(count_discrete({4, 7, 2, 2, 1})) == "1037664180");
  CHECK(str(count_discrete({4, 7, 2, 2, 2})) == "1076746950455072400");
  CHECK(str(count_discrete({1, 1, 2, 2, 1})) == "1");
  CHECK(str(count_discrete({8, 16, 2, 2, 1})) == "1054297832091166229240217600");
  CHECK(scientific(count_discrete({4, 7, 2, 2, 2})) == "1.077e+18");
  CHECK_THROWS(count_discrete({4, 7, 1, 2, 1}));
  CHECK_THROWS(count_discrete({4, 7, 3, 2, 1}));
  CHECK_THROWS(count_discrete({0, 7, 2, 2, 1}));
  CHECK_THROWS(count_discrete({4, 0, 2, 2, 1}));
}

TEST_CASE("relaxed counts") {
  CHECK(relaxed_edge_count(4) == 14);
  CHECK(str(count_relaxed({4, 7, 2, 2, 1})) == "4398046511104");
  CHECK(str(count_relaxed({4, 7, 2, 2, 2})) == "19342813113834066795298816");
  CHECK(scientific(count_relaxed({4, 7, 2, 2, 2})) == "1.934e+25");
  for (std::uint64_t p = 1; p <= 16; ++p) {
    CHECK(count_relaxed({1, p, 2, 2, 1}) == BigInt((p + 1) * (p + 1)));
  }
  CHECK(str(count_relaxed({8, 16, 2, 2, 1})) == "1379597950901634641862681879083307429684165246101910721");
}

TEST_CASE("brute-force enumeration agrees for n <= 2, p <= 3") {
  for (std::size_t n = 1; n <= 2; ++n) {
    for (std::size_t p = 1; p <= 3; ++p) {
      INFO("n=" << n << " p=" << p);
      CHECK(BigInt(brute_force(n, p)) == count_discrete({n, p, 2, 2, 1}));
    }
  }
}

}  // TEST_SUITE
