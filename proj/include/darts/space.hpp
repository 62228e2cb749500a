#pragma once

#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace darts {

using BigInt = boost::multiprecision::cpp_int;

/// Search-space size query. Counts ignore graph isomorphism.
struct SpaceQuery {
  std::uint64_t intermediates = 4;  // n
  std::uint64_t nonzero_ops = 7;    // p
  std::uint64_t k = 2;
  std::uint64_t input_arity = 2;
  std::uint64_t multiplicity = 1;   // 2 for a normal + reduction cell pair

  void validate() const;
};

/// Discrete cells: prod_{m=1..n} C(m+1, 2) * p^2, to the power `multiplicity`.
/// Only k = 2 with two inputs is supported.
BigInt count_discrete(const SpaceQuery& query);

/// Relaxed cells: (p + 1)^E with E = n(n+3)/2 edges, to the power `multiplicity`.
BigInt count_relaxed(const SpaceQuery& query);

/// Edges of a fully connected cell with two inputs: n(n+3)/2.
std::uint64_t relaxed_edge_count(std::uint64_t intermediates);

/// e.g. "1.04e+09".
std::string scientific(const BigInt& value, int digits = 3);

}  // namespace darts
