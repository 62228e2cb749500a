#include "darts/space.hpp"

#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace darts {

void SpaceQuery::validate() const {
  if (intermediates < 1) throw std::invalid_argument("space query: need at least one intermediate node");
  if (nonzero_ops < 1) throw std::invalid_argument("space query: need at least one non-zero op");
  if (input_arity != 2) throw std::invalid_argument("space query: only two input nodes are supported");
  if (k < 1 || k > input_arity + intermediates - 1) {
    throw std::invalid_argument("space query: k=" + std::to_string(k) + " out of range");
  }
  if (multiplicity < 1) throw std::invalid_argument("space query: multiplicity must be >= 1");
}

std::uint64_t relaxed_edge_count(std::uint64_t intermediates) {
  return intermediates * (intermediates + 3) / 2;
}

BigInt count_discrete(const SpaceQuery& q) {
  q.validate();
  if (q.k != 2) {
    throw std::invalid_argument("count_discrete: only k=2 is supported (got k=" + std::to_string(q.k) + ")");
  }
  BigInt per_cell = 1;
  const BigInt p = q.nonzero_ops;
  for (std::uint64_t m = 1; m <= q.intermediates; ++m) {
    per_cell *= BigInt(m + 1) * m / 2 * p * p;
  }
  return boost::multiprecision::pow(per_cell, static_cast<unsigned>(q.multiplicity));
}

BigInt count_relaxed(const SpaceQuery& q) {
  q.validate();
  const BigInt base = q.nonzero_ops + 1;
  const BigInt per_cell = boost::multiprecision::pow(base, static_cast<unsigned>(relaxed_edge_count(q.intermediates)));
  return boost::multiprecision::pow(per_cell, static_cast<unsigned>(q.multiplicity));
}

std::string scientific(const BigInt& value, int digits) {
  using Float = boost::multiprecision::cpp_bin_float_50;
  return Float(value).str(digits, std::ios_base::scientific);
}

}  // namespace darts
