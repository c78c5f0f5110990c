#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qtn {

/// Outcome of one kernel in the dense-equivalence suite.
struct KernelCheck {
  std::string kernel;
  std::size_t instances = 0;
  double max_rel_error = 0.0;  // |kernel - dense| / max(1, |dense|)
  double tolerance = 0.0;
  /// Largest measured / bound over the instances; 0 when the kernel has no
  /// stated bound.
  double max_cost_ratio = 0.0;
  std::string bound;
  bool passed = false;
};

/// Random instances (p <= 10, lattices up to 3 x 4) of every contraction
/// kernel against the dense conjugate dot of the densified operands. A
/// kernel passes when every error is within the tolerance and every cost
/// is within 4x its bound.
std::vector<KernelCheck> run_contract_check(std::size_t instances, std::uint64_t seed);

}  // namespace qtn
