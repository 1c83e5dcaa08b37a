#pragma once

#include <string>
#include <vector>

namespace cofuse::experiment {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast in-process invariant suite: gradients, Gumbel sampling, the
// straight-through surrogate, fusion algebra, wire formats and the loss.
std::vector<CheckResult> run_selftest(std::uint64_t seed = 0);

}  // namespace cofuse::experiment
