#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dta {

struct OpCheckRow {
  std::string op;
  double max_rel_err = 0.0;
  int64_t entries = 0;  // gradient slots probed
};

// Finite-difference audit of every tape operation against its analytic
// backward pass, on small seeded inputs. One row per operation; a row
// passes when max_rel_err stays under the caller's tolerance (1e-4 is
// the usual bar). Inputs that would sit on a kink (relu at zero, ties
// under the row max) are nudged away from it so the comparison is fair.
std::vector<OpCheckRow> check_all_ops(uint64_t seed = 1234);

}  // namespace dta
