#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// All check names, in run order.
const std::vector<std::string>& check_names();

// Runs the named invariant suites (all of them when `only` is empty).
// `corrupt_gradient` deliberately perturbs one analytic gradient so the
// failure path can be exercised.  Unknown names throw std::invalid_argument.
std::vector<CheckResult> run_checks(const std::vector<std::string>& only,
                                    std::uint64_t seed, bool corrupt_gradient);

}  // namespace cli
