#pragma once

// Reference corpus run by `hardylab selftest`: closed-form integrals and
// pointwise identities checked against finite differences.

#include <string>
#include <vector>

namespace hardylab::cli {

struct SelfTestResult {
  std::string name;
  double worst = 0.0;      // worst observed error (relative unless noted)
  double tolerance = 0.0;  // after scaling
  std::size_t instances = 0;
  bool pass = false;
  std::string detail;
};

/// Names of all cases, in run order.
std::vector<std::string> selftest_names();

/// Runs every case whose name contains `filter` (all when empty). Tolerances
/// are multiplied by tolerance_scale.
std::vector<SelfTestResult> run_selftest(const std::string& filter, double tolerance_scale);

}  // namespace hardylab::cli
