#pragma once

#include <string>
#include <vector>

namespace irs::tools {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Invariant checks run by `irs_sim verify`. `quick` shrinks trial counts.
std::vector<SuiteResult> run_verify_suites(bool quick);

}  // namespace irs::tools
