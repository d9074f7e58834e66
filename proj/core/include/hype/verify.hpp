#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hype/config.hpp"

namespace hype {

/// Outcome of one verification suite.
struct SuiteResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;  // first failing assertion when not passed
};

struct VerifyOptions {
  /// Tightens every suite tolerance to min(default, override). Used as a
  /// negative control: an override below achievable precision must fail.
  std::optional<double> tolerance_override;
  bool parallel = false;
};

struct VerifyReport {
  RunConfig config;
  std::vector<SuiteResult> suites;
  bool all_passed = false;
};

/// Runs the equivalence, antisymmetry, alibi-bound, stacking, grid and
/// gradient suites against the configuration. Pure given (config, options);
/// parallel execution must produce the same results as sequential.
VerifyReport run_verify(const RunConfig& config, const VerifyOptions& options = {});

std::string verify_report_json(const VerifyReport& report);

}  // namespace hype
