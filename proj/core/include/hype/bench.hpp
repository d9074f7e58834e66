#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "hype/config.hpp"

namespace hype {

/// Positional-encoding values materialized by each path, measured with
/// live allocation counters rather than formula substitution.
struct StorageCounts {
  std::size_t hype = 0;       // per-head eta pairs: 4 * n_copies * L per head
  std::size_t explicit_mask = 0;  // L x L masks, shared across heads with equal params
};

/// Storage/time comparison of the concat path against the explicit-mask
/// path for one configuration.
struct BenchReport {
  RunConfig config;
  std::size_t stored_pe_values_hype = 0;
  std::size_t stored_pe_values_explicit = 0;
  double wall_time_concat = 0.0;    // seconds, median over trials
  double wall_time_explicit = 0.0;  // seconds, median over trials
  double max_equivalence_error = 0.0;
  FloatWidth width = FloatWidth::f64;
  std::uint64_t seed = 0;
};

/// Documented desk-scale cap on the benchmark sequence length; beyond it
/// the explicit-mask path would need multiple gigabytes.
inline constexpr std::size_t kBenchMaxSeqLen = 8192;

/// Audited single-pass storage accounting for both paths.
StorageCounts measure_storage(const RunConfig& config);

/// Full benchmark: storage counts (asserted against 4nLh and the mask
/// cache), wall times (median of >= 5 trials, reported but never
/// asserted), and the cross-path max equivalence error (asserted below
/// the width tolerance).
BenchReport run_bench(const RunConfig& config);

std::string bench_report_json(const BenchReport& report);

}  // namespace hype
