#include "hype/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "hype/attention.hpp"
#include "hype/storage_audit.hpp"
#include "report_json.hpp"

namespace hype {

namespace {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct BenchInputs {
  std::vector<Matrix> q, k, v;
  std::vector<HypeHeadParams> heads;
};

BenchInputs make_inputs(const RunConfig& config) {
  BenchInputs inputs;
  inputs.heads = config.resolve_heads();
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    inputs.q.push_back(random_fill(config.seq_len, config.head_dim, mix_seed(config.seed, 3 * h),
                                   Distribution::StandardNormal, config.width));
    inputs.k.push_back(random_fill(config.seq_len, config.head_dim, mix_seed(config.seed, 3 * h + 1),
                                   Distribution::StandardNormal, config.width));
    inputs.v.push_back(random_fill(config.seq_len, config.head_dim, mix_seed(config.seed, 3 * h + 2),
                                   Distribution::StandardNormal, config.width));
  }
  return inputs;
}

std::vector<Matrix> concat_path(const RunConfig& config, const BenchInputs& inputs) {
  std::vector<Matrix> outputs;
  outputs.reserve(config.n_heads);
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    outputs.push_back(attend_hype_concat(inputs.q[h], inputs.k[h], inputs.v[h], inputs.heads[h],
                                         config.n_copies, config.causal));
  }
  return outputs;
}

std::vector<Matrix> explicit_path(const RunConfig& config, const BenchInputs& inputs) {
  // Heads with identical (mu, tau) share one materialized mask.
  std::map<std::pair<double, double>, BiasMatrix> mask_cache;
  std::vector<Matrix> outputs;
  outputs.reserve(config.n_heads);
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const auto key = std::make_pair(inputs.heads[h].mu, inputs.heads[h].tau);
    auto it = mask_cache.find(key);
    if (it == mask_cache.end()) {
      it = mask_cache.emplace(key, build_bias_hype(config.seq_len, inputs.heads[h], config.width))
               .first;
    }
    outputs.push_back(
        attend_with_bias(inputs.q[h], inputs.k[h], inputs.v[h], it->second, config.causal));
  }
  return outputs;
}

double median(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

template <typename Fn>
double time_seconds(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

StorageCounts measure_storage(const RunConfig& config) {
  const BenchInputs inputs = make_inputs(config);
  StorageCounts counts;
  {
    StorageAudit audit;
    concat_path(config, inputs);
    counts.hype = audit.values();
  }
  {
    StorageAudit audit;
    explicit_path(config, inputs);
    counts.explicit_mask = audit.values();
  }
  return counts;
}

BenchReport run_bench(const RunConfig& config) {
  if (config.seq_len > kBenchMaxSeqLen) {
    throw ConfigError("bench: L=" + std::to_string(config.seq_len) + " exceeds the desk-scale cap of " +
                      std::to_string(kBenchMaxSeqLen) +
                      "; the explicit mask alone would need " +
                      std::to_string(config.seq_len * config.seq_len * sizeof(double) / (1 << 20)) +
                      " MiB");
  }
  const BenchInputs inputs = make_inputs(config);

  BenchReport report;
  report.config = config;
  report.width = config.width;
  report.seed = config.seed;

  std::vector<Matrix> concat_out;
  {
    StorageAudit audit;
    concat_out = concat_path(config, inputs);
    report.stored_pe_values_hype = audit.values();
  }
  std::vector<Matrix> explicit_out;
  {
    StorageAudit audit;
    explicit_out = explicit_path(config, inputs);
    report.stored_pe_values_explicit = audit.values();
  }

  const std::size_t expected_hype = 4 * config.n_copies * config.seq_len * config.n_heads;
  if (report.stored_pe_values_hype != expected_hype) {
    throw std::runtime_error("bench: concat path materialized " +
                             std::to_string(report.stored_pe_values_hype) +
                             " positional values, expected 4nLh = " + std::to_string(expected_hype));
  }
  const std::size_t mask_values = config.seq_len * config.seq_len;
  if (report.stored_pe_values_explicit % mask_values != 0 ||
      report.stored_pe_values_explicit == 0 ||
      report.stored_pe_values_explicit > mask_values * config.n_heads) {
    throw std::runtime_error("bench: explicit path materialized " +
                             std::to_string(report.stored_pe_values_explicit) +
                             " positional values, expected a multiple of L^2 up to L^2*h");
  }

  for (std::size_t h = 0; h < config.n_heads; ++h) {
    report.max_equivalence_error =
        std::max(report.max_equivalence_error, max_rel_error(concat_out[h], explicit_out[h]));
  }
  const double tol = config.width == FloatWidth::f32 ? 1e-3 : 1e-12;
  if (report.max_equivalence_error > tol) {
    std::ostringstream msg;
    msg << "bench: cross-path equivalence error " << report.max_equivalence_error
        << " exceeds the " << to_string(config.width) << " tolerance " << tol;
    throw std::runtime_error(msg.str());
  }

  const std::size_t trials = std::max<std::size_t>(config.trials, 5);
  std::vector<double> concat_times, explicit_times;
  for (std::size_t t = 0; t < trials; ++t) {
    concat_times.push_back(time_seconds([&] { concat_path(config, inputs); }));
    explicit_times.push_back(time_seconds([&] { explicit_path(config, inputs); }));
  }
  report.wall_time_concat = median(concat_times);
  report.wall_time_explicit = median(explicit_times);
  return report;
}

std::string bench_report_json(const BenchReport& report) {
  nlohmann::json j;
  j["config"] = detail::config_json(report.config);
  j["stored_pe_values_hype"] = report.stored_pe_values_hype;
  j["stored_pe_values_explicit"] = report.stored_pe_values_explicit;
  j["wall_time_concat"] = report.wall_time_concat;
  j["wall_time_explicit"] = report.wall_time_explicit;
  j["max_equivalence_error"] = report.max_equivalence_error;
  j["width"] = to_string(report.width);
  j["seed"] = report.seed;
  return j.dump(2);
}

}  // namespace hype
