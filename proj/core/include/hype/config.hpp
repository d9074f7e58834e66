#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hype/encoding.hpp"
#include "hype/matrix.hpp"

namespace hype {

/// Malformed or unusable run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat key-value run configuration shared by the verify and bench
/// commands. Recognized keys: L, d, heads, mu, tau, n_copies, causal,
/// width, seed, trials. mu is either a comma-separated list (one value,
/// or one per head) or "auto:L_extra" for the geometric schedule; tau is
/// a comma-separated list broadcast the same way.
struct RunConfig {
  std::size_t seq_len = 128;
  std::size_t head_dim = 16;
  std::size_t n_heads = 4;
  std::size_t n_copies = 1;
  bool causal = false;
  FloatWidth width = FloatWidth::f64;
  std::uint64_t seed = 42;
  std::size_t trials = 5;

  std::optional<std::size_t> mu_auto_l_extra = 1024;  // default mu = auto:1024
  std::vector<double> mu_values;                      // used when not auto
  std::vector<double> tau_values;                     // empty keeps tau = 1

  /// Expands mu/tau settings into one parameter set per head.
  std::vector<HypeHeadParams> resolve_heads() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace hype
