#pragma once

#include <json.hpp>

#include "hype/config.hpp"

namespace hype::detail {

inline nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j;
  j["L"] = config.seq_len;
  j["d"] = config.head_dim;
  j["heads"] = config.n_heads;
  j["n_copies"] = config.n_copies;
  j["causal"] = config.causal;
  j["width"] = to_string(config.width);
  j["seed"] = config.seed;
  j["trials"] = config.trials;
  auto mu = nlohmann::json::array();
  auto tau = nlohmann::json::array();
  for (const HypeHeadParams& p : config.resolve_heads()) {
    mu.push_back(p.mu);
    tau.push_back(p.tau);
  }
  j["mu"] = std::move(mu);
  j["tau"] = std::move(tau);
  return j;
}

}  // namespace hype::detail
