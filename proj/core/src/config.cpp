#include "hype/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace hype {

namespace {

std::string trim(const std::string& s) {
  std::size_t first = 0;
  std::size_t last = s.size();
  while (first < last && std::isspace(static_cast<unsigned char>(s[first]))) {
    ++first;
  }
  while (last > first && std::isspace(static_cast<unsigned char>(s[last - 1]))) {
    --last;
  }
  return s.substr(first, last - first);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
  if (consumed != value.size()) {
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  if (consumed != value.size()) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t end = std::min(value.find(',', start), value.size());
    out.push_back(parse_double(key, trim(value.substr(start, end - start))));
    if (end == value.size()) {
      break;
    }
    start = end + 1;
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

std::vector<HypeHeadParams> RunConfig::resolve_heads() const {
  if (n_heads == 0) {
    throw ConfigError("config: heads must be >= 1");
  }
  std::vector<HypeHeadParams> heads;
  if (mu_auto_l_extra.has_value()) {
    heads = recommend_mu_schedule(n_heads, *mu_auto_l_extra);
  } else {
    if (mu_values.size() != 1 && mu_values.size() != n_heads) {
      throw ConfigError("config: mu needs 1 or heads=" + std::to_string(n_heads) +
                        " values, got " + std::to_string(mu_values.size()));
    }
    heads.resize(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
      heads[h].mu = mu_values.size() == 1 ? mu_values[0] : mu_values[h];
      heads[h].tau = 1.0;
    }
  }
  if (!tau_values.empty()) {
    if (tau_values.size() != 1 && tau_values.size() != n_heads) {
      throw ConfigError("config: tau needs 1 or heads=" + std::to_string(n_heads) +
                        " values, got " + std::to_string(tau_values.size()));
    }
    for (std::size_t h = 0; h < n_heads; ++h) {
      heads[h].tau = tau_values.size() == 1 ? tau_values[0] : tau_values[h];
    }
  }
  return heads;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') {
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key +
                        "'");
    }
    if (key == "L") {
      config.seq_len = parse_uint(key, value);
    } else if (key == "d") {
      config.head_dim = parse_uint(key, value);
    } else if (key == "heads") {
      config.n_heads = parse_uint(key, value);
    } else if (key == "n_copies") {
      config.n_copies = parse_uint(key, value);
    } else if (key == "causal") {
      config.causal = parse_bool(key, value);
    } else if (key == "width") {
      if (value == "f32") {
        config.width = FloatWidth::f32;
      } else if (value == "f64") {
        config.width = FloatWidth::f64;
      } else {
        throw ConfigError("config: width must be f32 or f64, got '" + value + "'");
      }
    } else if (key == "seed") {
      config.seed = parse_uint(key, value);
    } else if (key == "trials") {
      config.trials = parse_uint(key, value);
    } else if (key == "mu") {
      if (value.rfind("auto:", 0) == 0) {
        const std::uint64_t l_extra = parse_uint(key, trim(value.substr(5)));
        if (l_extra == 0) {
          throw ConfigError("config: mu = auto:L_extra needs L_extra >= 1");
        }
        config.mu_auto_l_extra = l_extra;
        config.mu_values.clear();
      } else {
        config.mu_values = parse_double_list(key, value);
        config.mu_auto_l_extra.reset();
      }
    } else if (key == "tau") {
      config.tau_values = parse_double_list(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (config.seq_len == 0 || config.head_dim == 0 || config.n_heads == 0 ||
      config.n_copies == 0) {
    throw ConfigError("config: L, d, heads and n_copies must be >= 1");
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace hype
