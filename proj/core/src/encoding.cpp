#include "hype/encoding.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hype/matrix_io.hpp"
#include "hype/storage_audit.hpp"

namespace hype {

namespace {

// Collapses -0 so that zero-parameter biases serialize as plain "0".
double canonical(double v) { return v == 0.0 ? 0.0 : v; }

void require_finite_params(const HypeHeadParams& params, const char* op) {
  if (!std::isfinite(params.mu) || !std::isfinite(params.tau)) {
    throw std::invalid_argument(std::string(op) + ": non-finite parameters (mu=" +
                                format_value(params.mu) + ", tau=" + format_value(params.tau) +
                                ")");
  }
}

// log(sinh(x)) for x >= 0 without overflowing the intermediate.
double log_sinh(double x) {
  if (x <= 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  return x > 33.0 ? x - std::numbers::ln2 : std::log(std::sinh(x));
}

void check_bias_overflow(double mu, double tau, std::size_t length, FloatWidth width,
                         const char* op) {
  if (tau == 0.0 || length < 2) {
    return;
  }
  const double x = std::abs(mu) * static_cast<double>(length - 1);
  const double log_extreme = std::log(std::abs(tau)) + log_sinh(x);
  if (log_extreme > std::log(width_max(width))) {
    throw OverflowError(std::string(op) + ": tau*sinh(mu*(L-1)) exceeds " + to_string(width) +
                        " range for mu=" + format_value(mu) + ", L=" + std::to_string(length));
  }
}

void check_eta_overflow(double mu, double amp, std::size_t length, FloatWidth width,
                        const char* op) {
  if (length < 2) {
    return;
  }
  const double x = std::abs(mu) * static_cast<double>(length - 1);
  const double log_limit = std::log(width_max(width));
  const bool k_overflows = x > log_limit;
  const bool q_overflows = amp != 0.0 && std::log(std::abs(amp)) + x > log_limit;
  if (k_overflows || q_overflows) {
    throw OverflowError(std::string(op) + ": e^(|mu|*(L-1)) exceeds " + to_string(width) +
                        " range for mu=" + format_value(mu) + ", L=" + std::to_string(length));
  }
}

// Fills one aligned column pair. eta_q gets amp*e^{+mu c} / amp*e^{-mu c},
// eta_k gets +e^{-mu c} / -e^{+mu c}, where c is the token's coordinate.
template <typename CoordFn>
void fill_eta_columns(Matrix& eta_q, Matrix& eta_k, std::size_t col, double mu, double amp,
                      CoordFn&& coord) {
  for (std::size_t i = 0; i < eta_q.rows(); ++i) {
    const double c = coord(i);
    const double grow = std::exp(mu * c);
    const double decay = std::exp(-mu * c);
    eta_q.set(i, col, amp * grow);
    eta_q.set(i, col + 1, amp * decay);
    eta_k.set(i, col, decay);
    eta_k.set(i, col + 1, -grow);
  }
}

}  // namespace

const char* to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::HyPE:
      return "hype";
    case BiasKind::ALiBi:
      return "alibi";
    case BiasKind::Composite:
      return "composite";
  }
  return "unknown";
}

std::size_t GridShape::length() const {
  if (dims.empty()) {
    throw ShapeError("GridShape: no dimensions");
  }
  std::size_t total = 1;
  for (std::size_t extent : dims) {
    if (extent == 0) {
      throw ShapeError("GridShape: zero extent");
    }
    total *= extent;
  }
  return total;
}

std::size_t GridShape::flat_index(const std::vector<std::size_t>& coords) const {
  if (coords.size() != dims.size()) {
    throw ShapeError("GridShape::flat_index: rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (coords[d] >= dims[d]) {
      throw ShapeError("GridShape::flat_index: coordinate out of range");
    }
    flat = flat * dims[d] + coords[d];
  }
  return flat;
}

std::vector<std::size_t> GridShape::coords_of(std::size_t flat) const {
  if (flat >= length()) {
    throw ShapeError("GridShape::coords_of: index out of range");
  }
  std::vector<std::size_t> coords(dims.size());
  for (std::size_t d = dims.size(); d-- > 0;) {
    coords[d] = flat % dims[d];
    flat /= dims[d];
  }
  return coords;
}

BiasMatrix build_bias_hype(std::size_t length, const HypeHeadParams& params, FloatWidth width) {
  require_finite_params(params, "build_bias_hype");
  if (length == 0) {
    throw ShapeError("build_bias_hype: length must be >= 1");
  }
  check_bias_overflow(params.mu, params.tau, length, width, "build_bias_hype");
  Matrix m(length, length, width);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) {
      const double v = canonical(-params.tau * std::sinh(params.mu * static_cast<double>(j - i)));
      m.set(i, j, v);
      m.set(j, i, canonical(-v));
    }
  }
  StorageAudit::record(m.size());
  BiasMatrix bias;
  bias.kind = BiasKind::HyPE;
  bias.values = std::move(m);
  bias.provenance.params = {params};
  return bias;
}

BiasMatrix build_bias_alibi(std::size_t length, double slope, FloatWidth width) {
  if (!std::isfinite(slope)) {
    throw std::invalid_argument("build_bias_alibi: non-finite slope");
  }
  if (length == 0) {
    throw ShapeError("build_bias_alibi: length must be >= 1");
  }
  Matrix m(length, length, width);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) {
      const double v = canonical(-slope * static_cast<double>(j - i));
      m.set(i, j, v);
      m.set(j, i, canonical(-v));
    }
  }
  StorageAudit::record(m.size());
  BiasMatrix bias;
  bias.kind = BiasKind::ALiBi;
  bias.values = std::move(m);
  bias.provenance.alibi_slope = slope;
  return bias;
}

EtaPair build_eta_pair(std::size_t length, std::size_t head_dim, const HypeHeadParams& params,
                       std::size_t n_copies, FloatWidth width) {
  require_finite_params(params, "build_eta_pair");
  if (length == 0 || head_dim == 0 || n_copies == 0) {
    throw ShapeError("build_eta_pair: length, head_dim and n_copies must be >= 1");
  }
  const double amp =
      params.tau * std::sqrt(static_cast<double>(head_dim)) / (2.0 * static_cast<double>(n_copies));
  check_eta_overflow(params.mu, amp, length, width, "build_eta_pair");

  EtaPair pair;
  pair.n_copies = n_copies;
  pair.params = params;
  pair.eta_q = Matrix(length, 2 * n_copies, width);
  pair.eta_k = Matrix(length, 2 * n_copies, width);
  for (std::size_t copy = 0; copy < n_copies; ++copy) {
    fill_eta_columns(pair.eta_q, pair.eta_k, 2 * copy, params.mu, amp,
                     [](std::size_t i) { return static_cast<double>(i); });
  }
  StorageAudit::record(pair.eta_q.size());
  StorageAudit::record(pair.eta_k.size());
  return pair;
}

std::vector<HypeHeadParams> recommend_mu_schedule(std::size_t n_heads, std::size_t l_extra) {
  if (n_heads == 0 || l_extra == 0) {
    throw std::invalid_argument("recommend_mu_schedule: n_heads and l_extra must be >= 1");
  }
  const double base = 1.0 / (2.0 * static_cast<double>(l_extra));
  std::vector<HypeHeadParams> heads(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    heads[h].mu = std::ldexp(base, -static_cast<int>(h));
    heads[h].tau = 1.0;
  }
  return heads;
}

BiasMatrix build_bias_grid(const GridShape& shape, const std::vector<HypeHeadParams>& params_per_dim,
                           FloatWidth width) {
  const std::size_t length = shape.length();
  if (params_per_dim.size() != shape.dims.size()) {
    throw ShapeError("build_bias_grid: " + std::to_string(params_per_dim.size()) +
                     " parameter sets for " + std::to_string(shape.dims.size()) + " dimensions");
  }
  for (std::size_t d = 0; d < params_per_dim.size(); ++d) {
    require_finite_params(params_per_dim[d], "build_bias_grid");
    check_bias_overflow(params_per_dim[d].mu, params_per_dim[d].tau, shape.dims[d], width,
                        "build_bias_grid");
  }
  std::vector<std::vector<std::size_t>> coords(length);
  for (std::size_t p = 0; p < length; ++p) {
    coords[p] = shape.coords_of(p);
  }
  Matrix m(length, length, width);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t q = p + 1; q < length; ++q) {
      double acc = 0.0;
      for (std::size_t d = 0; d < shape.dims.size(); ++d) {
        const double delta =
            static_cast<double>(coords[q][d]) - static_cast<double>(coords[p][d]);
        acc += -params_per_dim[d].tau * std::sinh(params_per_dim[d].mu * delta);
      }
      const double v = canonical(acc);
      m.set(p, q, v);
      m.set(q, p, canonical(-v));
    }
  }
  StorageAudit::record(m.size());
  BiasMatrix bias;
  bias.kind = shape.dims.size() == 1 ? BiasKind::HyPE : BiasKind::Composite;
  bias.values = std::move(m);
  bias.provenance.params = params_per_dim;
  bias.provenance.grid_dims = shape.dims;
  return bias;
}

EtaPair build_eta_grid(const GridShape& shape, std::size_t head_dim,
                       const std::vector<HypeHeadParams>& params_per_dim, FloatWidth width) {
  const std::size_t length = shape.length();
  if (params_per_dim.size() != shape.dims.size()) {
    throw ShapeError("build_eta_grid: " + std::to_string(params_per_dim.size()) +
                     " parameter sets for " + std::to_string(shape.dims.size()) + " dimensions");
  }
  if (head_dim == 0) {
    throw ShapeError("build_eta_grid: head_dim must be >= 1");
  }
  const double root_d = std::sqrt(static_cast<double>(head_dim));
  std::vector<double> amps(params_per_dim.size());
  for (std::size_t d = 0; d < params_per_dim.size(); ++d) {
    require_finite_params(params_per_dim[d], "build_eta_grid");
    amps[d] = params_per_dim[d].tau * root_d / 2.0;
    check_eta_overflow(params_per_dim[d].mu, amps[d], shape.dims[d], width, "build_eta_grid");
  }
  std::vector<std::vector<std::size_t>> coords(length);
  for (std::size_t p = 0; p < length; ++p) {
    coords[p] = shape.coords_of(p);
  }

  EtaPair pair;
  pair.n_copies = 1;
  pair.params = params_per_dim.front();
  pair.eta_q = Matrix(length, 2 * shape.dims.size(), width);
  pair.eta_k = Matrix(length, 2 * shape.dims.size(), width);
  for (std::size_t d = 0; d < shape.dims.size(); ++d) {
    fill_eta_columns(pair.eta_q, pair.eta_k, 2 * d, params_per_dim[d].mu, amps[d],
                     [&](std::size_t i) { return static_cast<double>(coords[i][d]); });
  }
  StorageAudit::record(pair.eta_q.size());
  StorageAudit::record(pair.eta_k.size());
  return pair;
}

}  // namespace hype
