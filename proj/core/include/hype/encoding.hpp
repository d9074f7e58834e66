#pragma once

#include <cstddef>
#include <vector>

#include "hype/matrix.hpp"

namespace hype {

/// Per-head slope/amplitude pair. The bias built from these is
/// a(i, j) = -tau * sinh(mu * (j - i)).
struct HypeHeadParams {
  double mu = 0.0;
  double tau = 1.0;
};

/// The (eta_q, eta_k) column augmentations for one head, each L x 2n.
/// Their product reconstructs sqrt(d) times the hyperbolic bias:
/// (eta_q * eta_k^T)(i, l) = -tau * sqrt(d) * sinh(mu * (l - i)).
struct EtaPair {
  Matrix eta_q;
  Matrix eta_k;
  std::size_t n_copies = 1;
  HypeHeadParams params;
};

enum class BiasKind { HyPE, ALiBi, Composite };

const char* to_string(BiasKind kind);

/// Parameters a bias matrix was built from.
struct BiasProvenance {
  std::vector<HypeHeadParams> params;   // one entry per grid dimension (one for 1-D)
  double alibi_slope = 0.0;             // meaningful for ALiBi kind only
  std::vector<std::size_t> grid_dims;   // empty for plain sequence biases
};

/// Explicit L x L additive attention bias.
struct BiasMatrix {
  BiasKind kind = BiasKind::HyPE;
  Matrix values;
  BiasProvenance provenance;
};

/// Token layout for multi-dimensional inputs flattened into a sequence.
/// Row-major flattening: the last dimension varies fastest.
struct GridShape {
  std::vector<std::size_t> dims;

  std::size_t length() const;
  std::size_t flat_index(const std::vector<std::size_t>& coords) const;
  std::vector<std::size_t> coords_of(std::size_t flat) const;
};

/// Explicit hyperbolic bias: entry (i, j) = -tau * sinh(mu * (j - i)).
/// Antisymmetric with an exactly-zero diagonal. Throws OverflowError when
/// |mu| * (L - 1) pushes sinh past the storage width.
BiasMatrix build_bias_hype(std::size_t length, const HypeHeadParams& params,
                           FloatWidth width = FloatWidth::f64);

/// Antisymmetric linear comparator: entry (i, j) = -m * (j - i).
BiasMatrix build_bias_alibi(std::size_t length, double slope,
                            FloatWidth width = FloatWidth::f64);

/// Builds the eta augmentation pair. For n_copies = 1, eta_q columns hold
/// (tau * sqrt(d) / 2) * e^{+mu i} and e^{-mu i}; eta_k columns hold
/// +e^{-mu i} and -e^{+mu i}. For n_copies > 1 the column pattern repeats
/// with the eta_q amplitude divided by n_copies, so the product is
/// independent of the stacking factor.
EtaPair build_eta_pair(std::size_t length, std::size_t head_dim, const HypeHeadParams& params,
                       std::size_t n_copies = 1, FloatWidth width = FloatWidth::f64);

/// Default per-head schedule: mu_h = 2^-h / (2 * L_extra), tau_h = 1.
/// All slopes are distinct and strictly below 1 / L_extra, keeping sinh in
/// its near-linear regime up to the extrapolation length.
std::vector<HypeHeadParams> recommend_mu_schedule(std::size_t n_heads, std::size_t l_extra);

/// Composite bias over a flattened grid: entry (p, q) sums the per-dimension
/// hyperbolic terms over the coordinate deltas between tokens p and q.
BiasMatrix build_bias_grid(const GridShape& shape, const std::vector<HypeHeadParams>& params_per_dim,
                           FloatWidth width = FloatWidth::f64);

/// Eta pair of width 2 * dims() whose product equals sqrt(d) times the
/// grid bias, one aligned column pair per dimension.
EtaPair build_eta_grid(const GridShape& shape, std::size_t head_dim,
                       const std::vector<HypeHeadParams>& params_per_dim,
                       FloatWidth width = FloatWidth::f64);

}  // namespace hype
