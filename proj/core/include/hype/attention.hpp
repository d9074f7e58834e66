#pragma once

#include <cstddef>
#include <vector>

#include "hype/encoding.hpp"
#include "hype/matrix.hpp"

namespace hype {

/// Multi-head configuration. heads.size() must equal n_heads.
struct AttentionConfig {
  std::size_t seq_len = 0;
  std::size_t head_dim = 0;
  std::size_t n_heads = 1;
  std::vector<HypeHeadParams> heads;
  bool causal = false;
  std::size_t n_copies = 1;
  FloatWidth width = FloatWidth::f64;
};

/// Per-head projection weights, each d_model x head_dim.
struct HeadWeights {
  Matrix wq;
  Matrix wk;
  Matrix wv;
};

/// softmax(Q K^T / sqrt(d) [+ causal mask]) V. The optional weights_out
/// probe receives the post-softmax attention weights.
Matrix attend_vanilla(const Matrix& q, const Matrix& k, const Matrix& v, bool causal = false,
                      Matrix* weights_out = nullptr);

/// softmax(Q K^T / sqrt(d) + bias [+ causal mask]) V with an explicit
/// L x L additive bias.
Matrix attend_with_bias(const Matrix& q, const Matrix& k, const Matrix& v, const BiasMatrix& bias,
                        bool causal = false, Matrix* weights_out = nullptr);

/// The concat path: appends the eta columns to Q and K and computes
/// softmax(Qhat Khat^T / sqrt(d) [+ causal mask]) V. Never materializes an
/// L x L bias; the hyperbolic term emerges from the matrix product.
Matrix attend_hype_concat(const Matrix& q, const Matrix& k, const Matrix& v,
                          const HypeHeadParams& params, std::size_t n_copies = 1,
                          bool causal = false, Matrix* weights_out = nullptr);

/// Concat path over a flattened grid, one eta column pair per dimension.
Matrix attend_grid(const Matrix& q, const Matrix& k, const Matrix& v, const GridShape& shape,
                   const std::vector<HypeHeadParams>& params_per_dim, bool causal = false,
                   Matrix* weights_out = nullptr);

/// Projects X through each head's weights, runs the concat path per head
/// with that head's (mu, tau), and concatenates the head outputs. No
/// output projection.
Matrix attend_multihead(const Matrix& x, const std::vector<HeadWeights>& weights,
                        const AttentionConfig& config,
                        std::vector<Matrix>* head_weights_out = nullptr);

}  // namespace hype
