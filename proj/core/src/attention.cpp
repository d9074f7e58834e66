#include "hype/attention.hpp"

#include <cmath>
#include <string>

namespace hype {

namespace {

void require_qkv(const Matrix& q, const Matrix& k, const Matrix& v, const char* op) {
  if (q.width() != k.width() || q.width() != v.width()) {
    throw ShapeError(std::string(op) + ": width mismatch across Q/K/V");
  }
  if (q.rows() == 0 || q.cols() == 0) {
    throw ShapeError(std::string(op) + ": empty Q");
  }
  if (k.rows() != q.rows() || k.cols() != q.cols() || v.rows() != q.rows() ||
      v.cols() != q.cols()) {
    throw ShapeError(std::string(op) + ": Q " + shape_string(q) + ", K " + shape_string(k) +
                     ", V " + shape_string(v));
  }
}

// Masked logits get the width's most negative finite value; with per-row
// max subtraction exp() underflows to exactly zero there.
Matrix apply_causal_mask(const Matrix& logits) {
  const double most_negative = -width_max(logits.width());
  Matrix masked(logits.rows(), logits.cols(), logits.width());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      masked.set(i, j, j > i ? most_negative : logits(i, j));
    }
  }
  return masked;
}

Matrix finish_attention(const Matrix& logits, const Matrix& v, bool causal, Matrix* weights_out) {
  const Matrix weights = row_softmax(causal ? apply_causal_mask(logits) : logits);
  if (weights_out != nullptr) {
    *weights_out = weights;
  }
  return matmul(weights, v);
}

}  // namespace

Matrix attend_vanilla(const Matrix& q, const Matrix& k, const Matrix& v, bool causal,
                      Matrix* weights_out) {
  require_qkv(q, k, v, "attend_vanilla");
  const Matrix logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return finish_attention(logits, v, causal, weights_out);
}

Matrix attend_with_bias(const Matrix& q, const Matrix& k, const Matrix& v, const BiasMatrix& bias,
                        bool causal, Matrix* weights_out) {
  require_qkv(q, k, v, "attend_with_bias");
  if (bias.values.rows() != q.rows() || bias.values.cols() != q.rows()) {
    throw ShapeError("attend_with_bias: bias " + shape_string(bias.values) + " for L=" +
                     std::to_string(q.rows()));
  }
  const Matrix scaled = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  const Matrix logits = add(scaled, bias.values);
  return finish_attention(logits, v, causal, weights_out);
}

Matrix attend_hype_concat(const Matrix& q, const Matrix& k, const Matrix& v,
                          const HypeHeadParams& params, std::size_t n_copies, bool causal,
                          Matrix* weights_out) {
  require_qkv(q, k, v, "attend_hype_concat");
  const EtaPair eta = build_eta_pair(q.rows(), q.cols(), params, n_copies, q.width());
  const Matrix q_hat = concat_cols(q, eta.eta_q);
  const Matrix k_hat = concat_cols(k, eta.eta_k);
  // Scaling stays 1/sqrt(d) of the original head dim, so the product
  // contributes QK^T/sqrt(d) plus the hyperbolic bias.
  const Matrix logits =
      scale(matmul(q_hat, transpose(k_hat)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return finish_attention(logits, v, causal, weights_out);
}

Matrix attend_grid(const Matrix& q, const Matrix& k, const Matrix& v, const GridShape& shape,
                   const std::vector<HypeHeadParams>& params_per_dim, bool causal,
                   Matrix* weights_out) {
  require_qkv(q, k, v, "attend_grid");
  if (shape.length() != q.rows()) {
    throw ShapeError("attend_grid: grid length " + std::to_string(shape.length()) +
                     " does not match L=" + std::to_string(q.rows()));
  }
  const EtaPair eta = build_eta_grid(shape, q.cols(), params_per_dim, q.width());
  const Matrix q_hat = concat_cols(q, eta.eta_q);
  const Matrix k_hat = concat_cols(k, eta.eta_k);
  const Matrix logits =
      scale(matmul(q_hat, transpose(k_hat)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
  return finish_attention(logits, v, causal, weights_out);
}

Matrix attend_multihead(const Matrix& x, const std::vector<HeadWeights>& weights,
                        const AttentionConfig& config, std::vector<Matrix>* head_weights_out) {
  if (config.n_heads == 0 || config.heads.size() != config.n_heads) {
    throw ShapeError("attend_multihead: " + std::to_string(config.heads.size()) +
                     " head parameter sets for n_heads=" + std::to_string(config.n_heads));
  }
  if (weights.size() != config.n_heads) {
    throw ShapeError("attend_multihead: " + std::to_string(weights.size()) +
                     " weight sets for n_heads=" + std::to_string(config.n_heads));
  }
  if (x.rows() != config.seq_len) {
    throw ShapeError("attend_multihead: X has " + std::to_string(x.rows()) + " rows, config L=" +
                     std::to_string(config.seq_len));
  }
  if (head_weights_out != nullptr) {
    head_weights_out->clear();
  }
  Matrix out;
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const HeadWeights& w = weights[h];
    if (w.wq.rows() != x.cols() || w.wq.cols() != config.head_dim ||
        w.wk.rows() != x.cols() || w.wk.cols() != config.head_dim ||
        w.wv.rows() != x.cols() || w.wv.cols() != config.head_dim) {
      throw ShapeError("attend_multihead: head " + std::to_string(h) + " weights must be " +
                       std::to_string(x.cols()) + "x" + std::to_string(config.head_dim));
    }
    const Matrix q = matmul(x, w.wq);
    const Matrix k = matmul(x, w.wk);
    const Matrix v = matmul(x, w.wv);
    Matrix probe;
    Matrix head_out = attend_hype_concat(q, k, v, config.heads[h], config.n_copies, config.causal,
                                         head_weights_out != nullptr ? &probe : nullptr);
    if (head_weights_out != nullptr) {
      head_weights_out->push_back(std::move(probe));
    }
    out = h == 0 ? std::move(head_out) : concat_cols(out, head_out);
  }
  return out;
}

}  // namespace hype
