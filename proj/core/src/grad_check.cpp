#include "hype/grad_check.hpp"

#include <cmath>
#include <string>

namespace hype {

namespace {

double canonical(double v) { return v == 0.0 ? 0.0 : v; }

struct ForwardState {
  Matrix logits;
  Matrix weights;  // post-softmax
  double loss = 0.0;
};

double sum_entries(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.values()) {
    acc += v;
  }
  return acc;
}

ForwardState forward(const Matrix& q, const Matrix& k, const Matrix& v,
                     const HypeHeadParams& params, std::size_t n_copies, GradRoute route) {
  const double inv_root_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  ForwardState state;
  if (route == GradRoute::ExplicitBias) {
    const BiasMatrix bias = build_bias_hype(q.rows(), params, q.width());
    state.logits = add(scale(matmul(q, transpose(k)), inv_root_d), bias.values);
  } else {
    const EtaPair eta = build_eta_pair(q.rows(), q.cols(), params, n_copies, q.width());
    state.logits = scale(matmul(concat_cols(q, eta.eta_q), transpose(concat_cols(k, eta.eta_k))),
                         inv_root_d);
  }
  state.weights = row_softmax(state.logits);
  state.loss = sum_entries(matmul(state.weights, v));
  return state;
}

// Pulls the upstream cotangent back through the softmax rows:
// dL/dZ_ij = P_ij * (dL/dP_ij - sum_k dL/dP_ik * P_ik).
Matrix softmax_pullback(const Matrix& weights, const Matrix& d_loss_d_weights) {
  Matrix out(weights.rows(), weights.cols(), weights.width());
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    double row_dot = 0.0;
    for (std::size_t j = 0; j < weights.cols(); ++j) {
      row_dot += d_loss_d_weights(i, j) * weights(i, j);
    }
    for (std::size_t j = 0; j < weights.cols(); ++j) {
      out.set(i, j, weights(i, j) * (d_loss_d_weights(i, j) - row_dot));
    }
  }
  return out;
}

double contract(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      acc += a(i, j) * b(i, j);
    }
  }
  return acc;
}

// d(eta)/dmu scales each entry by +/- the token index, following the sign
// of the exponent in that column.
Matrix eta_mu_derivative(const Matrix& eta, bool grow_first) {
  return Matrix::from_fn(
      eta.rows(), eta.cols(),
      [&](std::size_t i, std::size_t j) {
        const bool grow_column = (j % 2 == 0) == grow_first;
        const double sign = grow_column ? 1.0 : -1.0;
        return sign * static_cast<double>(i) * eta(i, j);
      },
      eta.width());
}

}  // namespace

BiasParamGrads bias_param_grads(std::size_t length, const HypeHeadParams& params,
                                FloatWidth width) {
  if (length == 0) {
    throw ShapeError("bias_param_grads: length must be >= 1");
  }
  BiasParamGrads grads;
  // d/dtau is the unit-amplitude bias itself.
  grads.d_tau = build_bias_hype(length, HypeHeadParams{params.mu, 1.0}, width).values;
  Matrix d_mu(length, length, width);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) {
      const double delta = static_cast<double>(j - i);
      const double v = canonical(-params.tau * delta * std::cosh(params.mu * delta));
      d_mu.set(i, j, v);
      d_mu.set(j, i, canonical(-v));
    }
  }
  grads.d_mu = std::move(d_mu);
  return grads;
}

double attention_loss(const Matrix& q, const Matrix& k, const Matrix& v,
                      const HypeHeadParams& params, std::size_t n_copies, GradRoute route,
                      LossKind loss) {
  (void)loss;  // only SumOutputs exists
  return forward(q, k, v, params, n_copies, route).loss;
}

ParamGradient attention_param_grads(const Matrix& q, const Matrix& k, const Matrix& v,
                                    const HypeHeadParams& params, std::size_t n_copies,
                                    GradRoute route, LossKind loss) {
  const ForwardState state = forward(q, k, v, params, n_copies, route);
  const double inv_root_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));

  // dLoss/dO for the sum reduction is all-ones; pull back through O = P V.
  const Matrix ones = Matrix::from_fn(
      q.rows(), v.cols(), [](std::size_t, std::size_t) { return 1.0; }, q.width());
  const Matrix d_loss_d_weights = matmul(ones, transpose(v));
  const Matrix d_loss_d_logits = softmax_pullback(state.weights, d_loss_d_weights);

  ParamGradient grad;
  grad.loss_kind = loss;
  if (route == GradRoute::ExplicitBias || params.tau == 0.0) {
    const BiasParamGrads bias_grads = bias_param_grads(q.rows(), params, q.width());
    grad.d_mu = contract(d_loss_d_logits, bias_grads.d_mu);
    grad.d_tau = contract(d_loss_d_logits, bias_grads.d_tau);
    return grad;
  }

  const EtaPair eta = build_eta_pair(q.rows(), q.cols(), params, n_copies, q.width());
  const Matrix d_eta_q = eta_mu_derivative(eta.eta_q, /*grow_first=*/true);
  const Matrix d_eta_k = eta_mu_derivative(eta.eta_k, /*grow_first=*/false);
  const Matrix dz_dmu = scale(
      add(matmul(d_eta_q, transpose(eta.eta_k)), matmul(eta.eta_q, transpose(d_eta_k))),
      inv_root_d);
  grad.d_mu = contract(d_loss_d_logits, dz_dmu);

  // Eta entries are linear in tau, so d(eta_q)/dtau is eta_q at tau = 1.
  const EtaPair unit =
      build_eta_pair(q.rows(), q.cols(), HypeHeadParams{params.mu, 1.0}, n_copies, q.width());
  const Matrix dz_dtau = scale(matmul(unit.eta_q, transpose(eta.eta_k)), inv_root_d);
  grad.d_tau = contract(d_loss_d_logits, dz_dtau);
  return grad;
}

}  // namespace hype
