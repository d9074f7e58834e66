#pragma once

#include <cstddef>

#include "hype/encoding.hpp"
#include "hype/matrix.hpp"

namespace hype {

/// Scalar reduction applied to the attention output before differentiating.
enum class LossKind { SumOutputs };

/// Which parameterization the chain rule runs through. Both describe the
/// same function of (mu, tau); their gradients must agree.
enum class GradRoute { ExplicitBias, ConcatEta };

/// Entrywise derivatives of the hyperbolic bias:
///   d/dmu  a(i,j) = -tau * (j-i) * cosh(mu * (j-i))
///   d/dtau a(i,j) = -sinh(mu * (j-i))
struct BiasParamGrads {
  Matrix d_mu;
  Matrix d_tau;
};

BiasParamGrads bias_param_grads(std::size_t length, const HypeHeadParams& params,
                                FloatWidth width = FloatWidth::f64);

/// Scalar loss gradients with respect to the head parameters.
struct ParamGradient {
  double d_mu = 0.0;
  double d_tau = 0.0;
  LossKind loss_kind = LossKind::SumOutputs;
};

/// Forward pass only: the scalar loss for fixed Q, K, V at the given
/// parameters. Shared by both routes so finite differencing perturbs
/// exactly the function whose gradient is reported.
double attention_loss(const Matrix& q, const Matrix& k, const Matrix& v,
                      const HypeHeadParams& params, std::size_t n_copies = 1,
                      GradRoute route = GradRoute::ExplicitBias,
                      LossKind loss = LossKind::SumOutputs);

/// Analytic dLoss/dmu and dLoss/dtau through the softmax Jacobian. The
/// concat route differentiates the eta entries themselves, except at
/// tau = 0 where it falls back to the explicit-bias parameterization.
ParamGradient attention_param_grads(const Matrix& q, const Matrix& k, const Matrix& v,
                                    const HypeHeadParams& params, std::size_t n_copies = 1,
                                    GradRoute route = GradRoute::ExplicitBias,
                                    LossKind loss = LossKind::SumOutputs);

}  // namespace hype
