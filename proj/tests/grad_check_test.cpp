#include <doctest.h>

#include <cmath>
#include <limits>

#include "hype/grad_check.hpp"

using namespace hype;

namespace {

double fd_step(double param) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(param));
}

double rel_err(double actual, double reference) {
  return std::abs(actual - reference) / std::max(1.0, std::abs(reference));
}

struct FdGrads {
  double d_mu;
  double d_tau;
};

// Central differences through the full forward pass.
FdGrads fd_attention_grads(const Matrix& q, const Matrix& k, const Matrix& v,
                           const HypeHeadParams& params, GradRoute route) {
  const double h_mu = fd_step(params.mu);
  const double h_tau = fd_step(params.tau);
  FdGrads out{};
  out.d_mu = (attention_loss(q, k, v, {params.mu + h_mu, params.tau}, 1, route) -
              attention_loss(q, k, v, {params.mu - h_mu, params.tau}, 1, route)) /
             (2.0 * h_mu);
  out.d_tau = (attention_loss(q, k, v, {params.mu, params.tau + h_tau}, 1, route) -
               attention_loss(q, k, v, {params.mu, params.tau - h_tau}, 1, route)) /
              (2.0 * h_tau);
  return out;
}

}  // namespace

TEST_CASE("bias gradients close over mu = 0") {
  const std::size_t length = 6;
  const double tau = 1.5;
  const BiasParamGrads grads = bias_param_grads(length, {0.0, tau});
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      const double delta = static_cast<double>(j) - static_cast<double>(i);
      CHECK(grads.d_mu(i, j) == -tau * delta);  // cosh(0) = 1
      CHECK(grads.d_tau(i, j) == 0.0);          // sinh(0) = 0
    }
  }
}

TEST_CASE("bias tau gradient equals the unit-amplitude bias") {
  const HypeHeadParams params{0.07, 2.5};
  const BiasParamGrads grads = bias_param_grads(9, params);
  CHECK(bits_equal(grads.d_tau, build_bias_hype(9, {params.mu, 1.0}).values));
}

TEST_CASE("bias gradients match central finite differences") {
  const std::size_t length = 8;
  const HypeHeadParams params{0.1, 1.0};
  const BiasParamGrads grads = bias_param_grads(length, params);
  const double h = 1e-6;
  const Matrix plus_mu = build_bias_hype(length, {params.mu + h, params.tau}).values;
  const Matrix minus_mu = build_bias_hype(length, {params.mu - h, params.tau}).values;
  const Matrix plus_tau = build_bias_hype(length, {params.mu, params.tau + h}).values;
  const Matrix minus_tau = build_bias_hype(length, {params.mu, params.tau - h}).values;
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      const double fd_mu = (plus_mu(i, j) - minus_mu(i, j)) / (2.0 * h);
      const double fd_tau = (plus_tau(i, j) - minus_tau(i, j)) / (2.0 * h);
      CHECK(rel_err(grads.d_mu(i, j), fd_mu) <= 1e-6);
      CHECK(rel_err(grads.d_tau(i, j), fd_tau) <= 1e-6);
    }
  }
}

TEST_CASE("attention gradients vanish when tau is zero") {
  const Matrix q = random_fill(8, 4, 130, Distribution::StandardNormal);
  const Matrix k = random_fill(8, 4, 131, Distribution::StandardNormal);
  const Matrix v = random_fill(8, 4, 132, Distribution::StandardNormal);
  for (GradRoute route : {GradRoute::ExplicitBias, GradRoute::ConcatEta}) {
    const ParamGradient grad = attention_param_grads(q, k, v, {0.3, 0.0}, 1, route);
    CHECK(grad.d_mu == 0.0);
  }
}

TEST_CASE("attention gradients vanish for an all-zero value matrix") {
  const Matrix q = random_fill(8, 4, 133, Distribution::StandardNormal);
  const Matrix k = random_fill(8, 4, 134, Distribution::StandardNormal);
  const Matrix v(8, 4);
  const ParamGradient grad = attention_param_grads(q, k, v, {0.05, 1.0});
  CHECK(grad.d_mu == 0.0);
  CHECK(grad.d_tau == 0.0);
}

TEST_CASE("attention gradients match central finite differences") {
  const Matrix q = random_fill(16, 8, 135, Distribution::StandardNormal);
  const Matrix k = random_fill(16, 8, 136, Distribution::StandardNormal);
  const Matrix v = random_fill(16, 8, 137, Distribution::StandardNormal);
  const HypeHeadParams params{0.02, 1.0};
  const ParamGradient grad = attention_param_grads(q, k, v, params);
  const FdGrads fd = fd_attention_grads(q, k, v, params, GradRoute::ExplicitBias);
  CHECK(rel_err(grad.d_mu, fd.d_mu) <= 1e-5);
  CHECK(rel_err(grad.d_tau, fd.d_tau) <= 1e-5);
}

TEST_CASE("gradient sweep across the parameter grid") {
  const std::size_t lengths[] = {4, 16, 64};
  const std::size_t dims[] = {2, 8};
  const double mus[] = {0.0, 0.001, 0.01};
  const double taus[] = {0.0, 1.0, 2.0};
  std::uint64_t seed = 1000;
  for (std::size_t length : lengths) {
    for (std::size_t d : dims) {
      const Matrix q = random_fill(length, d, seed++, Distribution::StandardNormal);
      const Matrix k = random_fill(length, d, seed++, Distribution::StandardNormal);
      const Matrix v = random_fill(length, d, seed++, Distribution::StandardNormal);
      for (double mu : mus) {
        for (double tau : taus) {
          const HypeHeadParams params{mu, tau};
          const ParamGradient grad = attention_param_grads(q, k, v, params);
          const FdGrads fd = fd_attention_grads(q, k, v, params, GradRoute::ExplicitBias);
          CAPTURE(length);
          CAPTURE(d);
          CAPTURE(mu);
          CAPTURE(tau);
          CHECK(rel_err(grad.d_mu, fd.d_mu) <= 1e-5);
          CHECK(rel_err(grad.d_tau, fd.d_tau) <= 1e-5);
        }
      }
    }
  }
}

TEST_CASE("concat and explicit gradient routes agree") {
  const HypeHeadParams cases[] = {{0.01, 1.0}, {0.001, 2.0}, {0.1, 0.5}, {0.05, 0.0}};
  for (const HypeHeadParams& params : cases) {
    for (std::size_t n_copies : {1, 4}) {
      const Matrix q = random_fill(16, 8, 140, Distribution::StandardNormal);
      const Matrix k = random_fill(16, 8, 141, Distribution::StandardNormal);
      const Matrix v = random_fill(16, 8, 142, Distribution::StandardNormal);
      const ParamGradient explicit_grad =
          attention_param_grads(q, k, v, params, n_copies, GradRoute::ExplicitBias);
      const ParamGradient concat_grad =
          attention_param_grads(q, k, v, params, n_copies, GradRoute::ConcatEta);
      CHECK(rel_err(concat_grad.d_mu, explicit_grad.d_mu) <= 1e-10);
      CHECK(rel_err(concat_grad.d_tau, explicit_grad.d_tau) <= 1e-10);
    }
  }
}
