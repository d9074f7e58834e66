#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hype/encoding.hpp"

using namespace hype;

namespace {

// Brute-force oracle for the grid bias: walks every token pair and sums
// the per-dimension hyperbolic terms from independently derived coords.
Matrix brute_force_grid_bias(const std::vector<std::size_t>& dims,
                             const std::vector<HypeHeadParams>& params) {
  std::size_t length = 1;
  for (std::size_t extent : dims) {
    length *= extent;
  }
  auto coord = [&](std::size_t flat, std::size_t dim) {
    std::size_t stride = 1;
    for (std::size_t d = dims.size(); d-- > dim + 1;) {
      stride *= dims[d];
    }
    return (flat / stride) % dims[dim];
  };
  Matrix out(length, length);
  for (std::size_t p = 0; p < length; ++p) {
    for (std::size_t q = 0; q < length; ++q) {
      double acc = 0.0;
      for (std::size_t d = 0; d < dims.size(); ++d) {
        const double delta =
            static_cast<double>(coord(q, d)) - static_cast<double>(coord(p, d));
        acc -= params[d].tau * std::sinh(params[d].mu * delta);
      }
      out.set(p, q, acc);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("hyperbolic bias is zero at zero slope") {
  const Matrix b = build_bias_hype(8, {0.0, 2.0}).values;
  for (double v : b.values()) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("hyperbolic bias frozen first off-diagonal entry") {
  const Matrix b = build_bias_hype(4, {0.1, 1.0}).values;
  CHECK(b(0, 1) == doctest::Approx(-0.10016675001984403).epsilon(1e-15));
}

TEST_CASE("hyperbolic bias is exactly antisymmetric with zero diagonal") {
  const Matrix b = build_bias_hype(16, {0.05, 2.0}).values;
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(b(i, i) == 0.0);
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(b(i, j) == -b(j, i));
    }
  }
}

TEST_CASE("hyperbolic bias rows decrease strictly for positive parameters") {
  const double mus[] = {0.01, 0.1, 0.5};
  const double taus[] = {0.5, 1.0, 3.0};
  for (double mu : mus) {
    for (double tau : taus) {
      const Matrix b = build_bias_hype(12, {mu, tau}).values;
      for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 1; j < b.cols(); ++j) {
          CHECK(b(i, j) < b(i, j - 1));
        }
      }
    }
  }
}

TEST_CASE("hyperbolic bias overflow raises a named diagnostic") {
  CHECK_THROWS_AS(build_bias_hype(128, {10.0, 1.0}), OverflowError);
  try {
    build_bias_hype(128, {10.0, 1.0});
  } catch (const OverflowError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mu=10") != std::string::npos);
    CHECK(msg.find("L=128") != std::string::npos);
  }
  // sinh(127) fits a double but not a float.
  CHECK_THROWS_AS(build_bias_hype(128, {1.0, 1.0}, FloatWidth::f32), OverflowError);
  CHECK_NOTHROW(build_bias_hype(128, {1.0, 1.0}, FloatWidth::f64));
}

TEST_CASE("alibi bias is a linear ramp") {
  const Matrix zero = build_bias_alibi(4, 0.0).values;
  for (double v : zero.values()) {
    CHECK(v == 0.0);
  }
  const double m = 0.01;
  const Matrix b = build_bias_alibi(4, m).values;
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(b(0, j) == (j == 0 ? 0.0 : -(m * static_cast<double>(j))));
  }
  CHECK(b(3, 0) == m * 3.0);
}

TEST_CASE("alibi approximation is bounded by the cubic term") {
  // Scalar oracle: the local coefficient of sinh(x) - x is x^3/6.
  for (double x = 1e-3; x <= 0.1; x *= 2.0) {
    const double err = std::sinh(x) - x;
    const double cubic = x * x * x / 6.0;
    CHECK(err / cubic > 0.99);
    CHECK(err / cubic < 1.01);
  }
  const double mu = 1.0 / 64.0;  // mu * (L-1) stays below 1
  const std::size_t length = 33;
  const Matrix hype = build_bias_hype(length, {mu, 1.0}).values;
  const Matrix alibi = build_bias_alibi(length, mu).values;
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      const double x = std::abs(mu * (static_cast<double>(j) - static_cast<double>(i)));
      CHECK(std::abs(hype(i, j) - alibi(i, j)) <= 0.2 * x * x * x);
    }
  }
}

TEST_CASE("eta pair structure at zero slope") {
  const EtaPair eta = build_eta_pair(3, 4, {0.0, 1.0});
  CHECK(eta.eta_q.rows() == 3);
  CHECK(eta.eta_q.cols() == 2);
  for (double v : eta.eta_q.values()) {
    CHECK(v == 1.0);  // tau * sqrt(4) / 2
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(eta.eta_k(i, 0) == 1.0);
    CHECK(eta.eta_k(i, 1) == -1.0);
  }
  const Matrix product = matmul(eta.eta_q, transpose(eta.eta_k));
  CHECK(max_abs(product) == 0.0);
}

TEST_CASE("eta pair scalar hand expansion") {
  // (1/2)(e^0 e^{-0.1} - e^0 e^{0.1}) = -sinh(0.1)
  const EtaPair eta = build_eta_pair(2, 1, {0.1, 1.0});
  const Matrix product = matmul(eta.eta_q, transpose(eta.eta_k));
  CHECK(product(0, 1) == doctest::Approx(-0.10016675001984403).epsilon(1e-14));
}

TEST_CASE("eta product reproduces the scaled hyperbolic bias") {
  const std::size_t length = 12;
  const std::size_t d = 5;
  const HypeHeadParams params{0.07, 1.5};
  const EtaPair eta = build_eta_pair(length, d, params);
  const Matrix product = matmul(eta.eta_q, transpose(eta.eta_k));
  const double root_d = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t l = 0; l < length; ++l) {
      const double expected =
          -params.tau * root_d *
          std::sinh(params.mu * (static_cast<double>(l) - static_cast<double>(i)));
      CHECK(product(i, l) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("eta sign pattern alternates per column") {
  const EtaPair eta = build_eta_pair(6, 3, {0.2, 0.7}, 3);
  CHECK(eta.eta_q.cols() == 6);
  for (std::size_t i = 0; i < eta.eta_q.rows(); ++i) {
    for (std::size_t j = 0; j < eta.eta_q.cols(); ++j) {
      CHECK(eta.eta_q(i, j) > 0.0);
      if (j % 2 == 0) {
        CHECK(eta.eta_k(i, j) > 0.0);
      } else {
        CHECK(eta.eta_k(i, j) < 0.0);
      }
    }
  }
}

TEST_CASE("eta stacking leaves the product unchanged") {
  const HypeHeadParams params{0.03, 1.0};
  const EtaPair base = build_eta_pair(10, 4, params, 1);
  const Matrix reference = matmul(base.eta_q, transpose(base.eta_k));
  for (std::size_t n : {2, 3, 4, 8}) {
    const EtaPair stacked = build_eta_pair(10, 4, params, n);
    CHECK(stacked.eta_q.cols() == 2 * n);
    const Matrix product = matmul(stacked.eta_q, transpose(stacked.eta_k));
    CHECK(max_rel_error(product, reference) <= 1e-12);
  }
}

TEST_CASE("eta overflow raises a named diagnostic") {
  CHECK_THROWS_AS(build_eta_pair(200, 4, {1.0, 1.0}, 1, FloatWidth::f32), OverflowError);
  CHECK_THROWS_AS(build_eta_pair(1024, 4, {1.0, 1.0}), OverflowError);
}

TEST_CASE("concat product identity against the explicit bias") {
  struct Config {
    std::size_t length;
    std::size_t d;
    HypeHeadParams params;
  };
  const Config configs[] = {
      {16, 4, {0.01, 1.0}},
      {32, 8, {0.001, 2.0}},
      {8, 2, {0.1, 0.5}},
  };
  for (const Config& c : configs) {
    for (FloatWidth width : {FloatWidth::f64, FloatWidth::f32}) {
      const Matrix q =
          random_fill(c.length, c.d, 1000 + c.length, Distribution::StandardNormal, width);
      const Matrix k =
          random_fill(c.length, c.d, 2000 + c.length, Distribution::StandardNormal, width);
      const EtaPair eta = build_eta_pair(c.length, c.d, c.params, 1, width);
      const Matrix lhs = scale(
          subtract(matmul(concat_cols(q, eta.eta_q), transpose(concat_cols(k, eta.eta_k))),
                   matmul(q, transpose(k))),
          1.0 / std::sqrt(static_cast<double>(c.d)));
      const Matrix bias = build_bias_hype(c.length, c.params, width).values;
      CHECK(max_rel_error(lhs, bias) <= (width == FloatWidth::f64 ? 1e-12 : 1e-4));
    }
  }
}

TEST_CASE("mu schedule respects the extrapolation constraint") {
  const auto single = recommend_mu_schedule(1, 1024);
  REQUIRE(single.size() == 1);
  CHECK(single[0].mu == 1.0 / 2048.0);
  CHECK(single[0].tau == 1.0);

  const auto four = recommend_mu_schedule(4, 1024);
  REQUIRE(four.size() == 4);
  for (std::size_t h = 0; h < 4; ++h) {
    CHECK(four[h].mu > 0.0);
    CHECK(four[h].mu < 1.0 / 1024.0);
    for (std::size_t g = h + 1; g < 4; ++g) {
      CHECK(four[h].mu != four[g].mu);
    }
    // Largest |mu * (j - i)| at L = L_extra stays below 1.
    CHECK(four[h].mu * 1023.0 < 1.0);
  }
}

TEST_CASE("grid shape flattening is a bijection") {
  const GridShape shape{{3, 4, 2}};
  CHECK(shape.length() == 24);
  std::vector<bool> seen(24, false);
  for (std::size_t flat = 0; flat < 24; ++flat) {
    const auto coords = shape.coords_of(flat);
    CHECK(shape.flat_index(coords) == flat);
    CHECK_FALSE(seen[flat]);
    seen[flat] = true;
  }
  // Row-major: the last dimension varies fastest.
  CHECK(shape.flat_index({0, 0, 1}) == 1);
  CHECK(shape.flat_index({0, 1, 0}) == 2);
  CHECK(shape.flat_index({1, 0, 0}) == 8);
  CHECK_THROWS_AS(shape.flat_index({3, 0, 0}), ShapeError);
  CHECK_THROWS_AS(shape.coords_of(24), ShapeError);
  CHECK_THROWS_AS((GridShape{{0, 2}}.length()), ShapeError);
}

TEST_CASE("grid bias reduces to the sequence bias in 1-D") {
  const HypeHeadParams params{0.02, 1.5};
  const BiasMatrix grid = build_bias_grid(GridShape{{16}}, {params});
  const BiasMatrix line = build_bias_hype(16, params);
  CHECK(bits_equal(grid.values, line.values));
}

TEST_CASE("grid bias vanishes when every slope is zero") {
  const BiasMatrix b = build_bias_grid(GridShape{{2, 2}}, {{0.0, 1.0}, {0.0, 1.0}});
  for (double v : b.values.values()) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("grid bias matches the brute-force pairwise oracle") {
  const std::vector<std::size_t> dims{3, 4};
  const std::vector<HypeHeadParams> params{{0.1, 1.0}, {0.05, 1.0}};
  const BiasMatrix built = build_bias_grid(GridShape{dims}, params);
  const Matrix oracle = brute_force_grid_bias(dims, params);
  CHECK(max_rel_error(built.values, oracle) <= 1e-12);

  const std::vector<std::size_t> dims3{2, 3, 2};
  const std::vector<HypeHeadParams> params3{{0.2, 0.5}, {0.07, 2.0}, {0.01, 1.0}};
  const BiasMatrix built3 = build_bias_grid(GridShape{dims3}, params3);
  CHECK(max_rel_error(built3.values, brute_force_grid_bias(dims3, params3)) <= 1e-12);
}

TEST_CASE("grid bias validates the parameter count") {
  CHECK_THROWS_AS(build_bias_grid(GridShape{{3, 4}}, {{0.1, 1.0}}), ShapeError);
}

TEST_CASE("eta grid reduces to the sequence eta pair in 1-D") {
  const HypeHeadParams params{0.05, 2.0};
  const EtaPair grid = build_eta_grid(GridShape{{10}}, 4, {params});
  const EtaPair line = build_eta_pair(10, 4, params, 1);
  CHECK(bits_equal(grid.eta_q, line.eta_q));
  CHECK(bits_equal(grid.eta_k, line.eta_k));
}

TEST_CASE("eta grid product reproduces the scaled grid bias") {
  const GridShape shape{{2, 3}};
  const std::vector<HypeHeadParams> params{{0.1, 1.0}, {0.2, 1.0}};
  const std::size_t d = 4;
  const EtaPair eta = build_eta_grid(shape, d, params);
  CHECK(eta.eta_q.cols() == 4);
  const Matrix product =
      scale(matmul(eta.eta_q, transpose(eta.eta_k)), 1.0 / std::sqrt(static_cast<double>(d)));
  const Matrix bias = build_bias_grid(shape, params).values;
  CHECK(max_rel_error(product, bias) <= 1e-12);
}

TEST_CASE("eta grid consistency over random shapes") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t rank = 1 + rng() % 3;
    std::vector<std::size_t> dims;
    std::vector<HypeHeadParams> params;
    std::size_t length = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      const std::size_t extent = 2 + rng() % 3;  // keeps L <= 64
      dims.push_back(extent);
      length *= extent;
      params.push_back({0.01 + 0.05 * static_cast<double>(rng() % 4), 0.5 + static_cast<double>(rng() % 3)});
    }
    CAPTURE(trial);
    REQUIRE(length <= 64);
    const std::size_t head_dim = 4;
    const EtaPair eta = build_eta_grid(GridShape{dims}, head_dim, params);
    const Matrix product = scale(matmul(eta.eta_q, transpose(eta.eta_k)),
                                 1.0 / std::sqrt(static_cast<double>(head_dim)));
    const Matrix bias = build_bias_grid(GridShape{dims}, params).values;
    CHECK(max_rel_error(product, bias) <= 1e-12);
  }
}

TEST_CASE("permuting aligned eta column pairs leaves the product unchanged") {
  const GridShape shape{{2, 3}};
  const std::vector<HypeHeadParams> params{{0.1, 1.0}, {0.2, 0.5}};
  const EtaPair eta = build_eta_grid(shape, 4, params);
  const Matrix reference = matmul(eta.eta_q, transpose(eta.eta_k));
  // Swap the two dimension pairs identically on both sides.
  const Matrix q_swapped = concat_cols(eta.eta_q.slice_cols(2, 2), eta.eta_q.slice_cols(0, 2));
  const Matrix k_swapped = concat_cols(eta.eta_k.slice_cols(2, 2), eta.eta_k.slice_cols(0, 2));
  const Matrix swapped = matmul(q_swapped, transpose(k_swapped));
  CHECK(max_rel_error(swapped, reference) <= 1e-12);
}
