#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gresnet/activations.hpp"

using namespace gresnet;

TEST_CASE("evaluation at hand-checked points") {
  CHECK(activation_eval(make_activation("relu"), -1.0) == 0.0);
  CHECK(activation_eval(make_activation("tanh"), 0.0) == 0.0);
  CHECK(activation_eval(make_activation("leaky_relu"), -2.0) == doctest::Approx(-0.02).epsilon(1e-15));
  CHECK(activation_eval(make_activation("leaky_relu", {{"negative_slope", 0.2}}), -2.0) ==
        doctest::Approx(-0.4));
  CHECK(activation_eval(make_activation("relu6"), 7.5) == 6.0);
  CHECK(activation_eval(make_activation("hardswish"), 1.0) == doctest::Approx(4.0 / 6.0));
  CHECK(activation_eval(make_activation("softshrink"), 0.3) == 0.0);
  CHECK(activation_eval(make_activation("softshrink"), -1.5) == doctest::Approx(-1.0));
  CHECK(activation_eval(make_activation("silu"), 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("reference slope constants") {
  auto same = [](const SlopeConstants& c, double L, double m, double S, double P) {
    CHECK(c.L == doctest::Approx(L).epsilon(1e-9));
    CHECK(c.m == doctest::Approx(m).epsilon(1e-9));
    CHECK(c.S == doctest::Approx(S).epsilon(1e-9));
    CHECK(c.P == doctest::Approx(P).epsilon(1e-9));
  };
  same(activation_constants("relu"), 1, 0, 1, 0);
  same(activation_constants("hardswish"), 1.5, -0.5, 1, -0.75);
  same(activation_constants("leaky_relu"), 1, 0.01, 1.01, 0.01);
  same(activation_constants("prelu"), 1, 0.25, 1.25, 0.25);
  same(activation_constants("hardsigmoid"), 1.0 / 6.0, 0, 1.0 / 6.0, 0);
  same(activation_constants("selu"), 1.758099341, 0, 1.758099341, 0);
  same(activation_constants("silu"), 1.099839320, -0.09983932013, 1, -0.1098072100);
  // Closed forms match the decimals printed next to them.
  same(activation_constants("gelu"), 1.128904145, -0.1289041452, 1, -0.145520424);
  CHECK(activation_constants("mish").L == doctest::Approx(1.199678640));
  CHECK(activation_constants("mish").m == doctest::Approx(-0.2157287822));
}

TEST_CASE("gelu constants from erf") {
  const double k = 1.0 / (std::numbers::e * std::sqrt(std::numbers::pi));
  const auto c = activation_constants("gelu");
  CHECK(c.L == doctest::Approx((1.0 + std::erf(1.0)) / 2.0 + k).epsilon(1e-14));
  CHECK(c.m == doctest::Approx(std::erfc(1.0) / 2.0 - k).epsilon(1e-14));
}

TEST_CASE("rejected and malformed activations") {
  CHECK_THROWS_AS(make_activation("hardshrink"), InfiniteConstantsError);
  CHECK_THROWS_AS(make_activation("rrelu"), InfiniteConstantsError);
  CHECK_THROWS_AS(make_activation("swishy"), UnknownActivationError);
  CHECK_THROWS_AS(make_activation("relu", {{"alpha", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_activation("threshold", {{"threshold", 0.5}, {"value", -1.0}}),
                  InfiniteConstantsError);
  CHECK_NOTHROW(make_activation("threshold", {{"threshold", 0.5}, {"value", 0.5}}));
}

TEST_CASE("catalog covers the finite rows") {
  const auto cat = activation_catalog();
  CHECK(cat.size() == 21);
  for (const auto& a : cat) {
    CAPTURE(a.name);
    CHECK(std::isfinite(a.L));
    CHECK(a.L >= a.m);
    CHECK(a.S == doctest::Approx(a.L + a.m));
    CHECK(a.P == doctest::Approx(a.L * a.m));
  }
}

TEST_CASE("every catalog envelope contains the sampled slopes") {
  for (const auto& a : activation_catalog()) {
    CAPTURE(a.name);
    const auto r = verify_slope_restriction(a, 10000, -5.0, 5.0, 7);
    CHECK(r.violations == 0);
    CHECK(r.min_quotient >= a.m - 1e-6);
    CHECK(r.max_quotient <= a.L + 1e-6);
  }
}

TEST_CASE("slope restriction examples") {
  const auto relu = verify_slope_restriction(make_activation("relu"), 10000, -5, 5, 1);
  CHECK(relu.violations == 0);
  CHECK(relu.min_quotient >= 0.0);
  CHECK(relu.max_quotient <= 1.0);
  const auto sig = verify_slope_restriction(make_activation("sigmoid"), 10000, -5, 5, 1);
  CHECK(sig.violations == 0);
  CHECK(sig.max_quotient <= 0.25 + 1e-12);
  CHECK(sig.max_quotient > 0.24);
}

TEST_CASE("numeric constants on a grid") {
  const auto hs = numeric_constants(make_activation("hardswish"), -10, 10, 1e-3);
  CHECK(hs.L_hat == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(hs.m_hat == doctest::Approx(-0.5).epsilon(1e-3));
  const auto silu = numeric_constants(make_activation("silu"), -10, 10, 1e-3);
  CHECK(std::fabs(silu.L_hat - 1.099839320) < 1e-3);
  CHECK(std::fabs(silu.m_hat + 0.09983932013) < 1e-3);
  const auto relu = numeric_constants(make_activation("relu"), -10, 10, 1e-3);
  CHECK(relu.L_hat == doctest::Approx(1.0));
  CHECK(relu.m_hat == doctest::Approx(0.0));
  CHECK_THROWS(numeric_constants(make_activation("relu"), 1, -1, 1e-3));
}

TEST_CASE("analytic derivative agrees with central differences off kinks") {
  const double xs[] = {-3.3, -1.1, -0.4, 0.35, 0.9, 2.7, 5.2};
  for (const auto& a : activation_catalog()) {
    CAPTURE(a.name);
    for (double x : xs) {
      CAPTURE(x);
      const double h = 1e-6;
      const double fd = (activation_eval(a, x + h) - activation_eval(a, x - h)) / (2 * h);
      CHECK(activation_derivative(a, x) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
  CHECK(activation_derivative(make_activation("relu"), 0.0) == 0.0);
}
