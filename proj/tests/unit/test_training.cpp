#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "gresnet/training.hpp"
#include "oracles.hpp"

using namespace gresnet;
using std::numbers::pi;

namespace {

Model zero_weight_model(double a_raw, double lipschitz) {
  Model model = make_model(BlockShape{1, {1}}, 1, lipschitz, {make_activation("relu")}, 3);
  RawBlock& b = model.blocks[0];
  b.weights_raw[0](0, 0) = 0.0;
  b.biases[0][0] = 0.0;
  b.a_raw[0] = a_raw;
  b.b_raw[0] = 0.4;
  return model;
}

}  // namespace

TEST_CASE("mse examples") {
  CHECK(mse_loss(Vector{0.3, -1.0}, Vector{0.3, -1.0}) == 0.0);
  CHECK(mse_loss(Vector{1.0, 1.0}, Vector{0.0, 0.0}) == 1.0);
  CHECK(mse_loss(Vector{1.0, 0.0}, Vector{0.0, 0.0}) == 0.5);
  CHECK_THROWS(mse_loss(Vector{1.0}, Vector{1.0, 2.0}));
}

TEST_CASE("sine dataset") {
  const Dataset zero = make_sine_dataset(3, -1.0, 1.0, 0.0, 1);
  REQUIRE(zero.size() == 3);
  for (const auto& t : zero.targets) CHECK(t[0] == 0.0);
  const Dataset d1 = make_sine_dataset(64, -2 * pi, 2 * pi, 0.5, 9);
  const Dataset d2 = make_sine_dataset(64, -2 * pi, 2 * pi, 0.5, 9);
  CHECK(d1.inputs == d2.inputs);
  CHECK(d1.targets == d2.targets);
  CHECK_FALSE(d1.inputs == make_sine_dataset(64, -2 * pi, 2 * pi, 0.5, 10).inputs);
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1.inputs[i][0] > -2 * pi);
    CHECK(d1.inputs[i][0] < 2 * pi);
    CHECK(d1.targets[i][0] == 0.5 * std::sin(d1.inputs[i][0]));
  }
}

TEST_CASE("linear fit oracle") {
  const LinearOracle full = linear_fit_oracle(-2 * pi, 2 * pi, 1.0);
  CHECK(std::fabs(full.slope - (-3.0 / (4 * pi * pi))) <= 1e-12);
  CHECK(std::fabs(full.intercept) <= 1e-12);
  CHECK(std::fabs(full.loss - (0.5 - 3.0 / (4 * pi * pi))) <= 1e-12);

  const LinearOracle none = linear_fit_oracle(-2 * pi, 2 * pi, 0.0);
  CHECK(none.slope == 0.0);
  CHECK(none.loss == 0.0);

  // Frozen from the quadrature oracle below.
  const LinearOracle half = linear_fit_oracle(-2 * pi, 2 * pi, 0.5);
  CHECK(half.loss == doctest::Approx(0.10600227806706167).epsilon(1e-13));
  CHECK(half.slope == doctest::Approx(-0.03799544386587667).epsilon(1e-13));

  for (const auto& [lo, hi, amp] : {std::tuple{-2 * pi, 2 * pi, 0.5}, std::tuple{-1.0, 3.0, 1.0},
                                    std::tuple{0.0, pi, 2.0}}) {
    const auto q = testing::sine_line_fit_by_quadrature(lo, hi, amp);
    const LinearOracle o = linear_fit_oracle(lo, hi, amp);
    CHECK(o.slope == doctest::Approx(q.slope).epsilon(1e-10));
    CHECK(std::fabs(o.intercept - q.intercept) <= 1e-10);
    CHECK(o.loss == doctest::Approx(q.loss).epsilon(1e-9));
  }
}

TEST_CASE("line fit and collapse metric") {
  const Vector x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit_line(x, Vector{2, 2, 2, 2}).r2 == 1.0);
  CHECK_THROWS(fit_line(Vector{1, 1}, Vector{0, 1}));

  const MaterializedModel linear = materialize(zero_weight_model(0.3, 1.0));
  const LineFit lf = collapse_metric(linear, -2 * pi, 2 * pi, 512);
  CHECK(lf.r2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lf.max_residual <= 1e-14);
  CHECK(lf.slope == doctest::Approx(std::tanh(0.3)));

  Vector gx(512), gy(512);
  for (std::size_t i = 0; i < 512; ++i) {
    gx[i] = -2 * pi + 4 * pi * static_cast<double>(i) / 511.0;
    gy[i] = std::sin(gx[i]);
  }
  CHECK(fit_line(gx, gy).r2 < 0.5);
}

TEST_CASE("parameter flattening") {
  Model model = make_model(BlockShape{2, {3, 2}}, 2, 1.0, {make_activation("tanh"), make_activation("relu")}, 5);
  const Vector flat = flatten_parameters(model);
  CHECK(flat.size() == model.parameter_count());
  Vector bumped = flat;
  for (double& v : bumped) v += 0.25;
  assign_parameters(model, bumped);
  CHECK(flatten_parameters(model) == bumped);
  std::set<std::string> names;
  for (std::size_t i = 0; i < flat.size(); ++i) names.insert(parameter_name(model, i));
  CHECK(names.size() == flat.size());
  CHECK_THROWS(assign_parameters(model, Vector(3, 0.0)));
}

TEST_CASE("a_raw gradient of a zero-weight block") {
  for (double a_raw : {-1.3, -0.2, 0.4, 1.1}) {
    CAPTURE(a_raw);
    const double lip = 0.8;
    const Model model = zero_weight_model(a_raw, lip);
    const std::vector<Vector> xs{{1.5}, {-0.7}, {2.2}}, ys{{0.3}, {0.1}, {-0.4}};
    const LossGradient lg = loss_and_gradient(model, xs, ys);
    const double t = std::tanh(a_raw), a = lip * t;
    double dloss_da = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) dloss_da += 2.0 * (a * xs[s][0] - ys[s][0]) * xs[s][0] / 3.0;
    // Layout: W_raw (1), a_raw, b_raw, bias.
    CHECK(lg.gradient[1] == doctest::Approx(dloss_da * lip * (1 - t * t)).epsilon(1e-12));
    CHECK(lg.gradient[2] == 0.0);
  }
}

TEST_CASE("gradient agrees with finite differences") {
  const std::vector<ActivationSpec> acts{make_activation("tanh"), make_activation("softplus"),
                                         make_activation("silu")};
  const Model base = make_model(BlockShape{2, {5, 4, 2}}, 2, 1.5, acts, 21);
  const std::vector<Vector> xs{{0.3, -1.2}, {1.7, 0.4}, {-0.9, -0.1}, {2.5, 1.0}};
  const std::vector<Vector> ys{{0.1, 0.0}, {-0.3, 0.5}, {0.2, 0.2}, {0.0, -0.6}};
  const LossGradient lg = loss_and_gradient(base, xs, ys);
  const Vector flat = flatten_parameters(base);
  auto loss_at = [&](const std::vector<double>& p) {
    Model m = base;
    assign_parameters(m, p);
    return dataset_loss(materialize(m), xs, ys);
  };
  std::size_t agree = 0, compared = 0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const auto fd = testing::central_difference(loss_at, flat, i, 1e-5);
    if (fd.kink) continue;
    ++compared;
    const double err = std::fabs(fd.value - lg.gradient[i]);
    if (err <= 1e-4 * std::max(std::fabs(fd.value), 1e-5)) {
      ++agree;
    } else {
      MESSAGE(parameter_name(base, i) << ": fd " << fd.value << " vs " << lg.gradient[i]);
    }
  }
  CHECK(compared > flat.size() / 2);
  CHECK(agree == compared);
}

TEST_CASE("non-finite targets raise") {
  const Model model = zero_weight_model(0.2, 1.0);
  CHECK_THROWS_AS(loss_and_gradient(model, {{1.0}}, {{std::nan("")}}), NonFiniteGradientError);
}

TEST_CASE("training") {
  const Dataset data = make_sine_dataset(64, -2 * pi, 2 * pi, 0.5, 4);
  SUBCASE("zero learning rate leaves the loss flat") {
    Model model = make_model(BlockShape{1, {8, 1}}, 1, 1.0, {make_activation("relu"), make_activation("relu")}, 2);
    const Model before = model;
    OptimizerConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 5;
    const TrainingHistory h = train(model, data, cfg);
    REQUIRE(h.losses.size() == 5);
    for (double l : h.losses) CHECK(l == h.losses.front());
    CHECK(model == before);
    CHECK(h.certification_failures == 0);
  }
  SUBCASE("both optimizers reduce the loss and stay certified") {
    for (const char* name : {"adam", "sgd"}) {
      CAPTURE(name);
      Model model = make_model(BlockShape{1, {8, 1}}, 1, 1.0, {make_activation("relu"), make_activation("relu")}, 2);
      OptimizerConfig cfg;
      cfg.name = name;
      cfg.epochs = 60;
      cfg.batch = 16;
      cfg.certify_every = 20;
      const TrainingHistory h = train(model, data, cfg);
      CHECK_FALSE(h.diverged);
      CHECK(h.losses.back() < h.losses.front());
      CHECK(h.certification_checks == 3);
      CHECK(h.certification_failures == 0);
      Model again = make_model(BlockShape{1, {8, 1}}, 1, 1.0, {make_activation("relu"), make_activation("relu")}, 2);
      CHECK(train(again, data, cfg).losses == h.losses);
    }
  }
  OptimizerConfig bad;
  bad.name = "rmsprop";
  CHECK_THROWS(bad.validate());
}
