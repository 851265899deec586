#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "apl/errors.hpp"
#include "apl/mlp.hpp"
#include "apl/rng.hpp"
#include "oracles.hpp"

using namespace apl;

TEST_CASE("mlp: parameter count follows the spec layout") {
  MLPSpec spec{{3, 8, 2}, Activation::kRelu, Activation::kIdentity};
  CHECK(param_count(spec) == 3 * 8 + 8 + 8 * 2 + 2);
  CHECK_THROWS_AS(param_count(MLPSpec{{4}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(param_count(MLPSpec{{4, 0, 1}, {}, {}}), std::invalid_argument);
}

TEST_CASE("mlp: zero weights forward to the bias") {
  MLPSpec spec{{3, 2}, Activation::kRelu, Activation::kIdentity};
  ParamVector params(param_count(spec), 0.0);
  params[6] = 0.25;  // biases follow the 2x3 weight block
  params[7] = -1.5;
  const Vec out = mlp_forward(spec, params, Vec{1.0, 2.0, 3.0});
  CHECK(out[0] == 0.25);
  CHECK(out[1] == -1.5);
}

TEST_CASE("mlp: 1->1 net with weight 2, bias 1 maps 3 to 7") {
  MLPSpec spec{{1, 1}, Activation::kIdentity, Activation::kIdentity};
  ParamVector params{2.0, 1.0};
  const Vec out = mlp_forward(spec, params, Vec{3.0});
  CHECK(out[0] == 7.0);
}

TEST_CASE("mlp: forward matches the naive oracle on random relu nets") {
  Rng rng(42);
  MLPSpec spec{{3, 8, 2}, Activation::kRelu, Activation::kIdentity};
  for (int trial = 0; trial < 20; ++trial) {
    const ParamVector params = init_params(spec, rng);
    Vec input{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Vec ours = mlp_forward(spec, params, input);
    const Vec oracle = test::naive_forward(spec, params, input);
    for (int i = 0; i < 2; ++i) {
      CHECK(ours[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mlp: dimension mismatches are rejected") {
  MLPSpec spec{{3, 2}, Activation::kRelu, Activation::kIdentity};
  ParamVector params(param_count(spec), 0.1);
  CHECK_THROWS_AS(mlp_forward(spec, params, Vec{1.0, 2.0}), std::invalid_argument);
  ParamVector short_params(3, 0.0);
  CHECK_THROWS_AS(mlp_forward(spec, short_params, Vec{1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("mlp: non-finite intermediates fault with the layer index") {
  MLPSpec spec{{1, 1, 1}, Activation::kIdentity, Activation::kIdentity};
  ParamVector params{1e308, 0.0, 1e308, 0.0};
  try {
    mlp_forward(spec, params, Vec{1e308});
    FAIL("expected NumericalFault");
  } catch (const NumericalFault& fault) {
    CHECK(std::string(fault.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("loss_gradients: linear net, squared output") {
  // f(w, b) = (w * x + b)^2 at x = 1, b = 0: df/dw = 2w.
  MLPSpec spec{{1, 1}, Activation::kIdentity, Activation::kIdentity};
  for (double w : {0.3, -1.7, 2.0}) {
    ParamVector params{w, 0.0};
    Eigen::MatrixXd input(1, 1);
    input(0, 0) = 1.0;
    ParamVector grad(2, 0.0);
    const double loss = loss_gradients(
        spec, params, input,
        [](const Eigen::MatrixXd& y, Eigen::MatrixXd& dy) {
          dy(0, 0) = 2.0 * y(0, 0);
          return y(0, 0) * y(0, 0);
        },
        grad);
    CHECK(loss == doctest::Approx(w * w));
    CHECK(grad[0] == doctest::Approx(2.0 * w));
    CHECK(grad[1] == doctest::Approx(2.0 * w));  // db: 2(wx+b) * 1
  }
}

TEST_CASE("loss_gradients: constant loss has zero gradient") {
  Rng rng(3);
  MLPSpec spec{{2, 5, 3}, Activation::kTanh, Activation::kTanh};
  const ParamVector params = init_params(spec, rng);
  Eigen::MatrixXd input(4, 2);
  for (int i = 0; i < input.size(); ++i) input(i / 2, i % 2) = rng.uniform(-1, 1);
  ParamVector grad(params.size(), 1.0);
  loss_gradients(
      spec, params, input,
      [](const Eigen::MatrixXd&, Eigen::MatrixXd&) { return 3.5; }, grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("loss_gradients: finite differences agree over random cases") {
  Rng rng(2024);
  const MLPSpec specs[] = {
      {{2, 4, 1}, Activation::kRelu, Activation::kIdentity},
      {{3, 5, 2}, Activation::kTanh, Activation::kIdentity},
      {{2, 3, 3, 1}, Activation::kTanh, Activation::kTanh},
  };
  // Heads: mean of squares, sum, log-mean-exp of row sums.
  const auto mse_head = [](const Eigen::MatrixXd& y, Eigen::MatrixXd& dy) {
    dy = 2.0 * y / y.size();
    return y.squaredNorm() / y.size();
  };
  const auto lme_head = [](const Eigen::MatrixXd& y, Eigen::MatrixXd& dy) {
    const Eigen::VectorXd row_sums = y.rowwise().sum();
    const double max_v = row_sums.maxCoeff();
    const Eigen::VectorXd ex = (row_sums.array() - max_v).exp();
    const double total = ex.sum();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      dy.row(r).setConstant(ex(r) / total);
    }
    return max_v + std::log(total / y.rows());
  };

  int case_count = 0;
  for (const MLPSpec& spec : specs) {
    for (int trial = 0; trial < 17; ++trial) {
      const ParamVector params = init_params(spec, rng);
      Eigen::MatrixXd input(3, spec.input_dim());
      for (Eigen::Index i = 0; i < input.rows(); ++i) {
        for (Eigen::Index j = 0; j < input.cols(); ++j) input(i, j) = rng.uniform(-1.5, 1.5);
      }
      const LossHead& head = (trial % 2 == 0) ? LossHead(mse_head) : LossHead(lme_head);
      ParamVector grad(params.size(), 0.0);
      loss_gradients(spec, params, input, head, grad);
      const auto numeric = test::finite_difference_gradient(
          [&](const ParamVector& p) {
            Eigen::MatrixXd dy_unused;
            const Eigen::MatrixXd y = mlp_forward(spec, p, input);
            Eigen::MatrixXd scratch = Eigen::MatrixXd::Zero(y.rows(), y.cols());
            return head(y, scratch);
          },
          params);
      CHECK(test::max_relative_error(grad, numeric) < 1e-4);
      case_count += 1;
    }
  }
  CHECK(case_count > 50);
}

TEST_CASE("mlp_input_gradient matches parameter-path backward") {
  Rng rng(9);
  MLPSpec spec{{4, 6, 2}, Activation::kTanh, Activation::kIdentity};
  const ParamVector params = init_params(spec, rng);
  Eigen::MatrixXd input(5, 4);
  for (Eigen::Index i = 0; i < input.size(); ++i) input(i % 5, i / 5) = rng.uniform(-1, 1);
  ForwardCache cache;
  mlp_forward(spec, params, input, cache);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Ones(5, 2);

  ParamVector grad(params.size(), 0.0);
  Eigen::MatrixXd dx_full;
  mlp_backward(spec, params, cache, dy, grad, &dx_full);
  const Eigen::MatrixXd dx_only = mlp_input_gradient(spec, params, cache, dy);
  CHECK((dx_full - dx_only).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("polyak: endpoint and midpoint behavior") {
  ParamVector target{0.0, 4.0};
  ParamVector online{2.0, 8.0};

  ParamVector t1 = target;
  polyak_update(t1, online, 1.0);
  CHECK(t1[0] == 2.0);
  CHECK(t1[1] == 8.0);

  ParamVector t0 = target;
  polyak_update(t0, online, 0.0);
  CHECK(t0[0] == 0.0);
  CHECK(t0[1] == 4.0);

  ParamVector th = target;
  polyak_update(th, online, 0.5);
  CHECK(th[0] == 1.0);
  CHECK(th[1] == 6.0);
}

TEST_CASE("polyak: contraction of the gap, elementwise") {
  Rng rng(17);
  ParamVector target(32), online(32);
  for (int i = 0; i < 32; ++i) {
    target[i] = rng.uniform(-3, 3);
    online[i] = rng.uniform(-3, 3);
  }
  const double tau = 0.3;
  ParamVector updated = target;
  polyak_update(updated, online, tau);
  for (int i = 0; i < 32; ++i) {
    CHECK(updated[i] - online[i] ==
          doctest::Approx((1.0 - tau) * (target[i] - online[i])).epsilon(1e-12));
  }
}

TEST_CASE("polyak: rejects tau outside [0,1] and length mismatch") {
  ParamVector a{1.0}, b{2.0};
  CHECK_THROWS_AS(polyak_update(a, b, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(polyak_update(a, b, 1.1), std::invalid_argument);
  ParamVector c{1.0, 2.0};
  CHECK_THROWS_AS(polyak_update(a, c, 0.5), std::invalid_argument);
}
