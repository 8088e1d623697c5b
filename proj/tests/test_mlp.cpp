#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "irlab/gradcheck.hpp"
#include "irlab/mlp.hpp"
#include "irlab/optim.hpp"
#include "irlab/rng.hpp"

using namespace irlab;

TEST_SUITE("mlp") {

TEST_CASE("a bare linear head computes W x + b") {
  Mlp net({1}, {1}, Activation::ReLU, 0.0, 0);
  net.params().head_w[0](0, 0) = 2.0;
  net.params().head_b[0](0) = 1.0;
  Eigen::MatrixXd x(1, 1);
  x << 3.0;
  auto out = net.forward(x, ForwardMode::Eval);
  CHECK(out[0](0, 0) == doctest::Approx(7.0));
}

TEST_CASE("relu hidden layers zero out negative preactivations") {
  Mlp net({2, 2}, {1}, Activation::ReLU, 0.0, 0);
  net.params().w[0] << 1.0, 0.0,
                       0.0, 1.0;
  net.params().b[0] << 0.0, 0.0;
  net.params().head_w[0] << 1.0, 1.0;
  net.params().head_b[0](0) = 0.0;
  Eigen::MatrixXd x(1, 2);
  x << -5.0, 2.0;
  auto out = net.forward(x, ForwardMode::Eval);
  CHECK(out[0](0, 0) == doctest::Approx(2.0));
}

TEST_CASE("two heads share the trunk but not their projections") {
  Mlp net({3, 8}, {2, 2}, Activation::Tanh, 0.0, 11);
  Eigen::MatrixXd x(4, 3);
  Rng rng(1);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rand_normal(rng);
  auto out = net.forward(x, ForwardMode::Eval);
  REQUIRE(out.size() == 2);
  CHECK(out[0].rows() == 4);
  CHECK(out[0].cols() == 2);
  CHECK((out[0] - out[1]).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("glorot initialisation stays within its fan bound") {
  Mlp net({6, 64}, {3}, Activation::ReLU, 0.0, 5);
  const double bound_w0 = std::sqrt(6.0 / (6 + 64));
  CHECK(net.params().w[0].cwiseAbs().maxCoeff() <= bound_w0);
  CHECK(net.params().w[0].cwiseAbs().maxCoeff() > 0.1 * bound_w0);
  CHECK(net.params().b[0].cwiseAbs().maxCoeff() == 0.0);
  const double bound_h = std::sqrt(6.0 / (64 + 3));
  CHECK(net.params().head_w[0].cwiseAbs().maxCoeff() <= bound_h);
}

TEST_CASE("eval mode ignores dropout and train mode rescales survivors") {
  Mlp net({4, 32}, {1}, Activation::ReLU, 0.5, 3);
  Eigen::MatrixXd x(1, 4);
  x << 0.3, -0.2, 0.9, 0.5;
  auto a = net.forward(x, ForwardMode::Eval);
  auto b = net.forward(x, ForwardMode::Eval);
  CHECK(a[0](0, 0) == b[0](0, 0));

  Rng rng(17);
  Mlp::Cache cache;
  auto c = net.forward(x, ForwardMode::Train, &rng, &cache);
  REQUIRE(cache.mask.size() == 1);
  const auto& mask = cache.mask[0];
  int dropped = 0;
  for (int i = 0; i < mask.size(); ++i) {
    bool off = mask(0, i) == 0.0;
    bool kept = std::abs(mask(0, i) - 2.0) < 1e-12;
    CHECK((off || kept));
    dropped += off ? 1 : 0;
  }
  CHECK(dropped > 0);
  CHECK(dropped < mask.size());
  (void)c;
}

TEST_CASE("dropout draws differ across calls but follow the given rng") {
  Mlp net({4, 32}, {1}, Activation::ReLU, 0.5, 3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, 4);
  Rng r1(5), r2(5), r3(6);
  Mlp::Cache c1, c2, c3;
  auto o1 = net.forward(x, ForwardMode::Train, &r1, &c1);
  auto o2 = net.forward(x, ForwardMode::Train, &r2, &c2);
  auto o3 = net.forward(x, ForwardMode::Train, &r3, &c3);
  CHECK((c1.mask[0] - c2.mask[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(o1[0](0, 0) == o2[0](0, 0));
  CHECK((c1.mask[0] - c3.mask[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("backward gradients match finite differences") {
  for (Activation act : {Activation::ReLU, Activation::Tanh}) {
    CAPTURE(static_cast<int>(act));
    Mlp net({3, 8, 6}, {2}, act, 0.0, 21);
    Eigen::MatrixXd x(5, 3);
    Rng rng(2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rand_normal(rng);
    Eigen::MatrixXd target = Eigen::MatrixXd::Ones(5, 2);

    auto loss_value = [&]() {
      auto out = net.forward(x, ForwardMode::Eval);
      return 0.5 * (out[0] - target).squaredNorm();
    };
    Mlp::Cache cache;
    auto out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
    std::vector<Eigen::MatrixXd> head_grads = {out[0] - target};
    MlpParams grads = net.backward(cache, head_grads);

    GradCheckReport report = finite_diff_check(net.params(), loss_value, grads, 1e-5);
    CHECK(report.max_rel_error < 1e-6);
    CHECK(report.checked == net.params().flat_size());
  }
}

TEST_CASE("backward propagates gradients to the input when asked") {
  Mlp net({2, 6}, {1}, Activation::Tanh, 0.0, 9);
  Eigen::MatrixXd x(1, 2);
  x << 0.4, -0.7;
  auto loss_at = [&](const Eigen::MatrixXd& q) {
    auto out = net.forward(q, ForwardMode::Eval);
    return 0.5 * out[0].squaredNorm();
  };
  Mlp::Cache cache;
  auto out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
  std::vector<Eigen::MatrixXd> head_grads = {out[0]};
  Eigen::MatrixXd input_grad;
  net.backward(cache, head_grads, &input_grad);

  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Eigen::MatrixXd xp = x, xm = x;
    xp(0, j) += h;
    xm(0, j) -= h;
    double fd = (loss_at(xp) - loss_at(xm)) / (2.0 * h);
    CHECK(input_grad(0, j) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("gradients through dropout respect the stored mask") {
  Mlp net({3, 16}, {1}, Activation::ReLU, 0.4, 13);
  Eigen::MatrixXd x(2, 3);
  x << 0.5, -1.0, 0.25,
       1.5, 0.75, -0.5;
  Rng rng(31);
  Mlp::Cache cache;
  auto out = net.forward(x, ForwardMode::Train, &rng, &cache);
  std::vector<Eigen::MatrixXd> head_grads = {Eigen::MatrixXd::Ones(2, 1)};
  MlpParams grads = net.backward(cache, head_grads);

  auto loss_with_mask = [&]() {
    Eigen::MatrixXd h = (x * net.params().w[0].transpose()).rowwise() +
                        net.params().b[0].transpose();
    h = h.cwiseMax(0.0);
    h.array() *= cache.mask[0].array();
    Eigen::MatrixXd o = (h * net.params().head_w[0].transpose()).rowwise() +
                        net.params().head_b[0].transpose();
    return o.sum();
  };
  CHECK(loss_with_mask() == doctest::Approx(out[0].sum()));
  GradCheckReport report =
      finite_diff_check(net.params(), loss_with_mask, grads, 1e-5);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("checkpoints restore parameters exactly") {
  Mlp net({3, 8, 4}, {2, 1}, Activation::Tanh, 0.25, 77);
  auto path = std::filesystem::temp_directory_path() / "irlab_mlp_test.ckpt";
  mlp_save(net, path.string());
  Mlp loaded = mlp_load(path.string());
  std::filesystem::remove(path);

  CHECK(loaded.dropout_rate() == net.dropout_rate());
  Eigen::MatrixXd x(3, 3);
  x << 1, 2, 3, -1, 0.5, 0.25, 0, 0, 1;
  auto a = net.forward(x, ForwardMode::Eval);
  auto b = loaded.forward(x, ForwardMode::Eval);
  CHECK((a[0] - b[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a[1] - b[1]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flat parameter access walks every block exactly once") {
  Mlp net({2, 4}, {1}, Activation::ReLU, 0.0, 1);
  MlpParams& p = net.params();
  const std::size_t n = p.flat_size();
  CHECK(n == 2 * 4 + 4 + 4 + 1);
  double marker = 1000.0;
  for (std::size_t i = 0; i < n; ++i) *p.flat_entry(i) = marker + double(i);
  CHECK(p.w[0].minCoeff() >= marker);
  CHECK(p.head_b[0](0) >= marker);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += *p.flat_entry(i);
  CHECK(total == doctest::Approx(n * marker + n * (n - 1) / 2.0));
}

}

TEST_SUITE("optim") {

TEST_CASE("adam minimises a quadratic bowl") {
  Mlp net({1}, {1}, Activation::ReLU, 0.0, 0);
  net.params().head_w[0](0, 0) = 4.0;
  net.params().head_b[0](0) = -3.0;
  AdamState state = AdamState::init(net.params(), {.learning_rate = 0.05});
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  for (int it = 0; it < 2000; ++it) {
    Mlp::Cache cache;
    auto out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
    std::vector<Eigen::MatrixXd> head_grads = {out[0]};
    MlpParams grads = net.backward(cache, head_grads);
    adam_step(net.params(), grads, state);
  }
  auto out = net.forward(x, ForwardMode::Eval);
  CHECK(std::abs(out[0](0, 0)) < 1e-4);
  CHECK(state.step == 2000);
}

TEST_CASE("first adam step moves by roughly the learning rate") {
  Mlp net({1}, {1}, Activation::ReLU, 0.0, 0);
  net.params().head_w[0](0, 0) = 1.0;
  net.params().head_b[0](0) = 0.0;
  MlpParams grads = net.params().zeros_like();
  grads.head_w[0](0, 0) = 123.0;
  AdamState state = AdamState::init(net.params(), {});
  adam_step(net.params(), grads, state);
  CHECK(net.params().head_w[0](0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(net.params().head_b[0](0) == 0.0);
}

TEST_CASE("non-finite gradients abort the step") {
  Mlp net({2, 4}, {1}, Activation::ReLU, 0.0, 2);
  MlpParams grads = net.params().zeros_like();
  grads.w[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state = AdamState::init(net.params(), {});
  CHECK_THROWS_AS(adam_step(net.params(), grads, state), std::runtime_error);
}

TEST_CASE("finite difference checker flags a corrupted gradient") {
  Mlp net({2, 4}, {1}, Activation::Tanh, 0.0, 8);
  Eigen::MatrixXd x(3, 2);
  x << 0.1, 0.2, -0.5, 0.8, 1.0, -1.0;
  auto loss_value = [&]() {
    auto out = net.forward(x, ForwardMode::Eval);
    return 0.5 * out[0].squaredNorm();
  };
  Mlp::Cache cache;
  auto out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
  std::vector<Eigen::MatrixXd> head_grads = {out[0]};
  MlpParams grads = net.backward(cache, head_grads);
  grads.w[0](0, 0) += 0.5;
  GradCheckReport report = finite_diff_check(net.params(), loss_value, grads);
  CHECK(report.max_rel_error > 1e-2);
  CHECK(report.worst_block == "w0");
  CHECK(report.block_rel_error.at("w0") > 1e-2);
}

TEST_CASE("subsampled checks probe a bounded number of entries") {
  Mlp net({4, 16, 16}, {2}, Activation::ReLU, 0.0, 12);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 4);
  auto loss_value = [&]() {
    auto out = net.forward(x, ForwardMode::Eval);
    return out[0].squaredNorm();
  };
  Mlp::Cache cache;
  auto out = net.forward(x, ForwardMode::Eval, nullptr, &cache);
  std::vector<Eigen::MatrixXd> head_grads = {2.0 * out[0]};
  MlpParams grads = net.backward(cache, head_grads);
  GradCheckReport report = finite_diff_check(net.params(), loss_value, grads, 1e-5, 50);
  CHECK(report.checked == 50);
  CHECK(report.max_rel_error < 1e-5);
}

}
