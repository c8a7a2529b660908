#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "quasiroute/tensor.hpp"

using namespace quasiroute;
namespace op = quasiroute::ops;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, bool requires_grad = true) {
    std::vector<double> v(static_cast<std::size_t>(r) * c);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::from(r, c, std::move(v), requires_grad);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("sigmoid derivative at zero is 0.25") {
    Tensor x = Tensor::from(1, 1, {0.0}, true);
    Tensor y = op::sum(op::sigmoid(x));
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("loss = sum(x) gives ones") {
    Tensor x = Tensor::zeros(3, 4, true);
    backward(op::sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("loss = sum(x*y) gives the partner values") {
    Rng rng(1);
    Tensor x = random_tensor(2, 3, rng);
    Tensor y = random_tensor(2, 3, rng);
    backward(op::sum(op::mul(x, y)));
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x.grad()[i] == doctest::Approx(y.data()[i]));
        CHECK(y.grad()[i] == doctest::Approx(x.data()[i]));
    }
}

TEST_CASE("gradients accumulate until reset") {
    Tensor x = Tensor::from(1, 2, {1.0, 2.0}, true);
    backward(op::sum(x));
    backward(op::sum(x));
    CHECK(x.grad()[0] == 2.0);
    x.zero_grad();
    backward(op::sum(x));
    CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("backward requires a scalar") {
    Tensor x = Tensor::zeros(2, 2, true);
    CHECK_THROWS_AS(backward(op::exp(x)), ShapeError);
}

TEST_CASE("quadratic grad_check is exact to rounding") {
    Rng rng(2);
    Tensor x = random_tensor(3, 3, rng);
    const double err = grad_check([](const Tensor& t) { return op::sum(op::mul(t, t)); }, x, 1e-5);
    CHECK(err <= 1e-9);
}

TEST_CASE("every primitive passes grad_check at 1e-6") {
    Rng rng(3);

    SUBCASE("matmul") {
        Tensor b = random_tensor(4, 5, rng);
        Tensor x = random_tensor(3, 4, rng);
        CHECK(grad_check([&](const Tensor& t) { return op::sum(op::matmul(t, b)); }, x) < 1e-6);
        Tensor a = random_tensor(3, 4, rng);
        Tensor y = random_tensor(4, 5, rng);
        CHECK(grad_check([&](const Tensor& t) { return op::sum(op::matmul(a, t)); }, y) < 1e-6);
    }
    SUBCASE("transpose, concat, gather, select") {
        Tensor x = random_tensor(3, 4, rng);
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::transpose(t)); }, x) < 1e-6);
        Tensor other = random_tensor(3, 2, rng);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(
                          op::mul(op::concat_cols({t, other}), op::concat_cols({t, other})));
                  },
                  x) < 1e-6);
        CHECK(grad_check(
                  [](const Tensor& t) {
                      Tensor g = op::gather_rows(t, {2, 0, 2});
                      return op::sum(op::mul(g, g));
                  },
                  x) < 1e-6);
        CHECK(grad_check(
                  [](const Tensor& t) {
                      Tensor s = op::select(t, {0, 1, 2}, {3, 1, 0});
                      return op::sum(op::mul(s, s));
                  },
                  x) < 1e-6);
    }
    SUBCASE("elementwise and reductions") {
        Tensor x = random_tensor(4, 3, rng);
        Tensor b = random_tensor(4, 3, rng);
        for (double& v : b.data()) v = std::abs(v) + 0.5;  // safe divisor
        CHECK(grad_check([&](const Tensor& t) { return op::sum(op::div(t, b)); }, x) < 1e-6);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(op::div(b, op::add_scalar(op::mul(t, t), 1.0)));
                  },
                  x) < 1e-6);
        CHECK(grad_check([](const Tensor& t) { return op::mean(op::tanh(t)); }, x) < 1e-6);
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::exp(t)); }, x) < 1e-6);
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::sigmoid(t)); }, x) < 1e-6);
        CHECK(grad_check(
                  [](const Tensor& t) { return op::sum(op::log(op::add_scalar(op::mul(t, t), 1.0))); },
                  x) < 1e-6);
        CHECK(grad_check(
                  [](const Tensor& t) { return op::sum(op::sqrt(op::add_scalar(op::mul(t, t), 0.1))); },
                  x) < 1e-6);
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::sum_axis(op::mul(t, t), 0)); },
                         x) < 1e-6);
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::sum_axis(op::mul(t, t), 1)); },
                         x) < 1e-6);
        // relu checked away from the kink
        Tensor shifted = random_tensor(4, 3, rng);
        for (double& v : shifted.data()) v += v > 0 ? 0.5 : -0.5;
        CHECK(grad_check([](const Tensor& t) { return op::sum(op::relu(t)); }, shifted) < 1e-6);
    }
    SUBCASE("broadcast") {
        Tensor x = random_tensor(1, 4, rng);
        Tensor w = random_tensor(3, 4, rng);
        CHECK(grad_check(
                  [&](const Tensor& t) { return op::sum(op::mul(op::broadcast_to(t, 3, 4), w)); },
                  x) < 1e-6);
        Tensor col = random_tensor(3, 1, rng);
        CHECK(grad_check(
                  [&](const Tensor& t) { return op::sum(op::mul(op::broadcast_to(t, 3, 4), w)); },
                  col) < 1e-6);
    }
    SUBCASE("masked_softmax") {
        Tensor x = random_tensor(3, 5, rng);
        Tensor mask = Tensor::zeros(3, 5);
        mask.data()[1] = -kMaskLarge;
        mask.data()[7] = -kMaskLarge;
        Tensor weights = random_tensor(3, 5, rng, false);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(op::mul(op::masked_softmax(t, mask), weights));
                  },
                  x) < 1e-6);
    }
    SUBCASE("instance_norm") {
        Tensor x = random_tensor(6, 4, rng);
        Tensor gamma = random_tensor(1, 4, rng);
        Tensor beta = random_tensor(1, 4, rng);
        Tensor weights = random_tensor(6, 4, rng, false);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(op::mul(op::instance_norm(t, gamma, beta), weights));
                  },
                  x) < 1e-5);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(op::mul(op::instance_norm(x, t, beta), weights));
                  },
                  gamma) < 1e-6);
        CHECK(grad_check(
                  [&](const Tensor& t) {
                      return op::sum(op::mul(op::instance_norm(x, gamma, t), weights));
                  },
                  beta) < 1e-6);
    }
}

TEST_CASE("masked_softmax semantics") {
    Tensor logits = Tensor::from(1, 3, {5.0, 1.0, -2.0}, true);
    Tensor mask = Tensor::from(1, 3, {-kMaskLarge, 0.0, -kMaskLarge});
    Tensor p = op::masked_softmax(logits, mask);
    CHECK(p.at(0, 0) == 0.0);
    CHECK(p.at(0, 1) == 1.0);
    CHECK(p.at(0, 2) == 0.0);
    backward(op::sum(op::mul(p, Tensor::from(1, 3, {1.0, 2.0, 3.0}))));
    for (double g : logits.grad()) CHECK(g == doctest::Approx(0.0));  // degenerate simplex

    Tensor wide = Tensor::from(2, 2, {0.3, -0.7, 2.0, 2.0}, true);
    Tensor none = Tensor::zeros(2, 2);
    Tensor q = op::masked_softmax(wide, none);
    for (int i = 0; i < 2; ++i)
        CHECK(q.at(i, 0) + q.at(i, 1) == doctest::Approx(1.0).epsilon(1e-12));

    Tensor all_masked = Tensor::from(1, 2, {-kMaskLarge, -kMaskLarge});
    CHECK_THROWS_AS(op::masked_softmax(wide, op::broadcast_to(all_masked, 2, 2)), DomainError);
}

TEST_CASE("instance_norm semantics") {
    // constant rows normalize to zero
    Tensor x = Tensor::from(3, 2, {4.0, -1.0, 4.0, -1.0, 4.0, -1.0});
    Tensor gamma = Tensor::from(1, 2, {1.0, 1.0});
    Tensor beta = Tensor::zeros(1, 2);
    Tensor out = op::instance_norm(x, gamma, beta, 1e-5);
    for (double v : out.data()) CHECK(v == doctest::Approx(0.0));

    Rng rng(6);
    Tensor y = random_tensor(8, 3, rng, false);
    Tensor out2 = op::instance_norm(y, Tensor::from(1, 3, {1, 1, 1}), Tensor::zeros(1, 3), 1e-5);
    for (int j = 0; j < 3; ++j) {
        double mu = 0.0, var = 0.0;
        for (int i = 0; i < 8; ++i) mu += out2.at(i, j);
        mu /= 8;
        for (int i = 0; i < 8; ++i) var += (out2.at(i, j) - mu) * (out2.at(i, j) - mu);
        var /= 8;
        CHECK(std::abs(mu) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps-shrunk variance
    }
}

TEST_CASE("shape and domain errors") {
    Tensor a = Tensor::zeros(2, 3);
    Tensor b = Tensor::zeros(3, 3);
    CHECK_THROWS_AS(op::add(a, b), ShapeError);
    CHECK_THROWS_AS(op::matmul(a, a), ShapeError);
    CHECK_THROWS_AS(op::log(Tensor::from(1, 1, {0.0})), DomainError);
    CHECK_THROWS_AS(op::div(a, Tensor::zeros(2, 3)), DomainError);
}

TEST_CASE("checkpoint round trip") {
    const std::string path = "/tmp/quasiroute_test_ckpt.bin";
    std::vector<NamedArray> arrays;
    arrays.push_back({"w1", 2, 3, {1.0, -2.5, 0.25, 3.0, 4.5, -0.125}});
    arrays.push_back({"b1", 1, 3, {0.5, 0.0, -1.0}});
    save_checkpoint(path, arrays, {{"d_h", 16.0}, {"layers", 2.0}});

    Checkpoint ckpt = load_checkpoint(path);
    CHECK(ckpt.hyper.at("d_h") == 16.0);
    const NamedArray& w1 = ckpt.find("w1");
    CHECK(w1.rows == 2);
    CHECK(w1.cols == 3);
    for (std::size_t i = 0; i < w1.values.size(); ++i)
        CHECK(w1.values[i] == doctest::Approx(arrays[0].values[i]).epsilon(1e-7));
    CHECK_THROWS_AS(ckpt.find("nope"), InvalidInput);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

}  // TEST_SUITE
