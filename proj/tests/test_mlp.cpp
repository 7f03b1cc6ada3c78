// Copyright 2026 The DUL Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "dul/errors.hpp"
#include "dul/losses.hpp"
#include "dul/mlp.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using dul::Matrix;

namespace {

dul::Mlp scalar_model(double w) {
  dul::DenseLayer l{Matrix(1, 1, w), {0.0}};
  return dul::Mlp({l}, dul::Activation::relu);
}

dul::ParamGrads scalar_grad(double g) {
  return dul::ParamGrads{{dul::DenseLayer{Matrix(1, 1, g), {0.0}}}};
}

Matrix random_inputs(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 2.0);
  Matrix x(n, d);
  for (auto& v : x.data()) v = nd(gen);
  return x;
}

// Straightforward layer-by-layer evaluation.
std::vector<double> reference_forward(const dul::Mlp& m, std::vector<double> x) {
  const auto& layers = m.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    std::vector<double> y(l.weight.rows());
    for (std::size_t r = 0; r < y.size(); ++r) {
      double s = l.bias[r];
      for (std::size_t c = 0; c < x.size(); ++c) s += l.weight(r, c) * x[c];
      if (li + 1 < layers.size()) s = m.activation() == dul::Activation::relu ? std::max(0.0, s) : std::tanh(s);
      y[r] = s;
    }
    x = std::move(y);
  }
  return x;
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dul_mlp_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("mlp_init shapes, scaling and determinism") {
  const std::vector<std::size_t> sizes{2, 16, 3};
  const auto a = dul::mlp_init(sizes, dul::Activation::relu, 7);
  const auto b = dul::mlp_init(sizes, dul::Activation::relu, 7);
  CHECK(a == b);
  CHECK(a.layers().size() == 2);
  CHECK(a.layer_sizes() == sizes);
  for (const auto& l : a.layers())
    for (double v : l.bias) CHECK(v == 0.0);
  CHECK(!(a == dul::mlp_init(sizes, dul::Activation::relu, 8)));

  const std::vector<std::size_t> lin{2, 3};
  CHECK(dul::mlp_init(lin, dul::Activation::tanh, 1).layers().size() == 1);
  const std::vector<std::size_t> one{2};
  CHECK_THROWS_AS(dul::mlp_init(one, dul::Activation::relu, 1), dul::InputError);
  const std::vector<std::size_t> zero{2, 0, 3};
  CHECK_THROWS_AS(dul::mlp_init(zero, dul::Activation::relu, 1), dul::InputError);

  // Empirical weight variance close to 1/fan_in on a wide layer.
  const std::vector<std::size_t> wide{400, 400};
  const auto w = dul::mlp_init(wide, dul::Activation::relu, 3);
  double s2 = 0.0;
  for (double v : w.layers()[0].weight.data()) s2 += v * v;
  CHECK(s2 / (400.0 * 400.0) == doctest::Approx(1.0 / 400.0).epsilon(0.02));
}

TEST_CASE("Mlp rejects shapes that do not chain") {
  dul::DenseLayer a{Matrix(4, 2), std::vector<double>(4)};
  dul::DenseLayer b{Matrix(3, 5), std::vector<double>(3)};
  CHECK_THROWS_AS(dul::Mlp({a, b}, dul::Activation::relu), dul::InputError);
  dul::DenseLayer bad_bias{Matrix(4, 2), std::vector<double>(3)};
  CHECK_THROWS_AS(dul::Mlp({bad_bias}, dul::Activation::relu), dul::InputError);
  CHECK_THROWS_AS(dul::Mlp({dul::DenseLayer{Matrix(1, 1, NAN), {0.0}}}, dul::Activation::relu), dul::InputError);
}

TEST_CASE("forward pass") {
  dul::DenseLayer z{Matrix(3, 2), std::vector<double>(3)};
  const dul::Mlp zero({z}, dul::Activation::relu);
  const auto out = dul::mlp_forward(zero, random_inputs(5, 2, 1));
  for (double v : out.data()) CHECK(v == 0.0);

  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  const dul::Mlp ident({dul::DenseLayer{eye, {0.0, 0.0}}}, dul::Activation::relu);
  CHECK(dul::mlp_forward(ident, std::vector<double>{1.0, 2.0}) == std::vector<double>{1.0, 2.0});

  const std::vector<std::size_t> sizes{2, 9, 7, 4};
  for (auto act : {dul::Activation::relu, dul::Activation::tanh}) {
    const auto m = dul::mlp_init(sizes, act, 12);
    const auto x = random_inputs(20, 2, 2);
    const auto y = dul::mlp_forward(m, x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto want = reference_forward(m, {x(r, 0), x(r, 1)});
      for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(y(r, k) - want[k]) <= 1e-12 * std::max(1.0, std::abs(want[k])));
    }
  }
  CHECK_THROWS_AS(dul::mlp_forward(dul::mlp_init(sizes, dul::Activation::relu, 1), random_inputs(3, 5, 1)),
                  dul::InputError);
}

TEST_CASE("forward pass is permutation-equivariant over rows") {
  const std::vector<std::size_t> sizes{2, 8, 3};
  const auto m = dul::mlp_init(sizes, dul::Activation::relu, 4);
  const auto x = random_inputs(10, 2, 6);
  Matrix xr(10, 2);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 2; ++c) xr(r, c) = x(9 - r, c);
  const auto a = dul::mlp_forward(m, x), b = dul::mlp_forward(m, xr);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t k = 0; k < 3; ++k) CHECK(a(r, k) == b(9 - r, k));
}

TEST_CASE("backward pass matches finite differences of a linear probe") {
  // L = sum_ij c_ij f_ij, so dL/dlogits = c.
  const std::vector<std::size_t> sizes{2, 6, 5, 3};
  const auto m = dul::mlp_init(sizes, dul::Activation::tanh, 9);
  const auto x = random_inputs(7, 2, 10);
  const auto c = random_inputs(7, 3, 11);
  const auto trace = dul::mlp_forward_trace(m, x);
  const auto g = dul::mlp_backward(m, trace, c).flat();
  const auto fd = oracle::fd_gradient(
      [&](const std::vector<double>& th) {
        const auto y = dul::mlp_forward(m.with_parameters(th), x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.data().size(); ++i) s += c.data()[i] * y.data()[i];
        return s;
      },
      m.flat_parameters(), 1e-6);
  CHECK(oracle::rel_error(g, fd) <= 1e-7);
}

TEST_CASE("CE gradient vanishes at a saturated correct prediction") {
  Matrix w(3, 2);
  const dul::Mlp m({dul::DenseLayer{w, {60.0, 0.0, 0.0}}}, dul::Activation::relu);
  dul::LossInputs in{dul::Batch{random_inputs(1, 2, 3), std::vector<int>{0}}, std::nullopt, std::nullopt};
  dul::LossSpec spec;
  spec.kind = dul::LossKind::ce;
  const auto ev = dul::loss_backward(m, in, spec);
  CHECK(ev.value < 1e-20);
  for (double v : ev.grads.flat()) CHECK(std::abs(v) < 1e-20);
}

TEST_CASE("sgd_step") {
  const auto one = dul::sgd_step(scalar_model(0.0), scalar_grad(1.0), scalar_grad(0.0), 0.1, 0.0);
  CHECK(one.model.layers()[0].weight(0, 0) == doctest::Approx(-0.1).epsilon(1e-15));

  const auto still = dul::sgd_step(scalar_model(0.4), scalar_grad(0.0), scalar_grad(0.0), 0.1, 0.9);
  CHECK(still.model == scalar_model(0.4));

  // Two momentum steps by hand: v1 = g1, t1 = t0 - lr g1; v2 = mu g1 + g2, t2 = t1 - lr v2.
  const double lr = 0.05, mu = 0.9, t0 = 1.0, g1 = 0.3, g2 = -0.7;
  const auto s1 = dul::sgd_step(scalar_model(t0), scalar_grad(g1), scalar_grad(0.0), lr, mu);
  const auto s2 = dul::sgd_step(s1.model, scalar_grad(g2), s1.velocity, lr, mu);
  const double v2 = mu * g1 + g2;
  CHECK(s2.velocity.layers[0].weight(0, 0) == doctest::Approx(v2).epsilon(1e-15));
  CHECK(s2.model.layers()[0].weight(0, 0) == doctest::Approx(t0 - lr * g1 - lr * v2).epsilon(1e-15));

  // Coupled weight decay adds wd * theta to the gradient.
  const auto wd = dul::sgd_step(scalar_model(2.0), scalar_grad(0.5), scalar_grad(0.0), 0.1, 0.0, 0.01);
  CHECK(wd.model.layers()[0].weight(0, 0) == doctest::Approx(2.0 - 0.1 * (0.5 + 0.02)).epsilon(1e-15));

  CHECK_THROWS_AS(dul::sgd_step(scalar_model(0), scalar_grad(1), scalar_grad(0), 0.0, 0.5), dul::InputError);
  CHECK_THROWS_AS(dul::sgd_step(scalar_model(0), scalar_grad(1), scalar_grad(0), 0.1, 1.0), dul::InputError);
  CHECK_THROWS_AS(dul::sgd_step(scalar_model(0), scalar_grad(1), scalar_grad(0), 0.1, 0.5, -1.0), dul::InputError);
}

TEST_CASE("cosine learning rate") {
  CHECK(dul::cosine_lr(0, 20, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(std::abs(dul::cosine_lr(20, 20, 0.1)) < 1e-17);
  CHECK(dul::cosine_lr(10, 20, 0.1) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK_THROWS_AS(dul::cosine_lr(21, 20, 0.1), dul::InputError);
  CHECK_THROWS_AS(dul::cosine_lr(-1, 20, 0.1), dul::InputError);
  CHECK_THROWS_AS(dul::cosine_lr(0, 20, 0.0), dul::InputError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const std::vector<std::size_t> sizes{2, 11, 3};
  auto m = dul::mlp_init(sizes, dul::Activation::tanh, 5);
  auto th = m.flat_parameters();
  th[0] = 0.1 + 0.2;  // not representable as a short decimal
  th[1] = -1e-300;
  th[2] = 5e-324;
  m = m.with_parameters(th);
  const auto p = temp_file("rt.ckpt");
  dul::save_checkpoint(m, p);
  const auto back = dul::load_checkpoint(p);
  CHECK(back == m);
  CHECK(back.activation() == dul::Activation::tanh);
}

TEST_CASE("malformed checkpoints are parse errors") {
  const auto write = [](const std::string& body) {
    const auto p = temp_file("bad.ckpt");
    std::ofstream(p, std::ios::binary) << body;
    return p;
  };
  CHECK_THROWS_AS(dul::load_checkpoint(write("")), dul::ParseError);
  CHECK_THROWS_AS(dul::load_checkpoint(write("something else 1\n")), dul::ParseError);
  CHECK_THROWS_AS(dul::load_checkpoint(write("dul-mlp 2\n")), dul::ParseError);
  CHECK_THROWS_AS(dul::load_checkpoint(write("dul-mlp 1\nactivation relu\nsizes 1 1\n0.5\n")), dul::ParseError);
  CHECK_THROWS_AS(dul::load_checkpoint(write("dul-mlp 1\nactivation relu\nsizes 1 1\n0.5\nxyz\n")), dul::ParseError);
  CHECK_THROWS_AS(dul::load_checkpoint(write("dul-mlp 1\nactivation relu\nsizes 1 1\n0.5\n0\n7\n")), dul::ParseError);
  CHECK_NOTHROW(dul::load_checkpoint(write("dul-mlp 1\nactivation relu\nsizes 1 1\n0.5\n0\n")));
  CHECK_THROWS_AS(dul::load_checkpoint(temp_file("missing.ckpt")), dul::InputError);
}
