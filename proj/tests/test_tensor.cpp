#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "core/grad_check.hpp"
#include "core/ops.hpp"
#include "core/optimizer.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "oracles.hpp"

using namespace m2oe;

namespace {

Tensor random_tensor(const std::vector<int> &shape, RngState &rng,
                     bool requires_grad = true, double scale = 1.0) {
  std::size_t count = 1;
  for (int d : shape) {
    count *= static_cast<std::size_t>(d);
  }
  std::vector<double> values(count);
  for (double &v : values) {
    v = scale * rng.normal();
  }
  return Tensor::from(shape, std::move(values), requires_grad);
}

double fd_check(const std::function<Tensor()> &loss_fn,
                const std::vector<std::pair<std::string, Tensor>> &params) {
  return grad_check_max(loss_fn, params, 1e-5);
}

} // namespace

TEST_CASE("tensor construction enforces invariants") {
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6.0);

  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), M2oeError);
  CHECK_THROWS_AS(Tensor::from({0}, {}), M2oeError);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Tensor::from({1}, {inf}), M2oeError);
}

TEST_CASE("rng streams are reproducible and countable") {
  RngState a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.normal() == b.normal());
  }
  CHECK(a.position() == b.position());
  CHECK(a.position() == 200); // two engine draws per normal

  RngState c(7), d(8);
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    differs = differs || (c.next_u64() != d.next_u64());
  }
  CHECK(differs);

  RngState e(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(e.next_below(20) < 20);
  }
}

TEST_CASE("matmul matches the identity and the hand example") {
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor prod = matmul(eye, a);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(prod.values()[i] == a.values()[i]);
  }

  Tensor b = Tensor::from({2, 1}, {1, 1});
  Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == doctest::Approx(3.0));
  CHECK(c.at(1, 0) == doctest::Approx(7.0));

  Tensor bad = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_WITH_AS(static_cast<void>(matmul(bad, bad)),
                       doctest::Contains("(2x3)"), M2oeError);
}

TEST_CASE("matmul agrees with the triple-loop oracle") {
  RngState rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng.next_below(5));
    const int k = 1 + static_cast<int>(rng.next_below(5));
    const int n = 1 + static_cast<int>(rng.next_below(5));
    Tensor a = random_tensor({m, k}, rng);
    Tensor b = random_tensor({k, n}, rng);
    Tensor c = matmul(a, b);
    std::vector<double> expect = oracle::matmul(a.values(), m, k, b.values(), n);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(c.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax_masked handles the named examples") {
  Tensor uniform = softmax_masked(Tensor::from({3}, {0, 0, 0}), nullptr, 1);
  for (double v : uniform.values()) {
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  Tensor two = softmax_masked(Tensor::from({2}, {0.0, std::log(3.0)}), nullptr, 1);
  CHECK(std::fabs(two.values()[0] - 0.25) < 1e-9);
  CHECK(std::fabs(two.values()[1] - 0.75) < 1e-9);

  std::vector<std::uint8_t> mask{1, 0};
  Tensor single = softmax_masked(Tensor::from({2}, {5.0, 9.0}), &mask, 1);
  CHECK(single.values()[0] == 1.0);
  CHECK(single.values()[1] == 0.0);

  std::vector<std::uint8_t> none{0, 0};
  CHECK_THROWS_AS(static_cast<void>(
                      softmax_masked(Tensor::from({2}, {1.0, 2.0}), &none, 1)),
                  M2oeError);
}

TEST_CASE("softmax_masked rows sum to one and shift invariance holds") {
  RngState rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + static_cast<int>(rng.next_below(4));
    const int c = 2 + static_cast<int>(rng.next_below(5));
    Tensor logits = random_tensor({r, c}, rng, false, 3.0);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(r) * c);
    for (int i = 0; i < r; ++i) {
      bool any = false;
      for (int j = 0; j < c; ++j) {
        mask[static_cast<std::size_t>(i) * c + j] = rng.uniform() < 0.7;
        any = any || mask[static_cast<std::size_t>(i) * c + j];
      }
      if (!any) {
        mask[static_cast<std::size_t>(i) * c + rng.next_below(c)] = 1;
      }
    }
    Tensor y = softmax_masked(logits, &mask, 1);
    for (int i = 0; i < r; ++i) {
      double sum = 0.0;
      for (int j = 0; j < c; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * c + j;
        if (!mask[idx]) {
          CHECK(y.values()[idx] == 0.0);
        }
        sum += y.values()[idx];
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }

    std::vector<double> shifted = logits.values();
    for (double &v : shifted) {
      v += 2.5;
    }
    Tensor y2 = softmax_masked(Tensor::from({r, c}, shifted), &mask, 1);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::fabs(y.values()[i] - y2.values()[i]) < 1e-9);
    }
  }
}

TEST_CASE("activation values match their definitions") {
  Tensor x = Tensor::from({3}, {-2.0, 0.0, 2.0});
  Tensor lr = leaky_relu(x, 0.01);
  CHECK(lr.values()[0] == doctest::Approx(-0.02));
  CHECK(lr.values()[2] == doctest::Approx(2.0));

  Tensor sp = softplus(Tensor::scalar(0.0));
  CHECK(sp.item() == doctest::Approx(std::numbers::ln2).epsilon(1e-12));

  Tensor sg = sigmoid(Tensor::scalar(0.0));
  CHECK(sg.item() == doctest::Approx(0.5));

  CHECK_THROWS_AS(static_cast<void>(leaky_relu(x, 1.5)), M2oeError);
  CHECK_THROWS_AS(activation_from_name("tanh"), M2oeError);
  CHECK(activation_from_name("leaky_relu") == Activation::LeakyRelu);
  CHECK(activation_from_name("softplus") == Activation::Softplus);
  CHECK(activation_from_name("sigmoid") == Activation::Sigmoid);
}

TEST_CASE("pointwise losses match hand computations") {
  Tensor one = Tensor::scalar(1.0);
  CHECK(bce_loss(one, Tensor::scalar(1.0 - 1e-7)).item() ==
        doctest::Approx(0.0).epsilon(1e-6));
  CHECK(bce_loss(one, Tensor::scalar(0.5)).item() ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(mse_loss(Tensor::from({1}, {0.0}), Tensor::from({1}, {2.0})).item() ==
        doctest::Approx(4.0));
  CHECK_THROWS_AS(static_cast<void>(mse_loss(Tensor::from({2}, {0, 0}),
                                             Tensor::from({1}, {0.0}))),
                  M2oeError);
}

TEST_CASE("adam follows the hand-evaluated recurrence") {
  SUBCASE("zero gradient leaves a fresh parameter unchanged") {
    Tensor p = Tensor::from({2}, {1.0, -2.0}, true);
    p.zero_grad();
    AdamOptimizer opt({p}, {});
    opt.step();
    CHECK(p.values()[0] == 1.0);
    CHECK(p.values()[1] == -2.0);
  }

  SUBCASE("single step with unit gradient") {
    Tensor p = Tensor::from({1}, {0.5}, true);
    Tensor loss = mul(p, Tensor::scalar(1.0)); // dL/dp = 1
    run_backward(loss);
    AdamConfig config;
    config.learning_rate = 0.1;
    AdamOptimizer opt({p}, config);
    opt.step();
    const double expected = 0.5 - 0.1 * (1.0 / (1.0 + 1e-8));
    CHECK(p.values()[0] == doctest::Approx(expected).epsilon(1e-14));
  }

  SUBCASE("non-positive learning rate is rejected") {
    Tensor p = Tensor::from({1}, {0.0}, true);
    AdamConfig config;
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(AdamOptimizer({p}, config), M2oeError);
    config.learning_rate = -0.5;
    CHECK_THROWS_AS(AdamOptimizer({p}, config), M2oeError);
  }
}

TEST_CASE("grad_check on simple closures") {
  SUBCASE("quadratic") {
    Tensor x = Tensor::from({1}, {3.0}, true);
    auto loss_fn = [&] { return mul(x, x); };
    run_backward(loss_fn());
    CHECK(x.grad()[0] == doctest::Approx(6.0));
    CHECK(fd_check(loss_fn, {{"x", x}}) < 1e-6);
  }

  SUBCASE("constant function has zero analytic and numeric gradients") {
    Tensor x = Tensor::from({1}, {1.5}, true);
    auto loss_fn = [&] { return scale(x, 0.0); };
    CHECK(fd_check(loss_fn, {{"x", x}}) == 0.0);
  }

  SUBCASE("non-deterministic loss raises a determinism error") {
    Tensor x = Tensor::from({1}, {1.0}, true);
    auto shared_rng = std::make_shared<RngState>(5);
    auto loss_fn = [&, shared_rng] {
      return scale(x, 1.0 + shared_rng->uniform());
    };
    CHECK_THROWS_AS(static_cast<void>(grad_check(loss_fn, {{"x", x}}, 1e-5)),
                    M2oeError);
  }

  SUBCASE("eps outside [1e-6, 1e-3] is rejected") {
    Tensor x = Tensor::from({1}, {1.0}, true);
    auto loss_fn = [&] { return mul(x, x); };
    CHECK_THROWS_AS(static_cast<void>(grad_check(loss_fn, {{"x", x}}, 1e-2)),
                    M2oeError);
  }
}

TEST_CASE("backward of every op matches central differences") {
  RngState rng(101);
  const double tol = 1e-3;

  SUBCASE("matmul") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor a = random_tensor({2, 3}, rng);
      Tensor b = random_tensor({3, 2}, rng);
      auto fn = [&] { return mean_all(matmul(a, b)); };
      CHECK(fd_check(fn, {{"a", a}, {"b", b}}) < tol);
    }
  }

  SUBCASE("transpose, add, mul, scale, reshape") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor a = random_tensor({2, 3}, rng);
      Tensor b = random_tensor({2, 3}, rng);
      auto fn = [&] {
        Tensor t = transpose(a);
        Tensor u = add(transpose(t), mul(b, b));
        return mean_all(reshape(scale(u, 1.7), {3, 2}));
      };
      CHECK(fd_check(fn, {{"a", a}, {"b", b}}) < tol);
    }
  }

  SUBCASE("add_rowwise and mul_rowwise") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({3, 4}, rng);
      Tensor bias = random_tensor({4}, rng);
      Tensor rows = random_tensor({3}, rng);
      auto fn = [&] { return mean_all(mul_rowwise(add_rowwise(x, bias), rows)); };
      CHECK(fd_check(fn, {{"x", x}, {"bias", bias}, {"rows", rows}}) < tol);
    }
  }

  SUBCASE("activations") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({2, 3}, rng);
      auto fn = [&] {
        return mean_all(add(leaky_relu(x, 0.05), add(softplus(x), sigmoid(x))));
      };
      CHECK(fd_check(fn, {{"x", x}}) < tol);
    }
  }

  SUBCASE("softmax_masked") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({3, 4}, rng);
      std::vector<std::uint8_t> mask(12, 1);
      mask[1] = 0;
      mask[7] = 0;
      Tensor weights = random_tensor({3, 4}, rng, false);
      auto fn = [&] { return mean_all(mul(softmax_masked(x, &mask, 1), weights)); };
      CHECK(fd_check(fn, {{"x", x}}) < tol);
    }
  }

  SUBCASE("softmax_masked along columns") {
    for (int trial = 0; trial < 20; ++trial) {
      Tensor x = random_tensor({3, 2}, rng);
      Tensor weights = random_tensor({3, 2}, rng, false);
      auto fn = [&] {
        return mean_all(mul(softmax_masked(x, nullptr, 0), weights));
      };
      CHECK(fd_check(fn, {{"x", x}}) < tol);
    }
  }

  SUBCASE("concat and slice") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor a = random_tensor({2, 2}, rng);
      Tensor b = random_tensor({2, 3}, rng);
      auto fn = [&] {
        Tensor cat = concat_cols(a, b);
        return mean_all(mul(slice_cols(cat, 1, 3), slice_cols(cat, 2, 3)));
      };
      CHECK(fd_check(fn, {{"a", a}, {"b", b}}) < tol);
    }
  }

  SUBCASE("gather and scatter") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor table = random_tensor({5, 3}, rng);
      std::vector<int> ids{4, 0, 0, 2};
      auto fn = [&] {
        Tensor rows = gather_rows(table, ids);
        return mean_all(scatter_add_rows(rows, {1, 1, 0, 2}, 3));
      };
      CHECK(fd_check(fn, {{"table", table}}) < tol);
    }
  }

  SUBCASE("gather_cols_per_row, gather_elements, bin_sum_by_index") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({3, 4}, rng);
      std::vector<int> cols{0, 2, 3, 1, 1, 2};
      std::vector<std::size_t> flat{0, 5, 3};
      std::vector<int> bins{1, 0, 1, 2, 0, 1};
      auto fn = [&] {
        Tensor kept = gather_cols_per_row(x, cols, 2);
        Tensor mass = bin_sum_by_index(kept, bins, 3);
        Tensor picked = gather_elements(x, flat);
        return add(mean_all(mass), mean_all(mul(picked, picked)));
      };
      CHECK(fd_check(fn, {{"x", x}}) < tol);
    }
  }

  SUBCASE("reductions and masked mean") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({4, 3}, rng);
      std::vector<std::uint8_t> mask{1, 0, 1, 1};
      auto fn = [&] {
        Tensor pooled = mean_rows_masked(x, &mask);
        return add(add(sum_all(mul(pooled, pooled)), mean_all(x)),
                   sum_all(scale(x, 0.25)));
      };
      CHECK(fd_check(fn, {{"x", x}}) < tol);
    }
  }

  SUBCASE("layer norm") {
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({3, 4}, rng);
      Tensor gain = random_tensor({4}, rng, true, 0.5);
      Tensor bias = random_tensor({4}, rng, true, 0.5);
      Tensor weights = random_tensor({3, 4}, rng, false);
      auto fn = [&] {
        return mean_all(mul(layer_norm_rows(x, gain, bias), weights));
      };
      CHECK(fd_check(fn, {{"x", x}, {"gain", gain}, {"bias", bias}}) < tol);
    }
  }

  SUBCASE("losses") {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> p(4), y(4);
      for (int i = 0; i < 4; ++i) {
        p[i] = 0.1 + 0.8 * rng.uniform();
        y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      }
      Tensor pred = Tensor::from({4}, p, true);
      Tensor label = Tensor::from({4}, y, false);
      auto fn_bce = [&] { return bce_loss(label, pred); };
      CHECK(fd_check(fn_bce, {{"pred", pred}}) < tol);
      auto fn_mse = [&] { return mse_loss(label, pred); };
      CHECK(fd_check(fn_mse, {{"pred", pred}}) < tol);
    }
  }
}

TEST_CASE("gradient accumulation persists until zero_grad") {
  Tensor x = Tensor::from({1}, {2.0}, true);
  run_backward(mul(x, x));
  run_backward(mul(x, x));
  CHECK(x.grad()[0] == doctest::Approx(8.0)); // 4 + 4
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}
