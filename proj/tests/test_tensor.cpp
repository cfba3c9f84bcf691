#include <doctest.h>

#include <cmath>
#include <vector>

#include "intermulti/rng.hpp"
#include "intermulti/tensor.hpp"

using namespace intermulti;

namespace {

Tensor rand_vec(std::size_t n, Rng& rng, bool grad = true) {
  return uniform_tensor({n}, 1.0, rng, grad);
}

Tensor rand_mat(std::size_t r, std::size_t c, Rng& rng, bool grad = true) {
  return uniform_tensor({r, c}, 1.0, rng, grad);
}

}  // namespace

TEST_CASE("matmul identity and small products") {
  const Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
  const Tensor c = matmul(id, b);
  CHECK(c.values()[0] == 5.0);
  CHECK(c.values()[1] == 6.0);
  CHECK(c.values()[2] == 7.0);
  CHECK(c.values()[3] == 8.0);

  const Tensor row = Tensor::from({1, 2}, {1, 2});
  const Tensor col = Tensor::from({2, 1}, {3, 4});
  CHECK(matmul(row, col).item() == 11.0);
}

TEST_CASE("matmul rejects mismatched inner dims") {
  const Tensor a = Tensor::from({2, 3}, std::vector<double>(6, 1.0));
  const Tensor b = Tensor::from({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("[2x3]"), ShapeError);
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("[2x2]"), ShapeError);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(11);
  const Tensor a = rand_mat(4, 3, rng);
  const Tensor b = rand_mat(3, 5, rng);
  const Tensor inputs[2] = {a, b};
  const auto result =
      grad_check([&] { return sum(matmul(a, b)); }, inputs, 1e-5);
  CHECK(result.max_rel_err < 1e-6);
  CHECK(result.checked == 12 + 15);
}

TEST_CASE("outer basis vectors and column case") {
  const Tensor e1 = Tensor::from({2}, {1, 0});
  const Tensor e2 = Tensor::from({2}, {0, 1});
  const Tensor o = outer(e1, e2);
  CHECK(o.shape() == Shape{2, 2});
  CHECK(o.values()[0] == 0.0);
  CHECK(o.values()[1] == 1.0);
  CHECK(o.values()[2] == 0.0);
  CHECK(o.values()[3] == 0.0);

  const Tensor col = outer(Tensor::from({2}, {2, 3}), Tensor::from({1}, {4}));
  CHECK(col.shape() == Shape{2, 1});
  CHECK(col.values()[0] == 8.0);
  CHECK(col.values()[1] == 12.0);
}

TEST_CASE("outer rejects non-vectors") {
  const Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor v = Tensor::from({2}, {1, 2});
  CHECK_THROWS_AS(outer(m, v), ShapeError);
}

TEST_CASE("outer equals two-loop Kronecker brute force") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = rand_vec(7, rng, false);
    const Tensor b = rand_vec(4, rng, false);
    const Tensor o = outer(a, b);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(o.values()[i * 4 + j] == a.values()[i] * b.values()[j]);
  }
}

TEST_CASE("outer 16x16 gradient check") {
  Rng rng(17);
  const Tensor a = rand_vec(16, rng);
  const Tensor b = rand_vec(16, rng);
  const Tensor inputs[2] = {a, b};
  const auto result =
      grad_check([&] { return sum(outer(a, b)); }, inputs, 1e-5);
  CHECK(result.max_rel_err < 1e-6);
}

TEST_CASE("maxpool single window and tie-break") {
  const Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(maxpool2x2(t).item() == 4.0);

  // All-equal window: gradient must flow only to the lowest flat index.
  const Tensor tied = Tensor::from({2, 2}, {5, 5, 5, 5}, true);
  const Tensor pooled = maxpool2x2(tied);
  CHECK(pooled.item() == 5.0);
  pooled.backward();
  CHECK(tied.grad()[0] == 1.0);
  CHECK(tied.grad()[1] == 0.0);
  CHECK(tied.grad()[2] == 0.0);
  CHECK(tied.grad()[3] == 0.0);
}

TEST_CASE("maxpool rejects odd extents") {
  const Tensor t = Tensor::from({3, 2}, std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(maxpool2x2(t), ShapeError);
}

TEST_CASE("maxpool equals brute-force window scan on 1000 random 16x16") {
  Rng rng(23);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> data(16 * 16);
    for (double& v : data) v = rng.uniform(-10.0, 10.0);
    const Tensor t = Tensor::from({16, 16}, data);
    const Tensor p = maxpool2x2(t);
    REQUIRE(p.shape() == Shape{8, 8});
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        double best = data[(2 * i) * 16 + 2 * j];
        best = std::max(best, data[(2 * i) * 16 + 2 * j + 1]);
        best = std::max(best, data[(2 * i + 1) * 16 + 2 * j]);
        best = std::max(best, data[(2 * i + 1) * 16 + 2 * j + 1]);
        CHECK(p.values()[i * 8 + j] == best);
      }
  }
}

TEST_CASE("elementwise trivia") {
  const Tensor z = mul(Tensor::from({3}, {1, 2, 3}), Tensor::from({3}, {0, 0, 0}));
  for (double v : z.values()) CHECK(v == 0.0);

  const Tensor d = sub(Tensor::from({2}, {3, 4}), Tensor::from({2}, {3, 4}));
  for (double v : d.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(add(Tensor::from({2}, {1, 2}), Tensor::from({3}, {1, 2, 3})),
                  ShapeError);
}

TEST_CASE("add gradient check is tight") {
  Rng rng(31);
  const Tensor a = rand_vec(6, rng);
  const Tensor b = rand_vec(6, rng);
  const Tensor inputs[2] = {a, b};
  const auto result =
      grad_check([&] { return sum(add(a, b)); }, inputs, 1e-5);
  CHECK(result.max_rel_err < 1e-8);
}

TEST_CASE("mse and cross-entropy fixed points") {
  CHECK(mse(Tensor::from({2}, {1, 2}), Tensor::from({2}, {1, 2})).item() ==
        0.0);

  const Tensor uniform_logits = Tensor::from({4}, {0.5, 0.5, 0.5, 0.5});
  CHECK(softmax_cross_entropy(uniform_logits, 2).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  CHECK_THROWS_AS(softmax_cross_entropy(uniform_logits, 4), ShapeError);
}

TEST_CASE("concat preserves segment order and slice inverts it bit-exactly") {
  Rng rng(41);
  const Tensor a = rand_vec(64, rng, false);
  const Tensor b = rand_vec(16, rng, false);
  const Tensor c = rand_vec(16, rng, false);
  const Tensor parts[3] = {a, b, c};
  const Tensor f = concat(parts, 0);
  REQUIRE(f.shape() == Shape{96});

  const Tensor sa = slice(f, 0, 0, 64);
  const Tensor sb = slice(f, 0, 64, 16);
  const Tensor sc = slice(f, 0, 80, 16);
  for (std::size_t i = 0; i < 64; ++i) CHECK(sa.values()[i] == a.values()[i]);
  for (std::size_t i = 0; i < 16; ++i) CHECK(sb.values()[i] == b.values()[i]);
  for (std::size_t i = 0; i < 16; ++i) CHECK(sc.values()[i] == c.values()[i]);
}

TEST_CASE("concat and slice on rank-2 tensors round-trip") {
  Rng rng(43);
  const Tensor a = rand_mat(3, 4, rng, false);
  const Tensor b = rand_mat(3, 2, rng, false);
  const Tensor parts[2] = {a, b};
  const Tensor f = concat(parts, 1);
  REQUIRE(f.shape() == Shape{3, 6});
  const Tensor sa = slice(f, 1, 0, 4);
  const Tensor sb = slice(f, 1, 4, 2);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(sa.values()[i] == a.values()[i]);
  for (std::size_t i = 0; i < b.size(); ++i)
    CHECK(sb.values()[i] == b.values()[i]);
}

TEST_CASE("mean reduces the requested axis") {
  const Tensor m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor rows = mean(m, 0);
  REQUIRE(rows.shape() == Shape{3});
  CHECK(rows.values()[0] == doctest::Approx(2.5));
  CHECK(rows.values()[1] == doctest::Approx(3.5));
  CHECK(rows.values()[2] == doctest::Approx(4.5));

  const Tensor cols = mean(m, 1);
  REQUIRE(cols.shape() == Shape{2});
  CHECK(cols.values()[0] == doctest::Approx(2.0));
  CHECK(cols.values()[1] == doctest::Approx(5.0));

  CHECK_THROWS_AS(mean(m, 2), ShapeError);
}

TEST_CASE("closed-form gradient of sum of squares") {
  const Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  const Tensor inputs[1] = {x};
  const auto result =
      grad_check([&] { return sum(mul(x, x)); }, inputs, 1e-5);
  CHECK(result.max_rel_err < 1e-7);

  x.zero_grad();
  const Tensor loss = sum(mul(x, x));
  loss.backward();
  CHECK(loss.grad()[0] == 1.0);  // d(loss)/d(loss)
  CHECK(x.grad()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(x.grad()[2] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("grad_check validates its preconditions") {
  const Tensor x = Tensor::from({2}, {1, 2}, true);
  const Tensor inputs[1] = {x};
  CHECK_THROWS_AS(grad_check([&] { return mul(x, x); }, inputs, 1e-5),
                  ShapeError);
  CHECK_THROWS_AS(grad_check([&] { return sum(x); }, inputs, 1e-3),
                  ShapeError);
}

TEST_CASE("grad_check excludes coordinates near a maxpool tie") {
  // Two cells within eps of each other: perturbing either crosses the tie,
  // so both must be skipped rather than reported as gradient errors.
  const double eps = 1e-5;
  const Tensor x =
      Tensor::from({2, 2}, {1.0, 1.0 + eps / 2.0, -2.0, -3.0}, true);
  const Tensor inputs[1] = {x};
  const auto result =
      grad_check([&] { return sum(maxpool2x2(x)); }, inputs, eps);
  CHECK(result.skipped >= 2);
  CHECK(result.max_rel_err < 1e-6);
}

TEST_CASE("every registered op passes a seeded gradient check") {
  Rng rng(97);
  const Tensor v1 = rand_vec(8, rng);
  const Tensor v2 = rand_vec(8, rng);
  const Tensor m1 = rand_mat(4, 6, rng);
  const Tensor m2 = rand_mat(6, 3, rng);
  const Tensor pool_in = rand_mat(6, 6, rng);
  const Tensor target = rand_vec(8, rng);

  struct Case {
    const char* name;
    std::function<Tensor()> f;
    std::vector<Tensor> inputs;
  };
  const std::vector<Case> cases = {
      {"matmul", [&] { return sum(matmul(m1, m2)); }, {m1, m2}},
      {"matvec", [&] { return sum(matvec(m1, slice(v1, 0, 0, 6))); }, {m1, v1}},
      {"outer", [&] { return sum(outer(v1, v2)); }, {v1, v2}},
      {"maxpool2x2", [&] { return sum(maxpool2x2(pool_in)); }, {pool_in}},
      {"mul", [&] { return sum(mul(v1, v2)); }, {v1, v2}},
      {"add", [&] { return sum(add(v1, v2)); }, {v1, v2}},
      {"sub", [&] { return sum(sub(v1, v2)); }, {v1, v2}},
      {"scale", [&] { return sum(scale(v1, -1.7)); }, {v1}},
      {"mean", [&] { return sum(mean(m1, 1)); }, {m1}},
      {"flatten", [&] { return sum(mul(flatten(m1), flatten(m1))); }, {m1}},
      {"concat",
       [&] {
         const Tensor parts[2] = {v1, v2};
         const Tensor joined = concat(parts, 0);
         return sum(mul(joined, joined));
       },
       {v1, v2}},
      {"slice", [&] { return sum(mul(slice(v1, 0, 2, 4), slice(v2, 0, 1, 4))); },
       {v1, v2}},
      {"sigmoid", [&] { return sum(sigmoid(v1)); }, {v1}},
      {"tanh", [&] { return sum(tanh(v1)); }, {v1}},
      {"relu", [&] { return sum(relu(v1)); }, {v1}},
      {"softmax_cross_entropy", [&] { return softmax_cross_entropy(v1, 3); },
       {v1}},
      {"mse", [&] { return mse(v1, target); }, {v1, target}},
  };

  for (const Case& c : cases) {
    CAPTURE(c.name);
    const auto result = grad_check(c.f, c.inputs, 1e-5);
    CHECK(result.max_rel_err < 1e-5);
    CHECK(result.checked > 0);
  }
}

TEST_CASE("gradient accumulates across fan-out") {
  const Tensor x = Tensor::from({2}, {3, 5}, true);
  // loss = sum(x*x + x) -> d/dx = 2x + 1
  const Tensor loss = sum(add(mul(x, x), x));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("finite checks name the offending op") {
  set_finite_checks(true);
  const Tensor big = Tensor::from({2}, {1e308, 1e308});
  try {
    const Tensor r = add(big, big);  // overflows to inf
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.op() == "add");
  }
  set_finite_checks(false);
  const Tensor ok = add(big, big);  // unchecked when the flag is off
  CHECK(std::isinf(ok.values()[0]));
}
