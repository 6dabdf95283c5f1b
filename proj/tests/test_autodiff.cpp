#include <doctest.h>

#include <cmath>

#include "sbf/optim.hpp"
#include "sbf/params.hpp"
#include "sbf/rng.hpp"
#include "sbf/tape.hpp"
#include "sbf/tape_signal.hpp"
#include "support/gradcheck.hpp"

using namespace sbf;
using namespace sbf::ops;
using sbf::testing::gradcheck;

TEST_CASE("backward of sum(x^2)") {
  TapeD tape;
  auto x = leaf(tape, TensorD({2}, {1.0, 2.0}), true);
  auto loss = sum(square(x));
  CHECK(loss.value()[0] == 5.0);
  tape.backward(loss.id);
  CHECK(tape.grad(x.id)[0] == 2.0);
  CHECK(tape.grad(x.id)[1] == 4.0);
}

TEST_CASE("backward contract errors") {
  SUBCASE("non-scalar loss") {
    TapeD tape;
    auto x = leaf(tape, TensorD({3}, {1.0, 2.0, 3.0}), true);
    auto y = square(x);
    CHECK_THROWS_AS(tape.backward(y.id), std::invalid_argument);
  }
  SUBCASE("detached graph") {
    TapeD tape;
    auto x = leaf(tape, TensorD({2}, {1.0, 2.0}), false);
    auto loss = sum(square(x));
    CHECK_THROWS_AS(tape.backward(loss.id), std::invalid_argument);
  }
  SUBCASE("graph is consumed") {
    TapeD tape;
    auto x = leaf(tape, TensorD({2}, {1.0, 2.0}), true);
    auto loss = sum(square(x));
    tape.backward(loss.id);
    CHECK_THROWS_AS(tape.backward(loss.id), std::logic_error);
  }
}

TEST_CASE("untracked constants contribute zero gradient") {
  TapeD tape;
  auto x = leaf(tape, TensorD({2}, {1.0, -1.0}), true);
  auto c = constant(tape, TensorD({2}, {5.0, 5.0}));
  auto loss = sum(mul(add(x, c), x));
  tape.backward(loss.id);
  CHECK_FALSE(tape.has_grad(c.id));
  // d/dx sum(x^2 + 5x) = 2x + 5
  CHECK(tape.grad(x.id)[0] == doctest::Approx(7.0));
  CHECK(tape.grad(x.id)[1] == doctest::Approx(3.0));
}

TEST_CASE("gradient accumulation across fan-out") {
  TapeD tape;
  auto x = leaf(tape, TensorD({3}, {1.0, 2.0, 3.0}), true);
  auto loss = sum(add(x, x));
  tape.backward(loss.id);
  for (int64_t i = 0; i < 3; ++i) CHECK(tape.grad(x.id)[i] == 2.0);
}

TEST_CASE("three-layer MLP finite-difference gradcheck") {
  Rng rng(1234);
  ParamStoreT<double> params;
  const int sizes[4] = {6, 8, 8, 1};
  for (int l = 0; l < 3; ++l) {
    TensorD W({sizes[l + 1], sizes[l]});
    for (auto& v : W.data) v = 0.5 * rng.normal();
    TensorD b({sizes[l + 1]});
    for (auto& v : b.data) v = 0.1 * rng.normal();
    params.add("w" + std::to_string(l), W);
    params.add("b" + std::to_string(l), b);
  }
  TensorD input({6});
  for (auto& v : input.data) v = rng.normal();

  auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
    auto h = constant(tape, input);
    for (int l = 0; l < 3; ++l) {
      h = linear(lv.at("w" + std::to_string(l)), h, lv.at("b" + std::to_string(l)));
      if (l < 2) h = silu(h);
    }
    return sum(square(h));
  };
  const auto res = gradcheck<double>(params, build);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("per-op gradchecks") {
  Rng rng(99);
  auto randt = [&](std::vector<int64_t> shape, double s = 1.0) {
    TensorD t(std::move(shape));
    for (auto& v : t.data) v = s * rng.normal();
    return t;
  };

  SUBCASE("elementwise and reductions") {
    ParamStoreT<double> params;
    params.add("a", randt({4, 5}));
    params.add("b", randt({4, 5}));
    auto build = [&](TapeD&, const LeavesT<double>& lv) {
      auto a = lv.at("a"), b = lv.at("b");
      auto t1 = mul(silu(a), softplus(b));
      auto t2 = sub(square(a), scale(b, 0.7));
      return add(mean(t1), sum(square(t2)));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("sum_abs away from kinks") {
    ParamStoreT<double> params;
    TensorD a({12});
    for (auto& v : a.data) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform_in(0.1, 1.0);
    params.add("a", a);
    auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
      (void)tape;
      return sum_abs(lv.at("a"));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("structure ops") {
    ParamStoreT<double> params;
    params.add("x", randt({3, 6}));
    params.add("y", randt({2, 6}));
    params.add("bias", randt({5}));
    auto build = [&](TapeD&, const LeavesT<double>& lv) {
      auto cat = concat_rows(lv.at("x"), lv.at("y"));
      auto biased = add_bias_rows(cat, lv.at("bias"));
      auto up = upsample2_cols(biased);
      auto padded = pad_cols(up, 1, 2);
      auto cropped = crop_cols(padded, 1, 12);
      return sum(square(cropped));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("conv1d stride 1 and stride 2") {
    ParamStoreT<double> params;
    params.add("x", randt({3, 9}));
    params.add("w1", randt({4, 3, 3}, 0.5));
    params.add("b1", randt({4}, 0.1));
    params.add("w2", randt({2, 4, 3}, 0.5));
    params.add("b2", randt({2}, 0.1));
    auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
      (void)tape;
      auto h = conv1d(lv.at("x"), lv.at("w1"), lv.at("b1"), 1, 1);
      h = silu(h);
      h = conv1d(h, lv.at("w2"), lv.at("b2"), 2, 1);
      return sum(square(h));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("matmul_const") {
    ParamStoreT<double> params;
    params.add("x", randt({4, 5}));
    TensorD M = randt({3, 4});
    auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
      (void)tape;
      return sum(square(matmul_const(M, lv.at("x"))));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("complex compression and magnitude") {
    ParamStoreT<double> params;
    params.add("s", randt({6, 4}));
    auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
      (void)tape;
      auto c = compress_complex(lv.at("s"), 0.5, 0.15, 1e-8);
      auto m = complex_magnitude(lv.at("s"), 1e-8);
      return add(sum(square(c)), sum(square(m)));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }

  SUBCASE("stft and istft composition") {
    StftPlan<double> plan(StftConfig{16, 4});
    ParamStoreT<double> params;
    params.add("x", randt({48}, 0.5));
    TensorD target = randt({48}, 0.5);
    auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
      auto S = ops::stft(lv.at("x"), plan);
      auto C = compress_complex(S, 0.5, 0.15, 1e-8);
      auto w = ops::istft(S, plan, 48);
      auto d = sub(w, constant(tape, target));
      return add(sum(square(C)), sum(square(d)));
    };
    CHECK(gradcheck<double>(params, build).max_rel_err <= 1e-5);
  }
}

TEST_CASE("stft/istft adjoint identities") {
  // <A x, u> == <x, A^T u> for random x, u; a sharper linear-op oracle
  // than finite differences.
  Rng rng(71);
  StftPlan<double> plan(StftConfig{32, 8});
  const int64_t L = 100;
  TensorD x({L});
  for (auto& v : x.data) v = rng.normal();
  const auto S = plan.forward(x);
  TensorD u(S.shape);
  for (auto& v : u.data) v = rng.normal();

  double lhs = 0.0;
  for (int64_t i = 0; i < S.numel(); ++i) lhs += S[i] * u[i];
  const auto atu = plan.adjoint_forward(u, L);
  double rhs = 0.0;
  for (int64_t i = 0; i < L; ++i) rhs += x[i] * atu[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

  TensorD spec(S.shape);
  for (auto& v : spec.data) v = rng.normal();
  // imaginary rows 0 and N/2 do not reach the output; zero them so the
  // adjoint test exercises exactly the effective map
  const int64_t F = S.dim(0) / 2;
  for (int64_t f = 0; f < spec.dim(1); ++f) {
    spec.at2(F, f) = 0.0;
    spec.at2(2 * F - 1, f) = 0.0;
  }
  TensorD w({L});
  for (auto& v : w.data) v = rng.normal();
  const auto y = plan.inverse(spec, L);
  double lhs2 = 0.0;
  for (int64_t i = 0; i < L; ++i) lhs2 += y[i] * w[i];
  const auto atw = plan.adjoint_inverse(w, L);
  double rhs2 = 0.0;
  for (int64_t i = 0; i < spec.numel(); ++i) rhs2 += spec[i] * atw[i];
  CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-10));
}

TEST_CASE("optimizer update rule") {
  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    ParamStoreT<double> params;
    params.add("p", TensorD({2}, {1.5, -0.5}));
    AdamWT<double> opt(AdamWT<double>::Options{0.1, 0.9, 0.999, 1e-8, 0.0});
    opt.attach(params);
    GradsT<double> g{TensorD({2})};
    opt.step(params, g);
    CHECK(params.at("p")[0] == 1.5);
    CHECK(params.at("p")[1] == -0.5);
  }

  SUBCASE("first step matches the hand-evaluated bias-corrected update") {
    ParamStoreT<double> params;
    params.add("p", TensorD({1}, {1.0}));
    AdamWT<double>::Options o;
    o.lr = 0.1;
    o.weight_decay = 0.0;
    AdamWT<double> opt(o);
    opt.attach(params);
    GradsT<double> g{TensorD({1}, {1.0})};
    opt.step(params, g);
    // m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
    const double expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
    CHECK(params.at("p")[0] == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("decoupled decay shrinks by (1 - lr*wd) under zero gradient") {
    ParamStoreT<double> params;
    params.add("p", TensorD({1}, {2.0}));
    AdamWT<double>::Options o;
    o.lr = 0.1;
    o.weight_decay = 0.01;
    AdamWT<double> opt(o);
    opt.attach(params);
    GradsT<double> g{TensorD({1}, {0.0})};
    opt.step(params, g);
    CHECK(params.at("p")[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-12));
  }
}

TEST_CASE("ema update rule") {
  ParamStoreT<double> params;
  params.add("p", TensorD({1}, {1.0}));

  SUBCASE("shadow equal to params is a fixed point") {
    EmaT<double> ema(0.999);
    ema.attach(params);
    ema.update(params);
    CHECK(ema.shadow()[0][0] == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("single step from zero shadow") {
    EmaT<double> ema(0.999);
    ema.attach(params);
    ema.shadow()[0][0] = 0.0;
    ema.update(params);
    CHECK(ema.shadow()[0][0] == doctest::Approx(0.001).epsilon(1e-12));
  }

  SUBCASE("k steps follow the geometric series") {
    EmaT<double> ema(0.999);
    ema.attach(params);
    ema.shadow()[0][0] = 0.0;
    const int k = 250;
    for (int i = 0; i < k; ++i) ema.update(params);
    CHECK(ema.shadow()[0][0] ==
          doctest::Approx(1.0 - std::pow(0.999, k)).epsilon(1e-10));
  }
}

TEST_CASE("scale_rows and add_const gradcheck") {
  Rng rng(123);
  ParamStoreT<double> params;
  TensorD x({3, 5}), s({3});
  for (auto& v : x.data) v = rng.normal();
  for (auto& v : s.data) v = 0.5 * rng.normal();
  params.add("x", x);
  params.add("s", s);
  auto build = [&](TapeD&, const LeavesT<double>& lv) {
    auto scaled = ops::scale_rows(lv.at("x"), ops::add_const(lv.at("s"), 1.0));
    return ops::sum_sq(scaled);
  };
  CHECK(sbf::testing::gradcheck<double>(params, build).max_rel_err <= 1e-5);
}
