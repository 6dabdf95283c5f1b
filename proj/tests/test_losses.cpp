#include <doctest.h>

#include <cmath>

#include "sbf/losses.hpp"
#include "sbf/rng.hpp"
#include "support/gradcheck.hpp"

using namespace sbf;

namespace {

template <typename T>
TensorT<T> rand_wave(int64_t n, uint64_t seed, double amp = 0.2) {
  Rng rng(seed);
  TensorT<T> x({n});
  for (auto& v : x.data) v = static_cast<T>(amp * rng.normal());
  return x;
}

ReconLossConfig toy_recon_cfg() {
  ReconLossConfig cfg;
  cfg.stft = {32, 8};
  cfg.mel_resolutions = {{32, 8}, {64, 16}};
  cfg.mel_bins = 8;
  return cfg;
}

}  // namespace

TEST_CASE("recon_loss is zero only at the target") {
  ReconLoss<double> loss(toy_recon_cfg());
  const auto x0 = rand_wave<double>(128, 1);

  SUBCASE("identity gives exactly zero") {
    TapeD tape;
    auto hat = ops::constant(tape, x0);
    CHECK(loss(tape, hat, x0).value()[0] == 0.0);
  }

  SUBCASE("any waveform offset is strictly positive") {
    TensorD shifted = x0;
    for (auto& v : shifted.data) v += 0.01;
    TapeD tape;
    auto hat = ops::constant(tape, shifted);
    CHECK(loss(tape, hat, x0).value()[0] > 0.0);
  }
}

TEST_CASE("recon_loss closed-form value at a unit impulse") {
  ReconLossConfig cfg = toy_recon_cfg();
  ReconLoss<double> loss(cfg);
  const int64_t L = 64;
  TensorD x0({L});
  x0[10] = 1.0;
  TensorD zero({L});

  TapeD tape;
  auto hat = ops::constant(tape, zero);
  const double got = loss(tape, hat, x0).value()[0];

  // direct evaluation: sum of squared compressed-spectrogram components of
  // the impulse (the estimate's spectrogram is exactly zero) plus alpha * 1
  StftPlan<double> plan(cfg.stft);
  const auto S = plan.forward(x0);
  const int64_t F = S.dim(0) / 2;
  double l2 = 0.0;
  for (int64_t j = 0; j < F; ++j)
    for (int64_t f = 0; f < S.dim(1); ++f) {
      const double re = S.at2(j, f), im = S.at2(F + j, f);
      const double m = std::sqrt(re * re + im * im + 1e-8);
      const double fac = cfg.compression.scale * std::pow(m, cfg.compression.exponent - 1.0);
      l2 += fac * re * fac * re + fac * im * fac * im;
    }
  const double expected = l2 + cfg.alpha_l1 * 1.0;
  CHECK(got == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("recon_loss includes the mel term for dereverberation configs") {
  ReconLossConfig cfg = toy_recon_cfg();
  const auto x0 = rand_wave<double>(128, 2);
  const auto est = rand_wave<double>(128, 3);

  cfg.mel_weight = 0.0;
  ReconLoss<double> plain(cfg);
  cfg.mel_weight = 0.5;
  ReconLoss<double> with_mel(cfg);

  TapeD t1, t2;
  const double a = plain(t1, ops::constant(t1, est), x0).value()[0];
  const double b = with_mel(t2, ops::constant(t2, est), x0).value()[0];
  CHECK(b > a);
}

TEST_CASE("recon_loss gradcheck through spectrogram, L1 and mel paths") {
  ReconLossConfig cfg = toy_recon_cfg();
  cfg.mel_weight = 0.3;
  ReconLoss<double> loss(cfg);
  const auto x0 = rand_wave<double>(96, 4);

  ParamStoreT<double> params;
  // keep |x0_hat - x0| away from the L1 kink
  TensorD est = x0;
  Rng rng(5);
  for (auto& v : est.data)
    v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform_in(0.05, 0.2);
  params.add("est", est);

  auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
    return loss(tape, lv.at("est"), x0);
  };
  const auto res = sbf::testing::gradcheck<double>(params, build, {1e-4, 1e-5});
  CAPTURE(res.worst);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("gan losses at probability one half") {
  TapeD tape;
  auto zeros = ops::constant(tape, TensorD({7}));
  std::vector<VarT<double>> real{zeros}, fake{zeros};
  CHECK(d_loss(real, fake).value()[0] ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(g_adv_loss(fake).value()[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("perfect discriminator drives d_loss to zero") {
  TapeD tape;
  auto real = ops::constant(tape, TensorD::full({5}, 40.0));
  auto fake = ops::constant(tape, TensorD::full({5}, -40.0));
  CHECK(d_loss<double>({real}, {fake}).value()[0] < 1e-12);
}

TEST_CASE("g_adv_loss decreases as fake probability rises") {
  double prev = HUGE_VAL;
  for (double logit : {-3.0, -1.0, 0.0, 1.0, 3.0, 8.0}) {
    TapeD tape;
    auto fake = ops::constant(tape, TensorD::full({3}, logit));
    const double v = g_adv_loss<double>({fake}).value()[0];
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("gan losses average across scales and positions") {
  TapeD tape;
  auto a = ops::constant(tape, TensorD::full({4}, 0.0));
  auto b = ops::constant(tape, TensorD::full({9}, 0.0));
  // every position is probability 1/2 regardless of map size
  CHECK(g_adv_loss<double>({a, b}).value()[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gan loss gradcheck through the logits") {
  Rng rng(6);
  ParamStoreT<double> params;
  TensorD r({6}), f({6});
  for (auto& v : r.data) v = rng.normal();
  for (auto& v : f.data) v = rng.normal();
  params.add("real", r);
  params.add("fake", f);

  auto build_d = [&](TapeD& tape, const LeavesT<double>& lv) {
    (void)tape;
    return d_loss<double>({lv.at("real")}, {lv.at("fake")});
  };
  CHECK(sbf::testing::gradcheck<double>(params, build_d).max_rel_err <= 1e-5);

  auto build_g = [&](TapeD& tape, const LeavesT<double>& lv) {
    (void)tape;
    return g_adv_loss<double>({lv.at("fake"), lv.at("real")});
  };
  CHECK(sbf::testing::gradcheck<double>(params, build_g).max_rel_err <= 1e-5);
}
