#include <doctest.h>

#include <cmath>

#include "sbf/nets.hpp"
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

GeneratorConfig tiny_gen_cfg() {
  GeneratorConfig cfg;
  cfg.base_channels = 3;
  cfg.depth = 2;
  cfg.time_embed_dim = 8;
  cfg.stft = {32, 8};
  return cfg;
}

DiscriminatorConfig tiny_disc_cfg() {
  DiscriminatorConfig cfg;
  cfg.scales = {{16, 4}, {32, 8}};
  cfg.channels = 4;
  cfg.time_embed_dim = 8;
  return cfg;
}

}  // namespace

TEST_CASE("zero-initialized generator is the x_t pass-through") {
  UNetGenerator<float> gen(GeneratorConfig{}, 1);
  const auto x_t = rand_wave<float>(512, 5);
  const auto y = rand_wave<float>(512, 6);
  const auto out = gen.infer(x_t, y, 0.5);
  REQUIRE(out.numel() == 512);

  // explicit pass-through: istft(decompress(compress(stft(x_t))))
  StftPlan<float> plan(gen.config().stft);
  TapeF tape;
  auto s = ops::stft(ops::constant(tape, x_t), plan);
  auto c = ops::compress_complex(s, 0.5f, 0.15f, 1e-8f);
  auto d = ops::compress_complex(c, 2.0f, static_cast<float>(std::pow(0.15, -2.0)),
                                 1e-8f);
  auto ref = ops::istft(d, plan, 512);
  double max_vs_ref = 0.0, max_vs_x = 0.0;
  for (int64_t i = 0; i < 512; ++i) {
    max_vs_ref = std::max(max_vs_ref, std::abs(double(out[i]) - ref.value()[i]));
    max_vs_x = std::max(max_vs_x, std::abs(double(out[i]) - x_t[i]));
  }
  CHECK(max_vs_ref <= 1e-6);
  CHECK(max_vs_x <= 1e-3);
}

TEST_CASE("generator is length-preserving for arbitrary lengths") {
  UNetGenerator<float> gen(tiny_gen_cfg(), 2);
  for (int64_t L : {256, 509, 100, 64, 33}) {
    const auto x_t = rand_wave<float>(L, 7);
    const auto y = rand_wave<float>(L, 8);
    CHECK(gen.infer(x_t, y, 0.8).numel() == L);
  }
  // waveform representation too
  GeneratorConfig wcfg = tiny_gen_cfg();
  wcfg.input_rep = InputRep::waveform;
  UNetGenerator<float> wgen(wcfg, 3);
  for (int64_t L : {256, 101}) {
    const auto x_t = rand_wave<float>(L, 9);
    const auto y = rand_wave<float>(L, 10);
    CHECK(wgen.infer(x_t, y, 0.4).numel() == L);
  }
}

TEST_CASE("generator rejects bad inputs") {
  UNetGenerator<float> gen(tiny_gen_cfg(), 4);
  const auto x_t = rand_wave<float>(128, 11);
  const auto y = rand_wave<float>(96, 12);
  CHECK_THROWS_AS(gen.infer(x_t, y, 0.5), std::invalid_argument);
  const auto y2 = rand_wave<float>(128, 13);
  CHECK_THROWS_AS(gen.infer(x_t, y2, 1.5), std::domain_error);
}

TEST_CASE("generator gradcheck on a 2-level toy config") {
  UNetGenerator<double> gen(tiny_gen_cfg(), 5);
  const auto x_t = rand_wave<double>(256, 14);
  const auto y = rand_wave<double>(256, 15);
  const auto target = rand_wave<double>(256, 16);
  auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
    auto out = gen.forward(tape, lv, x_t, y, 0.6);
    auto d = ops::sub(out, ops::constant(tape, target));
    return ops::sum_sq(d);
  };
  const auto res = sbf::testing::gradcheck<double>(gen.params(), build, {1e-3, 1e-4, 1e-5});
  CAPTURE(res.worst);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("generator parameter budget at defaults") {
  UNetGenerator<float> gen(GeneratorConfig{}, 6);
  MsStftDiscriminator<float> disc(DiscriminatorConfig{}, 7);
  CHECK(gen.params().total_elements() + disc.params().total_elements() < 2000000);
}

TEST_CASE("discriminator emits one logit map per scale") {
  MsStftDiscriminator<float> disc(DiscriminatorConfig{}, 8);
  const auto x = rand_wave<float>(1024, 17);
  const auto y = rand_wave<float>(1024, 18);
  TapeF tape;
  LeavesT<float> lv(tape, disc.params(), false);
  const auto logits = disc.forward(tape, lv, ops::constant(tape, x), y, 0.25);
  CHECK(logits.size() == disc.config().scales.size());
}

TEST_CASE("doubling input length doubles each logit time axis") {
  MsStftDiscriminator<float> disc(tiny_disc_cfg(), 9);
  auto lens = [&](int64_t L) {
    const auto x = rand_wave<float>(L, 19);
    const auto y = rand_wave<float>(L, 20);
    TapeF tape;
    LeavesT<float> lv(tape, disc.params(), false);
    const auto logits = disc.forward(tape, lv, ops::constant(tape, x), y, 0.5);
    std::vector<int64_t> out;
    for (const auto& l : logits) out.push_back(l.value().numel());
    return out;
  };
  const auto a = lens(256);
  const auto b = lens(512);
  REQUIRE(a.size() == b.size());
  for (size_t s = 0; s < a.size(); ++s) {
    CHECK(b[s] >= 2 * a[s] - 2);
    CHECK(b[s] <= 2 * a[s] + 2);
  }
}

TEST_CASE("discriminator gradcheck at toy size") {
  MsStftDiscriminator<double> disc(tiny_disc_cfg(), 10);
  const auto x = rand_wave<double>(96, 21);
  const auto y = rand_wave<double>(96, 22);
  auto build = [&](TapeD& tape, const LeavesT<double>& lv) {
    const auto logits = disc.forward(tape, lv, ops::constant(tape, x), y, 0.75);
    VarT<double> loss;
    for (size_t s = 0; s < logits.size(); ++s) {
      auto term = ops::mean(ops::square(logits[s]));
      loss = s == 0 ? term : ops::add(loss, term);
    }
    return loss;
  };
  const auto res = sbf::testing::gradcheck<double>(disc.params(), build, {1e-3, 1e-4, 1e-5});
  CAPTURE(res.worst);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("forward passes are deterministic given parameters") {
  UNetGenerator<float> g1(tiny_gen_cfg(), 42), g2(tiny_gen_cfg(), 42);
  const auto x_t = rand_wave<float>(200, 23);
  const auto y = rand_wave<float>(200, 24);
  CHECK(g1.infer(x_t, y, 0.3).data == g2.infer(x_t, y, 0.3).data);
}
