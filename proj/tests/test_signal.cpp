#include <doctest.h>

#include <cmath>

#include "sbf/metrics.hpp"
#include "sbf/rng.hpp"
#include "sbf/signal.hpp"
#include "sbf/stft.hpp"
#include "sbf/wav.hpp"

using namespace sbf;

TEST_CASE("stft rejects non-COLA configs") {
  CHECK_THROWS(StftPlan<double>(StftConfig{100, 25}));   // not a power of 2
  CHECK_THROWS(StftPlan<double>(StftConfig{128, 96}));   // hop > fft/2
  CHECK_THROWS(StftPlan<double>(StftConfig{128, 24}));   // hop does not divide fft
  CHECK_NOTHROW(StftPlan<double>(StftConfig{128, 32}));
}

TEST_CASE("stft of zero signal is zero and reconstructs zero") {
  StftPlan<double> plan(StftConfig{128, 32});
  TensorT<double> x({512});
  const auto S = plan.forward(x);
  for (double v : S.data) CHECK(v == 0.0);
  const auto r = plan.inverse(S, 512);
  for (double v : r.data) CHECK(v == 0.0);
}

TEST_CASE("bin-centered sinusoid concentrates energy at its bin") {
  const StftConfig cfg{256, 64};
  StftPlan<double> plan(cfg);
  const int bin = 24;
  const int64_t L = 2048;
  TensorT<double> x({L});
  for (int64_t i = 0; i < L; ++i)
    x[i] = std::sin(2.0 * M_PI * bin * static_cast<double>(i) / cfg.fft_size);
  const auto S = plan.forward(x);
  const int64_t F = S.dim(0) / 2;
  // interior frame, clear of the padded edges
  const int f = 16;
  double total = 0.0, at_bin = 0.0;
  for (int64_t j = 0; j < F; ++j) {
    const double e = S.at2(j, f) * S.at2(j, f) + S.at2(F + j, f) * S.at2(F + j, f);
    total += e;
    // the Hann main lobe spans the center bin and its two neighbors
    if (std::abs(static_cast<int>(j) - bin) <= 1) at_bin += e;
  }
  CHECK(at_bin / total >= 0.99);
}

TEST_CASE("stft round trip and Parseval") {
  Rng rng(11);
  const int64_t L = 8000;  // 1 s at 8 kHz
  TensorT<double> x({L});
  for (auto& v : x.data) v = 0.2 * rng.normal();

  for (StftConfig cfg : {StftConfig{128, 32}, StftConfig{512, 128}, StftConfig{64, 32}}) {
    StftPlan<double> plan(cfg);
    const auto S = plan.forward(x);
    const auto r = plan.inverse(S, L);
    double max_err = 0.0;
    for (int64_t i = 0; i < L; ++i) max_err = std::max(max_err, std::abs(r[i] - x[i]));
    CHECK(max_err <= 1e-6);

    // frame-summed spectrogram energy vs windowed signal energy
    const int N = cfg.fft_size, F = N / 2 + 1, TF = plan.num_frames(L), pad = N / 2;
    double win_energy = 0.0;
    for (int f = 0; f < TF; ++f)
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * cfg.hop + n - pad;
        if (i >= 0 && i < L) {
          const double wv = plan.window()[static_cast<size_t>(n)] * x[i];
          win_energy += wv * wv;
        }
      }
    double spec_energy = 0.0;
    for (int f = 0; f < TF; ++f)
      for (int j = 0; j < F; ++j) {
        const double e =
            S.at2(j, f) * S.at2(j, f) + S.at2(F + j, f) * S.at2(F + j, f);
        spec_energy += (j == 0 || j == N / 2) ? e : 2.0 * e;
      }
    spec_energy /= N;
    CHECK(std::abs(spec_energy - win_energy) <= 1e-6 * win_energy);
  }
}

TEST_CASE("float stft round trip stays within 1e-6") {
  Rng rng(12);
  const int64_t L = 4096;
  TensorT<float> x({L});
  for (auto& v : x.data) v = static_cast<float>(0.2 * rng.normal());
  StftPlan<float> plan(StftConfig{128, 32});
  const auto r = plan.inverse(plan.forward(x), L);
  double max_err = 0.0;
  for (int64_t i = 0; i < L; ++i)
    max_err = std::max(max_err, std::abs(static_cast<double>(r[i]) - x[i]));
  CHECK(max_err <= 1e-6);
}

TEST_CASE("power compression") {
  CompressionConfig ident{1.0, 1.0};
  CompressionConfig cfg{0.5, 0.15};

  SUBCASE("beta=1 scale=1 is the identity") {
    TensorT<double> S({2, 1}, {3.0, -4.0});
    const auto out = power_compress(S, ident);
    CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-4.0).epsilon(1e-15));
  }

  SUBCASE("|S|=4 maps to magnitude 0.3") {
    TensorT<double> S({2, 1}, {4.0, 0.0});  // re=4, im=0
    const auto out = power_compress(S, cfg);
    CHECK(std::hypot(out[0], out[1]) == doctest::Approx(0.3).epsilon(1e-12));
  }

  SUBCASE("compress/decompress round trip") {
    Rng rng(5);
    TensorT<double> S({10, 7});
    for (auto& v : S.data) v = rng.normal();
    const auto rt = power_decompress(power_compress(S, cfg), cfg);
    for (int64_t i = 0; i < S.numel(); ++i)
      CHECK(std::abs(rt[i] - S[i]) <= 1e-6 * std::max(1.0, std::abs(S[i])));
  }
}

TEST_CASE("mix_at_snr") {
  SUBCASE("equal powers at 0 dB give unit gain") {
    std::vector<double> c{1.0, -1.0, 1.0, -1.0};
    std::vector<double> n{-1.0, 1.0, 1.0, 1.0};
    CHECK(mix_at_snr(c, n, 0.0).second == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("noise power 10x clean at 0 dB gives 1/sqrt(10)") {
    std::vector<double> c{1.0, 1.0};
    std::vector<double> n{std::sqrt(10.0), std::sqrt(10.0)};
    CHECK(mix_at_snr(c, n, 0.0).second ==
          doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-12));
  }
  SUBCASE("measured SNR equals requested SNR") {
    Rng rng(3);
    auto c = white_noise(1024, rng);
    auto n = pink_noise(1024, rng);
    for (double snr : {-7.3, 0.0, 4.2, 18.0}) {
      const auto [noisy, g] = mix_at_snr(c, n, snr);
      double pc = 0.0, pn = 0.0;
      for (size_t i = 0; i < c.size(); ++i) {
        pc += c[i] * c[i];
        const double r = noisy[i] - c[i];
        pn += r * r;
      }
      const double measured = 10.0 * std::log10(pc / pn);
      CHECK(std::abs(measured - snr) < 1e-9);
    }
  }
  SUBCASE("zero-power inputs are rejected") {
    std::vector<double> z(8, 0.0), c{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    CHECK_THROWS_AS(mix_at_snr(z, c, 0.0), std::domain_error);
    CHECK_THROWS_AS(mix_at_snr(c, z, 0.0), std::domain_error);
  }
}

TEST_CASE("synthetic pairs") {
  SUBCASE("vanishing decay time reduces the RIR to a unit impulse") {
    SynthSpec spec;
    spec.has_rir = true;
    spec.rir.decay_time = 0.0;
    spec.rir.length = 64;
    Rng rng(9);
    const auto p = synth_pair(spec, rng);
    REQUIRE(p.clean.size() == p.degraded.size());
    for (size_t i = 0; i < p.clean.size(); ++i)
      CHECK(p.degraded[i] == doctest::Approx(p.clean[i]).epsilon(1e-12));
  }

  SUBCASE("100 dB SNR mixing keeps SI-SDR at or above 99 dB") {
    SynthSpec spec;
    spec.snr_lo_db = spec.snr_hi_db = 100.0;
    Rng rng(10);
    const auto p = synth_pair(spec, rng);
    CHECK(si_sdr(p.degraded, p.clean) >= 99.0);
  }

  SUBCASE("fixed seed reproduces the pair bit for bit") {
    SynthSpec spec;
    spec.clean_kind = CleanKind::filtered_noise_burst;
    Rng r1(77), r2(77);
    const auto a = synth_pair(spec, r1);
    const auto b = synth_pair(spec, r2);
    CHECK(a.snr_db == b.snr_db);
    CHECK(a.clean == b.clean);
    CHECK(a.degraded == b.degraded);
  }

  SUBCASE("all clean kinds synthesize at nominal level") {
    for (CleanKind k : {CleanKind::harmonic, CleanKind::chirp,
                        CleanKind::filtered_noise_burst}) {
      SynthSpec spec;
      spec.clean_kind = k;
      Rng rng(21);
      const auto x = synth_clean(spec, rng);
      CHECK(rms(x) == doctest::Approx(0.2).epsilon(1e-9));
    }
  }
}

TEST_CASE("mel filterbank rows are nonnegative contiguous bands") {
  const auto fb = mel_filterbank(20, 256, 8000.0, 0.0, 4000.0);
  REQUIRE(fb.dim(0) == 20);
  for (int64_t m = 0; m < fb.dim(0); ++m) {
    int64_t first = -1, last = -1;
    double total = 0.0;
    for (int64_t j = 0; j < fb.dim(1); ++j) {
      const double v = fb.at2(m, j);
      CHECK(v >= 0.0);
      if (v > 0.0) {
        if (first < 0) first = j;
        last = j;
        total += v;
      }
    }
    REQUIRE(first >= 0);
    CHECK(total > 0.0);
    for (int64_t j = first; j <= last; ++j) CHECK(fb.at2(m, j) > 0.0);
  }
}

TEST_CASE("wav float32 round trip") {
  Rng rng(4);
  std::vector<float> x(777);
  for (auto& v : x) v = static_cast<float>(0.4 * rng.normal());
  const std::string path = "test_roundtrip.wav";
  write_wav_f32(path, x, 8000);
  const auto wd = read_wav_f32(path);
  CHECK(wd.sample_rate == 8000);
  REQUIRE(wd.samples.size() == x.size());
  CHECK(wd.samples == x);
  std::remove(path.c_str());
}
