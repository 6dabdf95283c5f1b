#include <doctest.h>

#include "sbf/config.hpp"

using namespace sbf;

TEST_CASE("config defaults parse and validate") {
  const ExperimentConfig cfg = ExperimentConfig::from_text("");
  CHECK(cfg.schedule.c == 0.40);
  CHECK(cfg.schedule.k == 2.6);
  CHECK(cfg.schedule.t_eps == 0.03);
  CHECK(cfg.schedule.n_steps == 4);
  CHECK(cfg.train.lambda_recon == 100.0);
  CHECK(cfg.train.alpha_l1 == 1e-3);
  CHECK(cfg.train.lr == 1e-4);
  CHECK(cfg.train.ema_decay == 0.999);
  CHECK(cfg.generator.base_channels == 32);
  CHECK(cfg.discriminator.scales.size() == 5);
  CHECK(cfg.discriminator.scales[0].fft_size == 512);
  CHECK(cfg.eval.snr_bin_edges.size() == 6);
}

TEST_CASE("config round trip is the identity") {
  const std::string text =
      "[run]\nseed = 99\nworkers = 2\n"
      "[schedule]\nc = 0.7\nk = 3.1\nt_eps = 0.05\nn_steps = 4\n"
      "[train]\nmode = sb_baseline\nbatch_size = 4\ntotal_steps = 10\n"
      "n_steps = 4\n"
      "[synth]\nclean_kind = chirp\nduration = 0.064\n"
      "[eval]\nsteps = 1,2,8\n";
  const ExperimentConfig a = ExperimentConfig::from_text(text);
  const std::string sa = a.to_text();
  const ExperimentConfig b = ExperimentConfig::from_text(sa);
  const std::string sb = b.to_text();
  CHECK(sa == sb);
  CHECK(a.run.seed == 99);
  CHECK(b.train.mode == TrainMode::sb_baseline);
  CHECK(b.eval.steps == std::vector<int>{1, 2, 8});
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[run]\nsede = 3\n"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[schedule]\nc = fast\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[schedule]\nk = 0.5\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[train]\nmode = diffusion\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_text("[eval]\nsnr_bin_edges = 5,-5\n"),
      std::invalid_argument);
  // duplicate keys are ambiguous
  CHECK_THROWS_AS(ExperimentConfig::from_text("[run]\nseed = 1\nseed = 2\n"),
                  std::invalid_argument);
}

TEST_CASE("mixed clean kinds cycle deterministically") {
  const ExperimentConfig cfg = ExperimentConfig::from_text("");
  CHECK(cfg.synth_for_item(0).clean_kind == CleanKind::harmonic);
  CHECK(cfg.synth_for_item(1).clean_kind == CleanKind::chirp);
  CHECK(cfg.synth_for_item(2).clean_kind == CleanKind::filtered_noise_burst);
  CHECK(cfg.synth_for_item(3).clean_kind == CleanKind::harmonic);

  const ExperimentConfig fixed =
      ExperimentConfig::from_text("[synth]\nclean_kind = chirp\n");
  CHECK(fixed.synth_for_item(7).clean_kind == CleanKind::chirp);
}
