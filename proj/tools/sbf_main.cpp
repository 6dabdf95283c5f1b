// sbf: tractable Gaussian bridge enhancement toolkit.
// Verbs: verify | synth | train | enhance | sweep.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "sbf/commands.hpp"

int main(int argc, char** argv) {
  // SBF_LOG_LEVEL gates optional stderr chatter (error|warn|info|debug);
  // command output itself is deterministic and goes to stdout/files.
  const char* lvl = std::getenv("SBF_LOG_LEVEL");
  const std::string log_level = lvl ? lvl : "info";
  if (log_level == "debug") std::cerr << "sbf: log level debug\n";

  CLI::App app{"Schrodinger-bridge few-step signal enhancement toolkit"};
  app.require_subcommand(1);

  sbf::VerifyCmdOptions vopt;
  auto* verify = app.add_subcommand("verify", "run the analytic/Monte-Carlo property suites");
  verify->add_option("--seed", vopt.seed, "random seed");
  verify->add_flag("--debug-corrupt-wy", vopt.corrupt_wy,
                   "negative control: flip the sign of w_y inside the identity checks");
  verify->add_option("--out", vopt.out_path, "also write the report to this file");

  sbf::SynthCmdOptions sopt;
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth->add_option("--config", sopt.config_path, "experiment config file")->required();
  synth->add_option("--out", sopt.out_dir, "output directory (default: run.out_dir)");
  auto* synth_seed = synth->add_option("--seed", sopt.seed, "override run.seed");

  sbf::TrainCmdOptions topt;
  auto* train = app.add_subcommand("train", "train a model per the config");
  train->add_option("--config", topt.config_path, "experiment config file")->required();
  train->add_option("--out", topt.out_dir, "output directory (default: run.out_dir)");
  auto* train_seed = train->add_option("--seed", topt.seed, "override run.seed");
  train->add_option("--workers", topt.workers, "override run.workers");
  train->add_option("--steps", topt.total_steps, "override train.total_steps");

  sbf::EnhanceCmdOptions eopt;
  auto* enhance = app.add_subcommand("enhance", "enhance one mono float32 WAV");
  enhance->add_option("--checkpoint", eopt.checkpoint_path, "SBUF1 checkpoint")->required();
  enhance->add_option("--in", eopt.wav_in, "input WAV")->required();
  enhance->add_option("--out", eopt.wav_out, "output WAV")->required();
  enhance->add_option("--steps", eopt.n_steps, "sampling steps (default 1)");
  enhance->add_option("--mode", eopt.mode,
                      "sampler mode: marginal|stochastic (ufogen) or "
                      "deterministic|stochastic (baseline)");
  enhance->add_option("--seed", eopt.seed, "sampling seed");

  sbf::SweepCmdOptions wopt;
  std::string sweep_steps;
  auto* sweep = app.add_subcommand("sweep", "step-count x SNR evaluation sweep");
  sweep->add_option("--checkpoint", wopt.checkpoint_path, "SBUF1 checkpoint")->required();
  sweep->add_option("--manifest", wopt.manifest_path, "dataset manifest")->required();
  sweep->add_option("--out", wopt.out_dir, "output directory")->required();
  sweep->add_option("--steps", sweep_steps, "comma-separated step counts");
  sweep->add_option("--mode", wopt.mode, "restrict to one sampler mode");
  sweep->add_option("--seed", wopt.seed, "sampling seed");
  sweep->add_option("--workers", wopt.workers, "parallel evaluation lanes");
  sweep->add_flag("--timing", wopt.timing,
                  "measure proc_per_sec (wall clock; breaks byte-reproducibility)");
  sweep->add_flag("--plot", wopt.plot, "emit sweep_plot.svg");

  CLI11_PARSE(app, argc, argv);

  if (verify->parsed()) return sbf::cmd_verify(vopt);
  if (synth->parsed()) {
    sopt.has_seed = synth_seed->count() > 0;
    return sbf::cmd_synth(sopt);
  }
  if (train->parsed()) {
    topt.has_seed = train_seed->count() > 0;
    return sbf::cmd_train(topt);
  }
  if (enhance->parsed()) return sbf::cmd_enhance(eopt);
  if (sweep->parsed()) {
    if (!sweep_steps.empty()) {
      std::istringstream in(sweep_steps);
      std::string tok;
      while (std::getline(in, tok, ',')) wopt.steps.push_back(std::stoi(tok));
    }
    return sbf::cmd_sweep(wopt);
  }
  return 1;
}
