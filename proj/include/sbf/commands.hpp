#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbf/checkpoint.hpp"
#include "sbf/config.hpp"
#include "sbf/metrics.hpp"
#include "sbf/signal.hpp"

namespace sbf {

// Core operations behind the CLI verbs. These throw on error; the CLI
// wrappers translate exceptions into messages and exit codes.

// Writes clean_NNNN.wav / degraded_NNNN.wav pairs plus manifest.csv.
void synth_dataset(const ExperimentConfig& cfg, const std::string& out_dir,
                   uint64_t seed, int items);

// Loads every pair referenced by a manifest (paths resolve relative to it).
std::vector<PairedSample> load_manifest(const std::string& manifest_path);

// Full training run: writes train.log, periodic checkpoints and
// ckpt_final.sbuf under out_dir.
void run_training(const ExperimentConfig& cfg, const std::string& out_dir);

// Few-step enhancement of one waveform with the EMA generator weights.
std::vector<float> enhance_waveform(const Checkpoint& ckpt,
                                    const std::vector<float>& degraded,
                                    int n_steps, const std::string& mode,
                                    uint64_t seed);

// Sampler modes a checkpoint supports, in reporting order.
std::vector<std::string> applicable_modes(const ExperimentConfig& cfg);

// One sweep cell's inference: maps (item index, degraded, steps, mode, seed)
// to an enhanced waveform. Injectable so oracle/identity generators can
// exercise the harness directly.
using CellInferFn = std::function<std::vector<float>(
    int item, const std::vector<float>& degraded, int n_steps,
    const std::string& mode, uint64_t seed)>;

// Evaluates every (item, n_steps, mode) cell; rows are complete by
// construction.
std::vector<EvalRecord> run_sweep_cells(const std::vector<PairedSample>& items,
                                        const std::vector<int>& steps,
                                        const std::vector<std::string>& modes,
                                        const CellInferFn& infer, uint64_t seed,
                                        bool timing, int workers);

// Checkpoint-backed sweep. Step counts a checkpoint cannot run are an
// error, never a silent drop.
std::vector<EvalRecord> run_sweep(const Checkpoint& ckpt,
                                  const std::vector<PairedSample>& items,
                                  const std::vector<int>& steps,
                                  const std::vector<std::string>& modes,
                                  uint64_t seed, bool timing, int workers);

// Simple SVG line plot of mean SI-SDR vs step count per SNR bin.
std::string sweep_plot_svg(const std::vector<SnrBinSummary>& summaries);

// ---- CLI wrappers (return process exit codes) ----

struct VerifyCmdOptions {
  uint64_t seed = 1;
  bool corrupt_wy = false;
  std::string out_path;  // optional report copy
};
int cmd_verify(const VerifyCmdOptions& opt);

struct SynthCmdOptions {
  std::string config_path;
  std::string out_dir;
  bool has_seed = false;
  uint64_t seed = 0;
};
int cmd_synth(const SynthCmdOptions& opt);

struct TrainCmdOptions {
  std::string config_path;
  std::string out_dir;  // empty: config's run.out_dir
  bool has_seed = false;
  uint64_t seed = 0;
  int workers = 0;  // 0: config value
  int64_t total_steps = 0;  // 0: config value
};
int cmd_train(const TrainCmdOptions& opt);

struct EnhanceCmdOptions {
  std::string checkpoint_path;
  std::string wav_in;
  std::string wav_out;
  int n_steps = 1;
  std::string mode;  // empty: checkpoint default
  uint64_t seed = 1;
};
int cmd_enhance(const EnhanceCmdOptions& opt);

struct SweepCmdOptions {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string out_dir;
  std::vector<int> steps;  // empty: config eval.steps
  std::string mode;        // empty: all applicable modes
  uint64_t seed = 1;
  bool timing = false;
  bool plot = false;
  int workers = 1;
};
int cmd_sweep(const SweepCmdOptions& opt);

}  // namespace sbf
