#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbf/nets.hpp"
#include "sbf/schedule.hpp"
#include "sbf/signal.hpp"
#include "sbf/training.hpp"

namespace sbf {

// Experiment configuration: a flat key = value text format with [sections].
// Unknown keys are rejected; serialization is canonical (sorted, all keys
// present) so parse -> serialize -> parse is the identity.
struct EvalConfig {
  std::vector<int> steps{1, 2, 4};
  std::vector<double> snr_bin_edges{-5.0, -2.5, 2.5, 7.5, 12.5, 17.5};
  int items = 64;
};

struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
};

struct DataConfig {
  std::string train_manifest;  // empty: synthesize training data on the fly
  int items = 512;             // dataset size for cmd_synth
};

struct ExperimentConfig {
  RunConfig run;
  ScheduleParams schedule;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainRunConfig train;
  SynthSpec synth;
  std::string clean_kind = "mix";  // harmonic|chirp|filtered_noise_burst|mix
  DataConfig data;
  EvalConfig eval;

  void validate() const;

  // concrete synthesis spec for dataset item `index` (resolves "mix")
  SynthSpec synth_for_item(int64_t index) const;

  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_text() const;
};

}  // namespace sbf
