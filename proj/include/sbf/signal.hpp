#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbf/rng.hpp"

namespace sbf {

enum class CleanKind { harmonic, chirp, filtered_noise_burst };
enum class TaskKind { denoise, dereverb };

const char* to_string(CleanKind k);
const char* to_string(TaskKind t);
CleanKind clean_kind_from_string(const std::string& s);
TaskKind task_from_string(const std::string& s);

struct RirSpec {
  double decay_time = 0.03;  // seconds
  int length = 256;          // taps
};

struct SynthSpec {
  int sample_rate = 8000;
  double duration = 0.128;  // seconds
  CleanKind clean_kind = CleanKind::harmonic;
  double snr_lo_db = -5.0;
  double snr_hi_db = 15.0;
  bool has_rir = false;  // dereverberation task when set
  RirSpec rir;
  uint64_t seed = 0;

  TaskKind task() const { return has_rir ? TaskKind::dereverb : TaskKind::denoise; }
  int64_t length() const { return static_cast<int64_t>(duration * sample_rate + 0.5); }
  void validate() const;
};

struct PairedSample {
  std::vector<double> clean;
  std::vector<double> degraded;
  double snr_db = 0.0;  // NaN for dereverberation pairs
  TaskKind task = TaskKind::denoise;
  int sample_rate = 8000;
  uint64_t seed = 0;
};

std::vector<double> white_noise(int64_t n, Rng& rng);
std::vector<double> pink_noise(int64_t n, Rng& rng);

// noisy = clean + gain * noise, with gain chosen so that the measured
// SNR equals snr_db exactly. Returns {noisy, gain}.
std::pair<std::vector<double>, double> mix_at_snr(const std::vector<double>& clean,
                                                  const std::vector<double>& noise,
                                                  double snr_db);

// Exponentially decaying white-noise impulse response with a unit direct
// path at delay 0, normalized to unit energy.
std::vector<double> make_rir(const RirSpec& spec, int sample_rate, Rng& rng);

// Truncated (same-length) convolution.
std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& h);

std::vector<double> synth_clean(const SynthSpec& spec, Rng& rng);

PairedSample synth_pair(const SynthSpec& spec, Rng& rng);

double rms(const std::vector<double>& x);

}  // namespace sbf
