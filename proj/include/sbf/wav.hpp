#pragma once

#include <string>
#include <vector>

namespace sbf {

// Mono IEEE-float32 WAV, the only waveform format the tool reads or writes.
void write_wav_f32(const std::string& path, const std::vector<float>& samples,
                   int sample_rate);

struct WavData {
  std::vector<float> samples;
  int sample_rate = 0;
};

WavData read_wav_f32(const std::string& path);

}  // namespace sbf
