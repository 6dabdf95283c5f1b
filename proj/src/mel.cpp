#include <cmath>
#include <stdexcept>

#include "sbf/stft.hpp"

namespace sbf {

namespace {
double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
}  // namespace

TensorT<double> mel_filterbank(int n_mels, int fft_size, double sample_rate,
                               double f_min, double f_max) {
  if (n_mels < 1) throw std::invalid_argument("mel: n_mels must be >= 1");
  if (!(f_min >= 0.0 && f_max > f_min && f_max <= sample_rate / 2.0))
    throw std::invalid_argument("mel: need 0 <= f_min < f_max <= sr/2");
  const int bins = fft_size / 2 + 1;
  TensorT<double> fb({n_mels, bins});

  const double m_lo = hz_to_mel(f_min), m_hi = hz_to_mel(f_max);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[static_cast<size_t>(i)] =
        mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));

  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double mid = edges[static_cast<size_t>(m) + 1];
    const double hi = edges[static_cast<size_t>(m) + 2];
    for (int j = 0; j < bins; ++j) {
      const double f = sample_rate * j / fft_size;
      double w = 0.0;
      if (f > lo && f < hi)
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb.at2(m, j) = w;
    }
  }
  return fb;
}

}  // namespace sbf
