#include "sbf/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "sbf/fft.hpp"

namespace sbf {

const char* to_string(CleanKind k) {
  switch (k) {
    case CleanKind::harmonic: return "harmonic";
    case CleanKind::chirp: return "chirp";
    case CleanKind::filtered_noise_burst: return "filtered_noise_burst";
  }
  return "?";
}

const char* to_string(TaskKind t) {
  return t == TaskKind::denoise ? "denoise" : "dereverb";
}

CleanKind clean_kind_from_string(const std::string& s) {
  if (s == "harmonic") return CleanKind::harmonic;
  if (s == "chirp") return CleanKind::chirp;
  if (s == "filtered_noise_burst") return CleanKind::filtered_noise_burst;
  throw std::invalid_argument("unknown clean kind: " + s);
}

TaskKind task_from_string(const std::string& s) {
  if (s == "denoise") return TaskKind::denoise;
  if (s == "dereverb") return TaskKind::dereverb;
  throw std::invalid_argument("unknown task: " + s);
}

void SynthSpec::validate() const {
  if (sample_rate < 1000) throw std::invalid_argument("synth: sample_rate too low");
  if (!(duration > 0.0)) throw std::invalid_argument("synth: duration must be > 0");
  if (!std::isfinite(snr_lo_db) || !std::isfinite(snr_hi_db) || snr_lo_db > snr_hi_db)
    throw std::invalid_argument("synth: bad snr range");
  if (has_rir && rir.length < 1) throw std::invalid_argument("synth: rir length < 1");
  if (length() < 16) throw std::invalid_argument("synth: signal too short");
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / std::max<size_t>(1, x.size()));
}

std::vector<double> white_noise(int64_t n, Rng& rng) {
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.normal();
  return x;
}

std::vector<double> pink_noise(int64_t n, Rng& rng) {
  // spectral 1/sqrt(f) shaping of white noise
  int m = 1;
  while (m < n) m <<= 1;
  Fft<double> fft(m);
  std::vector<std::complex<double>> buf(static_cast<size_t>(m));
  for (auto& v : buf) v = {rng.normal(), 0.0};
  fft.forward(buf.data());
  buf[0] = 0.0;
  for (int j = 1; j < m; ++j) {
    const int fj = std::min(j, m - j);
    buf[static_cast<size_t>(j)] /= std::sqrt(static_cast<double>(fj));
  }
  fft.inverse(buf.data());
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) x[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real();
  const double r = rms(x);
  for (auto& v : x) v /= r;
  return x;
}

std::pair<std::vector<double>, double> mix_at_snr(const std::vector<double>& clean,
                                                  const std::vector<double>& noise,
                                                  double snr_db) {
  if (clean.size() != noise.size())
    throw std::invalid_argument("mix_at_snr: length mismatch");
  double pc = 0.0, pn = 0.0;
  for (double v : clean) pc += v * v;
  for (double v : noise) pn += v * v;
  if (!(pc > 0.0)) throw std::domain_error("mix_at_snr: clean signal has zero power");
  if (!(pn > 0.0)) throw std::domain_error("mix_at_snr: noise has zero power");
  const double g = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> noisy(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) noisy[i] = clean[i] + g * noise[i];
  return {std::move(noisy), g};
}

std::vector<double> make_rir(const RirSpec& spec, int sample_rate, Rng& rng) {
  if (spec.length < 1) throw std::invalid_argument("rir: length < 1");
  std::vector<double> h(static_cast<size_t>(spec.length), 0.0);
  h[0] = 1.0;
  if (spec.decay_time > 0.0) {
    for (int i = 1; i < spec.length; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      h[static_cast<size_t>(i)] = rng.normal() * std::exp(-t / spec.decay_time);
    }
  }
  double e = 0.0;
  for (double v : h) e += v * v;
  const double s = 1.0 / std::sqrt(e);
  for (auto& v : h) v *= s;
  return h;
}

std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    const size_t kmax = std::min(h.size() - 1, i);
    for (size_t k = 0; k <= kmax; ++k) acc += h[k] * x[i - k];
    y[i] = acc;
  }
  return y;
}

namespace {

std::vector<double> fade_envelope(int64_t n, double frac) {
  std::vector<double> env(static_cast<size_t>(n), 1.0);
  const int64_t m = std::max<int64_t>(1, static_cast<int64_t>(frac * n));
  for (int64_t i = 0; i < m && i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(M_PI * (i + 1) / (m + 1));
    env[static_cast<size_t>(i)] *= w;
    env[static_cast<size_t>(n - 1 - i)] *= w;
  }
  return env;
}

std::vector<double> synth_harmonic(const SynthSpec& spec, Rng& rng) {
  const int64_t n = spec.length();
  const double sr = spec.sample_rate;
  const double nyq = sr / 2.0;
  const double f0 = rng.uniform_in(100.0, 420.0);
  const int max_h = std::max(1, static_cast<int>(0.9 * nyq / f0));
  const int n_h = 2 + static_cast<int>(rng.uniform_int(
                          static_cast<uint64_t>(std::max(1, std::min(7, max_h - 1)))));
  const double amp_decay = rng.uniform_in(0.5, 1.5);
  std::vector<double> amp, phase;
  for (int h = 1; h <= std::min(n_h, max_h); ++h) {
    amp.push_back(std::pow(static_cast<double>(h), -amp_decay));
    phase.push_back(rng.uniform_in(0.0, 2.0 * M_PI));
  }
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double v = 0.0;
    for (size_t h = 0; h < amp.size(); ++h)
      v += amp[h] * std::sin(2.0 * M_PI * f0 * (h + 1) * t + phase[h]);
    x[static_cast<size_t>(i)] = v;
  }
  const auto env = fade_envelope(n, 0.1);
  for (int64_t i = 0; i < n; ++i) x[static_cast<size_t>(i)] *= env[static_cast<size_t>(i)];
  return x;
}

std::vector<double> synth_chirp(const SynthSpec& spec, Rng& rng) {
  const int64_t n = spec.length();
  const double sr = spec.sample_rate;
  const double f0 = rng.uniform_in(100.0, 800.0);
  const double f1 = rng.uniform_in(400.0, 0.85 * sr / 2.0);
  const double phase0 = rng.uniform_in(0.0, 2.0 * M_PI);
  const double dur = static_cast<double>(n) / sr;
  std::vector<double> x(static_cast<size_t>(n));
  // logarithmic sweep
  const double ratio = f1 / f0;
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double ph =
        2.0 * M_PI * f0 * dur / std::log(ratio) * (std::pow(ratio, t / dur) - 1.0);
    x[static_cast<size_t>(i)] = std::sin(ph + phase0);
  }
  const auto env = fade_envelope(n, 0.1);
  for (int64_t i = 0; i < n; ++i) x[static_cast<size_t>(i)] *= env[static_cast<size_t>(i)];
  return x;
}

std::vector<double> synth_noise_burst(const SynthSpec& spec, Rng& rng) {
  const int64_t n = spec.length();
  const double sr = spec.sample_rate;
  // band-limited white noise
  int m = 1;
  while (m < n) m <<= 1;
  const double f_lo = rng.uniform_in(200.0, 2000.0);
  const double f_hi = std::min(f_lo + rng.uniform_in(300.0, 2000.0), 0.9 * sr / 2.0);
  Fft<double> fft(m);
  std::vector<std::complex<double>> buf(static_cast<size_t>(m));
  for (auto& v : buf) v = {rng.normal(), 0.0};
  fft.forward(buf.data());
  for (int j = 0; j < m; ++j) {
    const double f = sr * std::min(j, m - j) / m;
    if (f < f_lo || f > f_hi) buf[static_cast<size_t>(j)] = 0.0;
  }
  fft.inverse(buf.data());
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) x[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real();

  // 1..3 raised-cosine bursts over a low-level bed
  const int bursts = 1 + static_cast<int>(rng.uniform_int(3));
  std::vector<double> env(static_cast<size_t>(n), 0.05);
  for (int b = 0; b < bursts; ++b) {
    const int64_t w = n / 8 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n / 4)));
    const int64_t c0 = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(std::max<int64_t>(1, n - w))));
    for (int64_t i = 0; i < w; ++i) {
      const double wgt = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / std::max<int64_t>(1, w - 1));
      env[static_cast<size_t>(c0 + i)] = std::max(env[static_cast<size_t>(c0 + i)], wgt);
    }
  }
  for (int64_t i = 0; i < n; ++i) x[static_cast<size_t>(i)] *= env[static_cast<size_t>(i)];
  return x;
}

}  // namespace

std::vector<double> synth_clean(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<double> x;
  switch (spec.clean_kind) {
    case CleanKind::harmonic: x = synth_harmonic(spec, rng); break;
    case CleanKind::chirp: x = synth_chirp(spec, rng); break;
    case CleanKind::filtered_noise_burst: x = synth_noise_burst(spec, rng); break;
  }
  const double r = rms(x);
  if (!(r > 0.0)) throw std::runtime_error("synth: degenerate clean signal");
  const double target = 0.2;
  for (auto& v : x) v *= target / r;
  return x;
}

PairedSample synth_pair(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  PairedSample p;
  p.sample_rate = spec.sample_rate;
  p.task = spec.task();
  p.seed = rng.state();
  p.clean = synth_clean(spec, rng);

  if (spec.task() == TaskKind::denoise) {
    p.snr_db = rng.uniform_in(spec.snr_lo_db, spec.snr_hi_db);
    const bool white = rng.uniform() < 0.5;
    std::vector<double> noise = white ? white_noise(spec.length(), rng)
                                      : pink_noise(spec.length(), rng);
    p.degraded = mix_at_snr(p.clean, noise, p.snr_db).first;
  } else {
    p.snr_db = std::nan("");
    const std::vector<double> h = make_rir(spec.rir, spec.sample_rate, rng);
    p.degraded = convolve_same(p.clean, h);
  }

  // joint peak guard preserves the SNR and the pairing
  double peak = 0.0;
  for (double v : p.clean) peak = std::max(peak, std::abs(v));
  for (double v : p.degraded) peak = std::max(peak, std::abs(v));
  if (peak > 0.99) {
    const double s = 0.99 / peak;
    for (auto& v : p.clean) v *= s;
    for (auto& v : p.degraded) v *= s;
  }
  return p;
}

}  // namespace sbf
