#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sbf/fft.hpp"
#include "sbf/tensor.hpp"

namespace sbf {

// Centered STFT with a periodic Hann analysis window of length fft_size.
// Spectrograms are stored as a single [2*(fft/2+1), frames] tensor: the first
// fft/2+1 rows hold the real plane, the rest the imaginary plane, so a
// complex spectrogram doubles as a stack of real channels.
struct StftConfig {
  int fft_size = 128;
  int hop = 32;
};

struct CompressionConfig {
  double exponent = 0.5;  // beta in (0, 1]
  double scale = 0.15;

  void validate() const {
    if (!(exponent > 0.0 && exponent <= 1.0))
      throw std::invalid_argument("compression: exponent must be in (0, 1]");
    if (!(scale > 0.0))
      throw std::invalid_argument("compression: scale must be > 0");
  }
};

template <typename T>
class StftPlan {
 public:
  explicit StftPlan(StftConfig cfg) : cfg_(cfg), fft_(check(cfg).fft_size) {
    window_.resize(static_cast<size_t>(cfg_.fft_size));
    for (int n = 0; n < cfg_.fft_size; ++n)
      window_[static_cast<size_t>(n)] = static_cast<T>(
          0.5 - 0.5 * std::cos(2.0 * M_PI * n / cfg_.fft_size));
  }

  const StftConfig& config() const { return cfg_; }
  int bins() const { return cfg_.fft_size / 2 + 1; }
  int num_frames(int64_t length) const {
    if (length < 1) throw std::invalid_argument("stft: empty signal");
    return static_cast<int>(length / cfg_.hop) + 1;
  }

  TensorT<T> forward(const TensorT<T>& x) const {
    if (x.rank() != 1) throw std::invalid_argument("stft: expects rank-1 input");
    const int64_t L = x.numel();
    const int N = cfg_.fft_size, F = bins(), TF = num_frames(L), pad = N / 2;
    TensorT<T> S({2 * F, TF});
    std::vector<std::complex<T>> buf(static_cast<size_t>(N));
    for (int f = 0; f < TF; ++f) {
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * cfg_.hop + n - pad;
        const T v = (i >= 0 && i < L) ? x[i] : T(0);
        buf[static_cast<size_t>(n)] = {window_[static_cast<size_t>(n)] * v, T(0)};
      }
      fft_.forward(buf.data());
      for (int j = 0; j < F; ++j) {
        S.at2(j, f) = buf[static_cast<size_t>(j)].real();
        S.at2(F + j, f) = buf[static_cast<size_t>(j)].imag();
      }
    }
    return S;
  }

  // Overlap-add inverse normalized by the squared-window envelope. For any
  // spectrogram produced by forward() this reconstructs the input exactly up
  // to floating-point error; for arbitrary spectrograms it is the
  // least-squares-style linear synthesis (imaginary residue is dropped).
  TensorT<T> inverse(const TensorT<T>& S, int64_t length) const {
    check_spec(S, length);
    const int N = cfg_.fft_size, TF = num_frames(length), pad = N / 2;
    std::vector<T> num(static_cast<size_t>(length + N), T(0));
    std::vector<std::complex<T>> buf(static_cast<size_t>(N));
    const std::vector<T> env = envelope(length, TF);
    for (int f = 0; f < TF; ++f) {
      hermitian_fill(S, f, buf);
      fft_.inverse(buf.data());
      for (int n = 0; n < N; ++n) {
        const int64_t ip = static_cast<int64_t>(f) * cfg_.hop + n;
        if (ip < static_cast<int64_t>(num.size()))
          num[static_cast<size_t>(ip)] +=
              window_[static_cast<size_t>(n)] * buf[static_cast<size_t>(n)].real();
      }
    }
    TensorT<T> x({length});
    for (int64_t i = 0; i < length; ++i)
      x[i] = num[static_cast<size_t>(i + pad)] / env[static_cast<size_t>(i)];
    return x;
  }

  // Adjoint of forward(): maps a spectrogram cotangent to a signal cotangent.
  TensorT<T> adjoint_forward(const TensorT<T>& dS, int64_t length) const {
    check_spec(dS, length);
    const int N = cfg_.fft_size, F = bins(), TF = num_frames(length), pad = N / 2;
    TensorT<T> dx({length});
    std::vector<std::complex<T>> buf(static_cast<size_t>(N));
    for (int f = 0; f < TF; ++f) {
      for (int j = 0; j < N; ++j) buf[static_cast<size_t>(j)] = {T(0), T(0)};
      for (int j = 0; j < F; ++j)
        buf[static_cast<size_t>(j)] = {dS.at2(j, f), dS.at2(F + j, f)};
      fft_.inverse_unnormalized(buf.data());
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * cfg_.hop + n - pad;
        if (i >= 0 && i < length)
          dx[i] += window_[static_cast<size_t>(n)] * buf[static_cast<size_t>(n)].real();
      }
    }
    return dx;
  }

  // Adjoint of inverse(): maps a signal cotangent to a spectrogram cotangent.
  TensorT<T> adjoint_inverse(const TensorT<T>& dx, int64_t length) const {
    if (dx.rank() != 1 || dx.numel() != length)
      throw std::invalid_argument("stft adjoint_inverse: bad cotangent shape");
    const int N = cfg_.fft_size, F = bins(), TF = num_frames(length), pad = N / 2;
    const std::vector<T> env = envelope(length, TF);
    TensorT<T> dS({2 * F, TF});
    std::vector<std::complex<T>> buf(static_cast<size_t>(N));
    for (int f = 0; f < TF; ++f) {
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * cfg_.hop + n - pad;
        T q = T(0);
        if (i >= 0 && i < length)
          q = window_[static_cast<size_t>(n)] * dx[i] / env[static_cast<size_t>(i)];
        buf[static_cast<size_t>(n)] = {q, T(0)};
      }
      fft_.forward(buf.data());
      for (int j = 0; j < F; ++j) {
        const T mu = (j == 0 || j == N / 2) ? T(1) : T(2);
        dS.at2(j, f) = mu / N * buf[static_cast<size_t>(j)].real();
        // rows 0 and N/2 of the imaginary plane do not influence inverse()
        dS.at2(F + j, f) =
            (j == 0 || j == N / 2) ? T(0) : mu / N * buf[static_cast<size_t>(j)].imag();
      }
    }
    return dS;
  }

  const std::vector<T>& window() const { return window_; }

 private:
  static const StftConfig& check(const StftConfig& cfg) {
    if (!is_pow2(cfg.fft_size))
      throw std::invalid_argument("stft: fft_size must be a power of 2");
    if (cfg.hop < 1 || cfg.hop > cfg.fft_size / 2 || cfg.fft_size % cfg.hop != 0)
      throw std::invalid_argument(
          "stft: hop must divide fft_size and be <= fft_size/2 (COLA)");
    return cfg;
  }

  void check_spec(const TensorT<T>& S, int64_t length) const {
    if (S.rank() != 2 || S.dim(0) != 2 * bins() || S.dim(1) != num_frames(length))
      throw std::invalid_argument("stft: spectrogram shape does not match plan");
  }

  std::vector<T> envelope(int64_t length, int TF) const {
    const int N = cfg_.fft_size, pad = N / 2;
    std::vector<T> env(static_cast<size_t>(length), T(0));
    for (int f = 0; f < TF; ++f) {
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * cfg_.hop + n - pad;
        if (i >= 0 && i < length) {
          const T w = window_[static_cast<size_t>(n)];
          env[static_cast<size_t>(i)] += w * w;
        }
      }
    }
    for (T e : env)
      if (!(e > T(1e-7)))
        throw std::runtime_error("stft: degenerate synthesis envelope");
    return env;
  }

  void hermitian_fill(const TensorT<T>& S, int f,
                      std::vector<std::complex<T>>& buf) const {
    const int N = cfg_.fft_size, F = bins();
    for (int j = 0; j < F; ++j)
      buf[static_cast<size_t>(j)] = {S.at2(j, f), S.at2(F + j, f)};
    for (int j = 1; j < N / 2; ++j)
      buf[static_cast<size_t>(N - j)] = std::conj(buf[static_cast<size_t>(j)]);
  }

  StftConfig cfg_;
  Fft<T> fft_;
  std::vector<T> window_;
};

// |S| -> scale * |S|^beta with phase preserved.
template <typename T>
TensorT<T> power_compress(const TensorT<T>& S, const CompressionConfig& cfg) {
  cfg.validate();
  if (S.rank() != 2 || S.dim(0) % 2 != 0)
    throw std::invalid_argument("power_compress: expects [2F, T] spectrogram");
  const int64_t F = S.dim(0) / 2, TF = S.dim(1);
  TensorT<T> out({2 * F, TF});
  for (int64_t j = 0; j < F; ++j) {
    for (int64_t f = 0; f < TF; ++f) {
      const double re = S.at2(j, f), im = S.at2(F + j, f);
      const double m = std::sqrt(re * re + im * im);
      const double g = m > 0.0 ? cfg.scale * std::pow(m, cfg.exponent - 1.0) : 0.0;
      out.at2(j, f) = static_cast<T>(g * re);
      out.at2(F + j, f) = static_cast<T>(g * im);
    }
  }
  return out;
}

template <typename T>
TensorT<T> power_decompress(const TensorT<T>& S, const CompressionConfig& cfg) {
  cfg.validate();
  if (S.rank() != 2 || S.dim(0) % 2 != 0)
    throw std::invalid_argument("power_decompress: expects [2F, T] spectrogram");
  const int64_t F = S.dim(0) / 2, TF = S.dim(1);
  TensorT<T> out({2 * F, TF});
  for (int64_t j = 0; j < F; ++j) {
    for (int64_t f = 0; f < TF; ++f) {
      const double re = S.at2(j, f), im = S.at2(F + j, f);
      const double mc = std::sqrt(re * re + im * im);
      double g = 0.0;
      if (mc > 0.0) {
        const double m = std::pow(mc / cfg.scale, 1.0 / cfg.exponent);
        g = m / mc;
      }
      out.at2(j, f) = static_cast<T>(g * re);
      out.at2(F + j, f) = static_cast<T>(g * im);
    }
  }
  return out;
}

// HTK-style triangular mel filterbank over one-sided STFT bins.
TensorT<double> mel_filterbank(int n_mels, int fft_size, double sample_rate,
                               double f_min, double f_max);

}  // namespace sbf
