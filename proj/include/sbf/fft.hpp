#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace sbf {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey transform for power-of-two sizes.
// forward() applies e^{-2pi i jk/n}; inverse() applies e^{+2pi i jk/n}
// and divides by n. Twiddles are precomputed in double and rounded once.
template <typename T>
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of 2");
    twiddle_.resize(static_cast<size_t>(n_ / 2));
    for (int k = 0; k < n_ / 2; ++k) {
      const double a = -2.0 * M_PI * k / n_;
      twiddle_[static_cast<size_t>(k)] = {static_cast<T>(std::cos(a)),
                                          static_cast<T>(std::sin(a))};
    }
    rev_.resize(static_cast<size_t>(n_));
    int bits = 0;
    while ((1 << bits) < n_) ++bits;
    for (int i = 0; i < n_; ++i) {
      unsigned r = 0, v = static_cast<unsigned>(i);
      for (int b = 0; b < bits; ++b) {
        r = (r << 1) | (v & 1u);
        v >>= 1;
      }
      rev_[static_cast<size_t>(i)] = static_cast<int>(r);
    }
  }

  int size() const { return n_; }

  void forward(std::complex<T>* a) const { transform(a, false); }

  void inverse(std::complex<T>* a) const {
    transform(a, true);
    const T s = T(1) / static_cast<T>(n_);
    for (int i = 0; i < n_; ++i) a[i] *= s;
  }

  // e^{+2pi i jk/n} transform without the 1/n factor
  void inverse_unnormalized(std::complex<T>* a) const { transform(a, true); }

 private:
  void transform(std::complex<T>* a, bool inv) const {
    for (int i = 0; i < n_; ++i) {
      const int j = rev_[static_cast<size_t>(i)];
      if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len >> 1;
      const int stride = n_ / len;
      for (int base = 0; base < n_; base += len) {
        for (int k = 0; k < half; ++k) {
          std::complex<T> w = twiddle_[static_cast<size_t>(k * stride)];
          if (inv) w = std::conj(w);
          const std::complex<T> u = a[base + k];
          const std::complex<T> v = a[base + k + half] * w;
          a[base + k] = u + v;
          a[base + k + half] = u - v;
        }
      }
    }
  }

  int n_;
  std::vector<std::complex<T>> twiddle_;
  std::vector<int> rev_;
};

}  // namespace sbf
