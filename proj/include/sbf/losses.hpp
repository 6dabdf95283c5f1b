#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sbf/signal.hpp"
#include "sbf/stft.hpp"
#include "sbf/tape.hpp"
#include "sbf/tape_signal.hpp"

namespace sbf {

struct ReconLossConfig {
  StftConfig stft{128, 32};
  CompressionConfig compression{0.5, 0.15};
  double alpha_l1 = 1e-3;
  double mel_weight = 0.0;  // multi-resolution mel term, dereverberation only
  std::vector<StftConfig> mel_resolutions{{64, 16}, {128, 32}, {256, 64}, {512, 128}};
  int mel_bins = 20;
  int sample_rate = 8000;
};

// L = ||compress(STFT(x0_hat)) - compress(STFT(x0))||_2^2
//     + alpha * ||x0_hat - x0||_1
//     + mel_weight * sum_res ||mel |STFT_res(x0_hat)| - mel |STFT_res(x0)||_1
template <typename T>
class ReconLoss {
 public:
  explicit ReconLoss(ReconLossConfig cfg) : cfg_(cfg), plan_(cfg.stft) {
    cfg_.compression.validate();
    if (cfg_.mel_weight > 0.0) {
      for (const auto& r : cfg_.mel_resolutions) {
        mel_plans_.push_back(std::make_unique<StftPlan<T>>(r));
        mel_banks_.push_back(
            mel_filterbank(cfg_.mel_bins, r.fft_size, cfg_.sample_rate, 0.0,
                           cfg_.sample_rate / 2.0)
                .template cast<T>());
      }
    }
  }

  const ReconLossConfig& config() const { return cfg_; }

  VarT<T> operator()(TapeT<T>& tape, VarT<T> x0_hat, const TensorT<T>& x0) const {
    using namespace ops;
    if (x0_hat.value().shape != x0.shape)
      throw std::invalid_argument("recon_loss: shape mismatch");
    const int64_t L = x0.numel();
    const T beta = static_cast<T>(cfg_.compression.exponent);
    const T scl = static_cast<T>(cfg_.compression.scale);
    const T eps = static_cast<T>(1e-8);

    auto x0c = constant(tape, x0);
    auto spec_hat = compress_complex(ops::stft(x0_hat, plan_), beta, scl, eps);
    auto spec_ref = compress_complex(ops::stft(x0c, plan_), beta, scl, eps);
    auto loss = sum_sq(sub(spec_hat, spec_ref));
    loss = add(loss, scale(sum_abs(sub(x0_hat, x0c)), static_cast<T>(cfg_.alpha_l1)));

    if (cfg_.mel_weight > 0.0) {
      (void)L;
      VarT<T> mel_total;
      bool first = true;
      for (size_t r = 0; r < mel_plans_.size(); ++r) {
        auto mh = matmul_const(mel_banks_[r],
                               complex_magnitude(ops::stft(x0_hat, *mel_plans_[r]), eps));
        auto mr = matmul_const(mel_banks_[r],
                               complex_magnitude(ops::stft(x0c, *mel_plans_[r]), eps));
        auto term = sum_abs(sub(mh, mr));
        mel_total = first ? term : add(mel_total, term);
        first = false;
      }
      loss = add(loss, scale(mel_total, static_cast<T>(cfg_.mel_weight)));
    }
    return loss;
  }

 private:
  ReconLossConfig cfg_;
  StftPlan<T> plan_;
  std::vector<std::unique_ptr<StftPlan<T>>> mel_plans_;
  std::vector<TensorT<T>> mel_banks_;
};

// Non-saturating logistic GAN losses; probabilities come from squashing the
// logit maps, losses are averaged over positions and then across scales.
//   d_loss  = mean_s [ mean(-log D(real)) + mean(-log(1 - D(fake))) ]
//   g_adv   = mean_s [ mean(-log D(fake)) ]
template <typename T>
VarT<T> d_loss(const std::vector<VarT<T>>& real_logits,
               const std::vector<VarT<T>>& fake_logits) {
  using namespace ops;
  if (real_logits.empty() || real_logits.size() != fake_logits.size())
    throw std::invalid_argument("d_loss: scale count mismatch");
  VarT<T> total;
  for (size_t s = 0; s < real_logits.size(); ++s) {
    auto term = add(mean(softplus(neg(real_logits[s]))), mean(softplus(fake_logits[s])));
    total = s == 0 ? term : add(total, term);
  }
  return scale(total, static_cast<T>(1.0 / real_logits.size()));
}

template <typename T>
VarT<T> g_adv_loss(const std::vector<VarT<T>>& fake_logits) {
  using namespace ops;
  if (fake_logits.empty()) throw std::invalid_argument("g_adv_loss: no scales");
  VarT<T> total;
  for (size_t s = 0; s < fake_logits.size(); ++s) {
    auto term = mean(softplus(neg(fake_logits[s])));
    total = s == 0 ? term : add(total, term);
  }
  return scale(total, static_cast<T>(1.0 / fake_logits.size()));
}

// Pluggable reconstruction hook so toy tasks can swap in a plain waveform
// loss while the audio pipeline uses the spectrogram ReconLoss.
template <typename T>
using ReconFn = std::function<VarT<T>(TapeT<T>&, VarT<T>, const TensorT<T>&)>;

// Plain ||x - x0||_2^2 + alpha ||x - x0||_1 in the signal domain.
template <typename T>
ReconFn<T> waveform_recon_fn(double alpha_l1) {
  return [alpha_l1](TapeT<T>& tape, VarT<T> x0_hat, const TensorT<T>& x0) {
    using namespace ops;
    auto d = sub(x0_hat, constant(tape, x0));
    return add(sum_sq(d), scale(sum_abs(d), static_cast<T>(alpha_l1)));
  };
}

}  // namespace sbf
