#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbf/params.hpp"
#include "sbf/rng.hpp"
#include "sbf/stft.hpp"
#include "sbf/tape.hpp"
#include "sbf/tape_signal.hpp"

namespace sbf {

enum class InputRep { compressed_complex_spectrogram, waveform };

struct GeneratorConfig {
  int base_channels = 32;
  int depth = 3;
  int time_embed_dim = 64;
  InputRep input_rep = InputRep::compressed_complex_spectrogram;
  StftConfig stft{128, 32};
  CompressionConfig compression{0.5, 0.15};

  void validate() const {
    if (depth < 1) throw std::invalid_argument("generator: depth must be >= 1");
    if (base_channels < 1) throw std::invalid_argument("generator: channels must be > 0");
    if (time_embed_dim < 4 || time_embed_dim % 2 != 0)
      throw std::invalid_argument("generator: time_embed_dim must be even and >= 4");
    compression.validate();
  }
};

struct DiscriminatorConfig {
  // 1/8 of the reference full-band scales, for 8 kHz toy audio
  std::vector<StftConfig> scales{{512, 128}, {256, 64}, {128, 32}, {64, 16}, {32, 8}};
  int channels = 16;
  int time_embed_dim = 32;
  CompressionConfig compression{0.5, 0.15};

  void validate() const {
    if (scales.empty()) throw std::invalid_argument("discriminator: needs >= 1 scale");
    for (const auto& s : scales)
      if (s.hop < 1 || s.fft_size < s.hop)
        throw std::invalid_argument("discriminator: fft_size >= hop >= 1 required");
    if (channels < 1) throw std::invalid_argument("discriminator: channels must be > 0");
    if (time_embed_dim < 4 || time_embed_dim % 2 != 0)
      throw std::invalid_argument("discriminator: time_embed_dim must be even and >= 4");
  }
};

// [sin(t w_0), ..., cos(t w_0), ...] with geometric frequencies 1..1000.
template <typename T>
TensorT<T> sinusoidal_time_embedding(double t, int dim) {
  const int half = dim / 2;
  TensorT<T> e({dim});
  for (int i = 0; i < half; ++i) {
    const double w = std::pow(1000.0, half > 1 ? static_cast<double>(i) / (half - 1) : 0.0);
    e[i] = static_cast<T>(std::sin(t * w));
    e[half + i] = static_cast<T>(std::cos(t * w));
  }
  return e;
}

template <typename T>
class GeneratorModel {
 public:
  virtual ~GeneratorModel() = default;
  virtual ParamStoreT<T>& params() = 0;
  virtual const ParamStoreT<T>& params() const = 0;
  virtual VarT<T> forward(TapeT<T>& tape, const LeavesT<T>& leaves,
                          const TensorT<T>& x_t, const TensorT<T>& y,
                          double t) const = 0;

  // no-grad evaluation against the current parameters
  TensorT<T> infer(const TensorT<T>& x_t, const TensorT<T>& y, double t) const {
    TapeT<T> tape;
    LeavesT<T> leaves(tape, params(), false);
    return forward(tape, leaves, x_t, y, t).value();
  }
};

template <typename T>
class DiscriminatorModel {
 public:
  virtual ~DiscriminatorModel() = default;
  virtual ParamStoreT<T>& params() = 0;
  virtual const ParamStoreT<T>& params() const = 0;
  // x lives on the tape so adversarial gradients can flow into the generator
  virtual std::vector<VarT<T>> forward(TapeT<T>& tape, const LeavesT<T>& leaves,
                                       VarT<T> x, const TensorT<T>& y,
                                       double t) const = 0;
};

namespace nets_detail {

template <typename T>
TensorT<T> conv_init(int64_t out_ch, int64_t in_ch, int64_t k, Rng& rng) {
  TensorT<T> w({out_ch, in_ch, k});
  const double lim = std::sqrt(1.0 / static_cast<double>(in_ch * k));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform_in(-lim, lim));
  return w;
}

template <typename T>
TensorT<T> linear_init(int64_t out_d, int64_t in_d, Rng& rng) {
  TensorT<T> w({out_d, in_d});
  const double lim = std::sqrt(1.0 / static_cast<double>(in_d));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform_in(-lim, lim));
  return w;
}

}  // namespace nets_detail

// U-shaped convolutional encoder/decoder over either compressed complex
// spectrogram frames or raw waveform samples. Conditioning: x_t and y are
// concatenated channel-wise; t enters as a sinusoidal embedding added as a
// per-channel bias at every level. The final convolution is zero-initialized
// so the untrained net is the identity pass-through of x_t.
template <typename T>
class UNetGenerator : public GeneratorModel<T> {
 public:
  UNetGenerator(GeneratorConfig cfg, uint64_t seed)
      : cfg_(cfg), plan_(cfg.stft) {
    cfg_.validate();
    Rng rng = Rng(seed).derive("unet_init");

    const bool spec = cfg_.input_rep == InputRep::compressed_complex_spectrogram;
    const int64_t F2 = 2 * (cfg_.stft.fft_size / 2 + 1);
    in_ch_ = spec ? 2 * F2 : 2;
    out_ch_ = spec ? F2 : 1;

    ch_.resize(static_cast<size_t>(cfg_.depth));
    for (int l = 0; l < cfg_.depth; ++l)
      ch_[static_cast<size_t>(l)] = static_cast<int64_t>(cfg_.base_channels) << l;

    using nets_detail::conv_init;
    using nets_detail::linear_init;
    const int E = cfg_.time_embed_dim;
    params_.add("temb.w", linear_init<T>(E, E, rng));
    params_.add("temb.b", TensorT<T>::zeros({E}));
    params_.add("conv_in.w", conv_init<T>(ch_[0], in_ch_, 3, rng));
    params_.add("conv_in.b", TensorT<T>::zeros({ch_[0]}));

    // time conditioning is FiLM-style per block: zero-initialized scale and
    // shift projections start as the identity modulation
    for (int l = 0; l < cfg_.depth; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      const int64_t c = ch_[static_cast<size_t>(l)];
      params_.add(p + "ts.w", TensorT<T>::zeros({c, E}));
      params_.add(p + "ts.b", TensorT<T>::zeros({c}));
      params_.add(p + "tb.w", TensorT<T>::zeros({c, E}));
      params_.add(p + "tb.b", TensorT<T>::zeros({c}));
      params_.add(p + "c1.w", conv_init<T>(c, c, 3, rng));
      params_.add(p + "c1.b", TensorT<T>::zeros({c}));
      params_.add(p + "c2.w", conv_init<T>(c, c, 3, rng));
      params_.add(p + "c2.b", TensorT<T>::zeros({c}));
      if (l + 1 < cfg_.depth) {
        params_.add(p + "down.w", conv_init<T>(ch_[static_cast<size_t>(l) + 1], c, 3, rng));
        params_.add(p + "down.b", TensorT<T>::zeros({ch_[static_cast<size_t>(l) + 1]}));
      }
    }
    for (int l = cfg_.depth - 2; l >= 0; --l) {
      const std::string p = "dec" + std::to_string(l) + ".";
      const int64_t c = ch_[static_cast<size_t>(l)];
      const int64_t cu = ch_[static_cast<size_t>(l) + 1];
      params_.add(p + "up.w", conv_init<T>(c, cu, 3, rng));
      params_.add(p + "up.b", TensorT<T>::zeros({c}));
      params_.add(p + "fuse.w", conv_init<T>(c, 2 * c, 3, rng));
      params_.add(p + "fuse.b", TensorT<T>::zeros({c}));
      params_.add(p + "ts.w", TensorT<T>::zeros({c, E}));
      params_.add(p + "ts.b", TensorT<T>::zeros({c}));
      params_.add(p + "tb.w", TensorT<T>::zeros({c, E}));
      params_.add(p + "tb.b", TensorT<T>::zeros({c}));
      params_.add(p + "c1.w", conv_init<T>(c, c, 3, rng));
      params_.add(p + "c1.b", TensorT<T>::zeros({c}));
    }
    params_.add("conv_out.w", TensorT<T>::zeros({out_ch_, ch_[0], 3}));
    params_.add("conv_out.b", TensorT<T>::zeros({out_ch_}));
  }

  const GeneratorConfig& config() const { return cfg_; }
  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }

  VarT<T> forward(TapeT<T>& tape, const LeavesT<T>& leaves, const TensorT<T>& x_t,
                  const TensorT<T>& y, double t) const override {
    using namespace ops;
    check_same_shape(x_t, y, "generator_forward");
    if (x_t.rank() != 1) throw std::invalid_argument("generator_forward: expects [L]");
    if (!(t >= 0.0 && t <= 1.0))
      throw std::domain_error("generator_forward: t outside [0, 1]");
    const int64_t L = x_t.numel();

    const bool spec = cfg_.input_rep == InputRep::compressed_complex_spectrogram;
    const T beta = static_cast<T>(cfg_.compression.exponent);
    const T cscale = static_cast<T>(cfg_.compression.scale);
    const T ceps = static_cast<T>(1e-8);

    // time embedding -> shared projection
    auto temb_in = constant(tape, sinusoidal_time_embedding<T>(t, cfg_.time_embed_dim));
    auto temb = silu(linear(leaves.at("temb.w"), temb_in, leaves.at("temb.b")));

    VarT<T> feat, skip_in;  // skip_in: compressed spectrogram of x_t (spec mode)
    if (spec) {
      auto sx = ops::stft(constant(tape, x_t), plan_);
      auto sy = ops::stft(constant(tape, y), plan_);
      skip_in = compress_complex(sx, beta, cscale, ceps);
      auto cy = compress_complex(sy, beta, cscale, ceps);
      feat = concat_rows(skip_in, cy);
    } else {
      skip_in = reshape(constant(tape, x_t), {1, L});
      feat = concat_rows(skip_in, reshape(constant(tape, y), {1, L}));
    }

    const int64_t width = feat.value().dim(1);
    const int64_t mult = int64_t{1} << (cfg_.depth - 1);
    const int64_t padded = (width + mult - 1) / mult * mult;
    if (padded != width) feat = pad_cols(feat, 0, padded - width);

    auto h = conv1d(feat, leaves.at("conv_in.w"), leaves.at("conv_in.b"), 1, 1);

    auto film = [&](VarT<T> v, const std::string& p) {
      auto gamma = linear(leaves.at(p + "ts.w"), temb, leaves.at(p + "ts.b"));
      auto beta = linear(leaves.at(p + "tb.w"), temb, leaves.at(p + "tb.b"));
      return add_bias_rows(scale_rows(v, add_const(gamma, T(1))), beta);
    };

    std::vector<VarT<T>> skips;
    for (int l = 0; l < cfg_.depth; ++l) {
      const std::string p = "enc" + std::to_string(l) + ".";
      h = conv1d(h, leaves.at(p + "c1.w"), leaves.at(p + "c1.b"), 1, 1);
      h = silu(film(h, p));
      h = silu(conv1d(h, leaves.at(p + "c2.w"), leaves.at(p + "c2.b"), 1, 1));
      skips.push_back(h);
      if (l + 1 < cfg_.depth)
        h = conv1d(h, leaves.at(p + "down.w"), leaves.at(p + "down.b"), 2, 1);
    }
    for (int l = cfg_.depth - 2; l >= 0; --l) {
      const std::string p = "dec" + std::to_string(l) + ".";
      h = upsample2_cols(h);
      h = conv1d(h, leaves.at(p + "up.w"), leaves.at(p + "up.b"), 1, 1);
      h = concat_rows(h, skips[static_cast<size_t>(l)]);
      h = conv1d(h, leaves.at(p + "fuse.w"), leaves.at(p + "fuse.b"), 1, 1);
      h = silu(film(h, p));
      h = silu(conv1d(h, leaves.at(p + "c1.w"), leaves.at(p + "c1.b"), 1, 1));
    }
    if (padded != width) h = crop_cols(h, 0, width);

    auto out = conv1d(h, leaves.at("conv_out.w"), leaves.at("conv_out.b"), 1, 1);
    out = add(skip_in, out);

    if (spec) {
      // invert the power compression, then synthesize the waveform
      const T inv_beta = static_cast<T>(1.0 / cfg_.compression.exponent);
      const T inv_scale =
          static_cast<T>(std::pow(cfg_.compression.scale, -1.0 / cfg_.compression.exponent));
      out = compress_complex(out, inv_beta, inv_scale, ceps);
      return ops::istft(out, plan_, L);
    }
    return reshape(out, {L});
  }

 private:
  GeneratorConfig cfg_;
  StftPlan<T> plan_;
  ParamStoreT<T> params_;
  std::vector<int64_t> ch_;
  int64_t in_ch_ = 0, out_ch_ = 0;
};

// Multi-scale STFT discriminator. Each scale sees compressed complex
// spectrogram + magnitude features of x stacked with the same features of y
// and emits one logit map over frames; t is added as a per-channel bias.
template <typename T>
class MsStftDiscriminator : public DiscriminatorModel<T> {
 public:
  MsStftDiscriminator(DiscriminatorConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = Rng(seed).derive("disc_init");
    using nets_detail::conv_init;
    using nets_detail::linear_init;

    const int E = cfg_.time_embed_dim;
    params_.add("temb.w", linear_init<T>(E, E, rng));
    params_.add("temb.b", TensorT<T>::zeros({E}));

    for (size_t s = 0; s < cfg_.scales.size(); ++s) {
      plans_.push_back(std::make_unique<StftPlan<T>>(cfg_.scales[s]));
      const int64_t F = cfg_.scales[s].fft_size / 2 + 1;
      const int64_t in_ch = 2 * 3 * F;  // (re, im, mag) for x and for y
      const int64_t C = cfg_.channels;
      const std::string p = "scale" + std::to_string(s) + ".";
      params_.add(p + "t.w", linear_init<T>(C, E, rng));
      params_.add(p + "t.b", TensorT<T>::zeros({C}));
      params_.add(p + "c1.w", conv_init<T>(C, in_ch, 3, rng));
      params_.add(p + "c1.b", TensorT<T>::zeros({C}));
      params_.add(p + "c2.w", conv_init<T>(2 * C, C, 3, rng));
      params_.add(p + "c2.b", TensorT<T>::zeros({2 * C}));
      params_.add(p + "c3.w", conv_init<T>(2 * C, 2 * C, 3, rng));
      params_.add(p + "c3.b", TensorT<T>::zeros({2 * C}));
      params_.add(p + "head.w", conv_init<T>(1, 2 * C, 3, rng));
      params_.add(p + "head.b", TensorT<T>::zeros({1}));
    }
  }

  const DiscriminatorConfig& config() const { return cfg_; }
  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }

  std::vector<VarT<T>> forward(TapeT<T>& tape, const LeavesT<T>& leaves, VarT<T> x,
                               const TensorT<T>& y, double t) const override {
    using namespace ops;
    if (x.value().rank() != 1)
      throw std::invalid_argument("discriminator_forward: expects [L]");
    if (x.value().numel() != y.numel())
      throw std::invalid_argument("discriminator_forward: x/y length mismatch");

    auto temb_in = constant(tape, sinusoidal_time_embedding<T>(t, cfg_.time_embed_dim));
    auto temb = silu(linear(leaves.at("temb.w"), temb_in, leaves.at("temb.b")));
    auto ycst = constant(tape, y);

    const T beta = static_cast<T>(cfg_.compression.exponent);
    const T cscale = static_cast<T>(cfg_.compression.scale);
    const T ceps = static_cast<T>(1e-8);

    std::vector<VarT<T>> logits;
    for (size_t s = 0; s < plans_.size(); ++s) {
      const StftPlan<T>& plan = *plans_[s];
      auto feats = [&](VarT<T> sig) {
        auto S = ops::stft(sig, plan);
        auto c = compress_complex(S, beta, cscale, ceps);
        auto m = complex_magnitude(S, ceps);
        return concat_rows(c, m);
      };
      auto f = concat_rows(feats(x), feats(ycst));
      const std::string p = "scale" + std::to_string(s) + ".";
      auto h = conv1d(f, leaves.at(p + "c1.w"), leaves.at(p + "c1.b"), 1, 1);
      auto tb = linear(leaves.at(p + "t.w"), temb, leaves.at(p + "t.b"));
      h = silu(add_bias_rows(h, tb));
      h = silu(conv1d(h, leaves.at(p + "c2.w"), leaves.at(p + "c2.b"), 2, 1));
      h = silu(conv1d(h, leaves.at(p + "c3.w"), leaves.at(p + "c3.b"), 1, 1));
      auto lg = conv1d(h, leaves.at(p + "head.w"), leaves.at(p + "head.b"), 1, 1);
      logits.push_back(reshape(lg, {lg.value().dim(1)}));
    }
    return logits;
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<std::unique_ptr<StftPlan<T>>> plans_;
  ParamStoreT<T> params_;
};

}  // namespace sbf
