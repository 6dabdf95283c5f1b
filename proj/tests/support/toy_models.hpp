#pragma once

#include <string>
#include <vector>

#include "sbf/nets.hpp"

namespace sbf::testing {

// Rank-1 concatenation helper for vector inputs.
template <typename T>
VarT<T> concat_vec(VarT<T> a, VarT<T> b) {
  using namespace ops;
  auto ar = reshape(a, {a.value().numel(), 1});
  auto br = reshape(b, {b.value().numel(), 1});
  auto cat = concat_rows(ar, br);
  return reshape(cat, {cat.value().dim(0)});
}

// Small MLP generator over scalar signals: input [x_t, y, temb] -> x0_hat.
template <typename T>
class MlpGenerator : public GeneratorModel<T> {
 public:
  MlpGenerator(int hidden, int layers, int temb_dim, uint64_t seed)
      : temb_dim_(temb_dim) {
    Rng rng = Rng(seed).derive("mlp_gen");
    int in = 2 + temb_dim;
    for (int l = 0; l < layers; ++l) {
      params_.add("w" + std::to_string(l), nets_detail::linear_init<T>(hidden, in, rng));
      params_.add("b" + std::to_string(l), TensorT<T>::zeros({hidden}));
      in = hidden;
    }
    params_.add("w_out", nets_detail::linear_init<T>(1, in, rng));
    params_.add("b_out", TensorT<T>::zeros({1}));
    n_layers_ = layers;
  }

  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }

  VarT<T> forward(TapeT<T>& tape, const LeavesT<T>& leaves, const TensorT<T>& x_t,
                  const TensorT<T>& y, double t) const override {
    using namespace ops;
    auto in = concat_vec(
        concat_vec(constant(tape, x_t), constant(tape, y)),
        constant(tape, sinusoidal_time_embedding<T>(t, temb_dim_)));
    auto h = in;
    for (int l = 0; l < n_layers_; ++l) {
      h = linear(leaves.at("w" + std::to_string(l)), h,
                 leaves.at("b" + std::to_string(l)));
      h = silu(h);
    }
    return linear(leaves.at("w_out"), h, leaves.at("b_out"));
  }

 private:
  ParamStoreT<T> params_;
  int n_layers_;
  int temb_dim_;
};

// Small MLP discriminator over scalar signals: one logit "scale".
template <typename T>
class MlpDiscriminator : public DiscriminatorModel<T> {
 public:
  MlpDiscriminator(int hidden, int temb_dim, uint64_t seed) : temb_dim_(temb_dim) {
    Rng rng = Rng(seed).derive("mlp_disc");
    const int in = 2 + temb_dim;
    params_.add("w0", nets_detail::linear_init<T>(hidden, in, rng));
    params_.add("b0", TensorT<T>::zeros({hidden}));
    params_.add("w1", nets_detail::linear_init<T>(hidden, hidden, rng));
    params_.add("b1", TensorT<T>::zeros({hidden}));
    params_.add("w_out", nets_detail::linear_init<T>(1, hidden, rng));
    params_.add("b_out", TensorT<T>::zeros({1}));
  }

  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }

  std::vector<VarT<T>> forward(TapeT<T>& tape, const LeavesT<T>& leaves, VarT<T> x,
                               const TensorT<T>& y, double t) const override {
    using namespace ops;
    auto in = concat_vec(
        concat_vec(x, constant(tape, y)),
        constant(tape, sinusoidal_time_embedding<T>(t, temb_dim_)));
    auto h = silu(linear(leaves.at("w0"), in, leaves.at("b0")));
    h = silu(linear(leaves.at("w1"), h, leaves.at("b1")));
    return {linear(leaves.at("w_out"), h, leaves.at("b_out"))};
  }

 private:
  ParamStoreT<T> params_;
  int temb_dim_;
};

// Discriminator with no parameters and constant zero logits (probability 1/2).
template <typename T>
class FrozenHalfDiscriminator : public DiscriminatorModel<T> {
 public:
  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }
  std::vector<VarT<T>> forward(TapeT<T>&, const LeavesT<T>&, VarT<T> x,
                               const TensorT<T>&, double) const override {
    // keep the graph attached to x so adversarial gradients remain defined
    return {ops::scale(ops::sum(x), T(0))};
  }

 private:
  ParamStoreT<T> params_;
};

// Records the value of its single parameter every time forward runs; used to
// pin down the discriminator-update ordering inside a training step.
template <typename T>
class RecordingDiscriminator : public DiscriminatorModel<T> {
 public:
  explicit RecordingDiscriminator(std::vector<double>* log) : log_(log) {
    params_.add("w", TensorT<T>::scalar(T(0.5)));
  }
  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }
  std::vector<VarT<T>> forward(TapeT<T>&, const LeavesT<T>& leaves, VarT<T> x,
                               const TensorT<T>&, double) const override {
    log_->push_back(static_cast<double>(params_.at("w")[0]));
    auto w = leaves.at("w");
    return {ops::mul_scalar_var(ops::reshape(x, {x.value().numel()}), w)};
  }

 private:
  ParamStoreT<T> params_;
  std::vector<double>* log_;
};

// Generator that always emits its scalar parameter times x_t (tracks calls).
template <typename T>
class CapturingGenerator : public GeneratorModel<T> {
 public:
  explicit CapturingGenerator(std::vector<TensorT<T>>* seen) : seen_(seen) {
    params_.add("g", TensorT<T>::scalar(T(1)));
  }
  ParamStoreT<T>& params() override { return params_; }
  const ParamStoreT<T>& params() const override { return params_; }
  VarT<T> forward(TapeT<T>& tape, const LeavesT<T>& leaves, const TensorT<T>& x_t,
                  const TensorT<T>&, double) const override {
    if (seen_) seen_->push_back(x_t);
    return ops::mul_scalar_var(ops::constant(tape, x_t), leaves.at("g"));
  }

 private:
  ParamStoreT<T> params_;
  std::vector<TensorT<T>>* seen_;
};

}  // namespace sbf::testing
