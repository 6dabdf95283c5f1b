#pragma once

#include <cmath>
#include <stdexcept>

#include "sbf/params.hpp"

namespace sbf {

// Adaptive-moment optimizer with decoupled weight decay.
template <typename T>
class AdamWT {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };

  AdamWT() = default;
  explicit AdamWT(Options opt) : opt_(opt) {}

  void attach(const ParamStoreT<T>& params) {
    m_.clear();
    v_.clear();
    for (int i = 0; i < params.size(); ++i) {
      m_.push_back(TensorT<T>::zeros(params.value(i).shape));
      v_.push_back(TensorT<T>::zeros(params.value(i).shape));
    }
    step_count_ = 0;
  }

  void step(ParamStoreT<T>& params, const GradsT<T>& grads) {
    if (static_cast<int>(grads.size()) != params.size() ||
        static_cast<int>(m_.size()) != params.size())
      throw std::invalid_argument("adamw: optimizer not attached to these params");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_count_));
    for (int i = 0; i < params.size(); ++i) {
      TensorT<T>& p = params.value(i);
      const TensorT<T>& g = grads[static_cast<size_t>(i)];
      check_same_shape(p, g, "adamw");
      TensorT<T>& m = m_[static_cast<size_t>(i)];
      TensorT<T>& v = v_[static_cast<size_t>(i)];
      for (int64_t j = 0; j < p.numel(); ++j) {
        const double gj = static_cast<double>(g[j]);
        const double mj = opt_.beta1 * static_cast<double>(m[j]) + (1.0 - opt_.beta1) * gj;
        const double vj = opt_.beta2 * static_cast<double>(v[j]) + (1.0 - opt_.beta2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        double pj = static_cast<double>(p[j]);
        pj -= opt_.lr * opt_.weight_decay * pj;  // decoupled decay
        pj -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
        p[j] = static_cast<T>(pj);
      }
    }
  }

  int64_t step_count() const { return step_count_; }
  const Options& options() const { return opt_; }
  Options& options() { return opt_; }

  GradsT<T>& first_moment() { return m_; }
  GradsT<T>& second_moment() { return v_; }
  void set_step_count(int64_t n) { step_count_ = n; }

 private:
  Options opt_;
  GradsT<T> m_, v_;
  int64_t step_count_ = 0;
};

// Exponential moving average of parameters, used at inference time.
template <typename T>
class EmaT {
 public:
  EmaT() = default;
  explicit EmaT(double decay) : decay_(decay) {
    if (!(decay > 0.0 && decay < 1.0))
      throw std::invalid_argument("ema: decay must be in (0, 1)");
  }

  // shadow starts as a copy of the parameters
  void attach(const ParamStoreT<T>& params) {
    shadow_.clear();
    for (int i = 0; i < params.size(); ++i) shadow_.push_back(params.value(i));
  }

  void update(const ParamStoreT<T>& params) {
    if (static_cast<int>(shadow_.size()) != params.size())
      throw std::invalid_argument("ema: not attached to these params");
    const T d = static_cast<T>(decay_);
    for (int i = 0; i < params.size(); ++i) {
      const TensorT<T>& p = params.value(i);
      TensorT<T>& s = shadow_[static_cast<size_t>(i)];
      check_same_shape(p, s, "ema");
      for (int64_t j = 0; j < p.numel(); ++j)
        s[j] = d * s[j] + (T(1) - d) * p[j];
    }
  }

  const std::vector<TensorT<T>>& shadow() const { return shadow_; }
  std::vector<TensorT<T>>& shadow() { return shadow_; }
  double decay() const { return decay_; }

  // copy the averaged weights into a parameter store (e.g. for inference)
  void apply_to(ParamStoreT<T>& params) const {
    if (static_cast<int>(shadow_.size()) != params.size())
      throw std::invalid_argument("ema: not attached to these params");
    for (int i = 0; i < params.size(); ++i) params.value(i) = shadow_[static_cast<size_t>(i)];
  }

 private:
  double decay_ = 0.999;
  std::vector<TensorT<T>> shadow_;
};

}  // namespace sbf
