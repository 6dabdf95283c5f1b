#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sbf/optim.hpp"
#include "sbf/params.hpp"
#include "sbf/tensor.hpp"

namespace sbf {

// Binary checkpoint container. Layout (all integers little-endian):
//   magic "SBUF1"
//   u64 config_len, config text bytes (experiment configuration)
//   u64 tensor_count
//   per tensor: u32 name_len, name bytes, u8 dtype (0 = f32, 1 = f64),
//               u32 rank, u64 dims[rank], raw data
struct Checkpoint {
  std::string config_text;
  std::vector<std::pair<std::string, TensorF>> f32;
  std::vector<std::pair<std::string, TensorD>> f64;

  const TensorF* find_f32(const std::string& name) const;
  const TensorD* find_f64(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

namespace ckpt_detail {

inline void push_tensor(Checkpoint& c, const std::string& name, const TensorF& t) {
  c.f32.emplace_back(name, t);
}
inline void push_tensor(Checkpoint& c, const std::string& name, const TensorD& t) {
  c.f64.emplace_back(name, t);
}
template <typename T>
const TensorT<T>* find_tensor(const Checkpoint& c, const std::string& name);
template <>
inline const TensorF* find_tensor<float>(const Checkpoint& c, const std::string& name) {
  return c.find_f32(name);
}
template <>
inline const TensorD* find_tensor<double>(const Checkpoint& c, const std::string& name) {
  return c.find_f64(name);
}

}  // namespace ckpt_detail

// Store/load a parameter group under a name prefix.
template <typename T>
void checkpoint_put_params(Checkpoint& c, const std::string& prefix,
                           const ParamStoreT<T>& params) {
  for (int i = 0; i < params.size(); ++i)
    ckpt_detail::push_tensor(c, prefix + "/" + params.name(i), params.value(i));
}

template <typename T>
void checkpoint_get_params(const Checkpoint& c, const std::string& prefix,
                           ParamStoreT<T>& params) {
  for (int i = 0; i < params.size(); ++i) {
    const std::string name = prefix + "/" + params.name(i);
    const TensorT<T>* t = ckpt_detail::find_tensor<T>(c, name);
    if (!t) throw std::runtime_error("checkpoint: missing tensor " + name);
    if (t->shape != params.value(i).shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    params.value(i) = *t;
  }
}

template <typename T>
void checkpoint_put_opt(Checkpoint& c, const std::string& prefix, AdamWT<T>& opt,
                        const ParamStoreT<T>& params) {
  for (int i = 0; i < params.size(); ++i) {
    ckpt_detail::push_tensor(c, prefix + "/m/" + params.name(i),
                             opt.first_moment()[static_cast<size_t>(i)]);
    ckpt_detail::push_tensor(c, prefix + "/v/" + params.name(i),
                             opt.second_moment()[static_cast<size_t>(i)]);
  }
  ckpt_detail::push_tensor(
      c, prefix + "/step_count",
      TensorD::scalar(static_cast<double>(opt.step_count())));
}

template <typename T>
void checkpoint_get_opt(const Checkpoint& c, const std::string& prefix, AdamWT<T>& opt,
                        const ParamStoreT<T>& params) {
  opt.attach(params);
  for (int i = 0; i < params.size(); ++i) {
    const TensorT<T>* m = ckpt_detail::find_tensor<T>(c, prefix + "/m/" + params.name(i));
    const TensorT<T>* v = ckpt_detail::find_tensor<T>(c, prefix + "/v/" + params.name(i));
    if (!m || !v) throw std::runtime_error("checkpoint: missing optimizer state");
    opt.first_moment()[static_cast<size_t>(i)] = *m;
    opt.second_moment()[static_cast<size_t>(i)] = *v;
  }
  const TensorD* sc = c.find_f64(prefix + "/step_count");
  if (!sc) throw std::runtime_error("checkpoint: missing optimizer step count");
  opt.set_step_count(static_cast<int64_t>((*sc)[0]));
}

template <typename T>
void checkpoint_put_ema(Checkpoint& c, const std::string& prefix, const EmaT<T>& ema,
                        const ParamStoreT<T>& params) {
  for (int i = 0; i < params.size(); ++i)
    ckpt_detail::push_tensor(c, prefix + "/" + params.name(i),
                             ema.shadow()[static_cast<size_t>(i)]);
}

template <typename T>
void checkpoint_get_ema(const Checkpoint& c, const std::string& prefix, EmaT<T>& ema,
                        const ParamStoreT<T>& params) {
  ema.attach(params);
  for (int i = 0; i < params.size(); ++i) {
    const TensorT<T>* t = ckpt_detail::find_tensor<T>(c, prefix + "/" + params.name(i));
    if (!t) throw std::runtime_error("checkpoint: missing EMA tensor for " + params.name(i));
    ema.shadow()[static_cast<size_t>(i)] = *t;
  }
}

}  // namespace sbf
