#pragma once

#include <memory>

#include "sbf/stft.hpp"
#include "sbf/tape.hpp"

namespace sbf {
namespace ops {

// STFT as a differentiable linear op: waveform [L] -> spectrogram [2F, frames].
// The plan must outlive the tape.
template <typename T>
VarT<T> stft(VarT<T> x, const StftPlan<T>& plan) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 1) throw std::invalid_argument("stft op: expects [L]");
  const int64_t L = x.value().numel();
  TensorT<T> S = plan.forward(x.value());
  const int xid = x.id, oid = tp.next_id();
  const StftPlan<T>* pl = &plan;
  tp.add_node(std::move(S), x.tracked(), [=](TapeT<T>& t) {
    const TensorT<T> dx = pl->adjoint_forward(t.grad(oid), L);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t i = 0; i < L; ++i) gx[i] += dx[i];
  });
  return {&tp, oid};
}

// Inverse STFT: spectrogram [2F, frames] -> waveform [length].
template <typename T>
VarT<T> istft(VarT<T> S, const StftPlan<T>& plan, int64_t length) {
  TapeT<T>& tp = *S.tape;
  TensorT<T> x = plan.inverse(S.value(), length);
  const int sid = S.id, oid = tp.next_id();
  const StftPlan<T>* pl = &plan;
  tp.add_node(std::move(x), S.tracked(), [=](TapeT<T>& t) {
    const TensorT<T> dS = pl->adjoint_inverse(t.grad(oid), length);
    TensorT<T>& gs = t.grad(sid);
    for (int64_t i = 0; i < dS.numel(); ++i) gs[i] += dS[i];
  });
  return {&tp, oid};
}

}  // namespace ops
}  // namespace sbf
