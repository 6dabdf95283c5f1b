#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sbf/rng.hpp"
#include "sbf/schedule.hpp"
#include "sbf/tensor.hpp"

namespace sbf {

// Sampling and state evolution for the tractable Gaussian bridge.
// Coefficients are always computed in double; tensor arithmetic runs in the
// tensor's own precision.

template <typename T>
struct BridgeStateT {
  double t = 1.0;
  TensorT<T> x;
  TensorT<T> y;
};

template <typename T>
struct PosteriorParamsT {
  TensorT<T> mean;
  double var = 0.0;
};

enum class SamplerMode { marginal, stochastic, deterministic };

// x_t ~ q(x_t | x0, y) = N(w_x x0 + w_y y, sigma_x^2 I)
template <typename T>
TensorT<T> marginal_sample(const TensorT<T>& x0, const TensorT<T>& y, double t,
                           const ScheduleParams& sched, Rng& rng) {
  check_same_shape(x0, y, "marginal_sample");
  const BridgeCoefficients bc = marginal_coeffs(t, sched);
  const T wx = static_cast<T>(bc.w_x), wy = static_cast<T>(bc.w_y),
          sx = static_cast<T>(bc.sigma_x);
  TensorT<T> out(x0.shape);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = wx * x0[i] + wy * y[i] +
             (sx == T(0) ? T(0) : sx * static_cast<T>(rng.normal()));
  return out;
}

// x_{t_to} ~ q(x_{t_to} | x_{t_from}, y)
template <typename T>
TensorT<T> transition_sample(const TensorT<T>& x_prev, const TensorT<T>& y,
                             double t_from, double t_to,
                             const ScheduleParams& sched, Rng& rng) {
  check_same_shape(x_prev, y, "transition_sample");
  const TransitionParams tp = transition_params(t_from, t_to, sched);
  const T a = static_cast<T>(tp.coef_x), b = static_cast<T>(tp.coef_y),
          sd = static_cast<T>(std::sqrt(tp.var));
  TensorT<T> out(x_prev.shape);
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a * x_prev[i] + b * y[i] +
             (sd == T(0) ? T(0) : sd * static_cast<T>(rng.normal()));
  return out;
}

// Exact Gaussian posterior q(x_s | x_t, x0_hat, y) for s < t, obtained by
// conditioning the marginal at s against the transition s -> t.
template <typename T>
PosteriorParamsT<T> posterior_params(const TensorT<T>& x_t,
                                     const TensorT<T>& x0_hat,
                                     const TensorT<T>& y, double s, double t,
                                     const ScheduleParams& sched) {
  check_same_shape(x_t, x0_hat, "posterior_params");
  check_same_shape(x_t, y, "posterior_params");
  if (!(s >= 0.0 && t <= 1.0))
    throw std::domain_error("posterior_params: times outside [0, 1]");
  if (!(s < t)) throw std::invalid_argument("posterior_params: requires s < t");

  const BridgeCoefficients cs = marginal_coeffs(s, sched);
  const double sx2_s = cs.sigma_x * cs.sigma_x;
  const double ws_x = cs.w_x, ws_y = cs.w_y;

  const TransitionParams tp = transition_params(s, t, sched);
  const double a = tp.coef_x, b = tp.coef_y, v_ts = tp.var;

  PosteriorParamsT<T> post;
  post.mean = TensorT<T>(x_t.shape);
  const int64_t n = x_t.numel();

  // prior mean of x_s given the endpoints
  auto prior_mean = [&](int64_t i) -> double {
    return ws_x * static_cast<double>(x0_hat[i]) + ws_y * static_cast<double>(y[i]);
  };

  if (sx2_s == 0.0) {
    // the bridge is pinned at s (s = 0): delta at the prior mean
    for (int64_t i = 0; i < n; ++i) post.mean[i] = static_cast<T>(prior_mean(i));
    post.var = 0.0;
    return post;
  }
  if (v_ts == 0.0) {
    if (a == 0.0) {
      // transition out of s carries no information about x_s (t = T,
      // where x_T = y exactly): posterior falls back to the marginal
      for (int64_t i = 0; i < n; ++i) post.mean[i] = static_cast<T>(prior_mean(i));
      post.var = sx2_s;
      return post;
    }
    // deterministic transition pins x_s = (x_t - b y) / a
    for (int64_t i = 0; i < n; ++i)
      post.mean[i] = static_cast<T>(
          (static_cast<double>(x_t[i]) - b * static_cast<double>(y[i])) / a);
    post.var = 0.0;
    return post;
  }

  const double prec = 1.0 / sx2_s + a * a / v_ts;
  const double var = 1.0 / prec;
  for (int64_t i = 0; i < n; ++i) {
    const double obs = a * (static_cast<double>(x_t[i]) - b * static_cast<double>(y[i])) / v_ts;
    post.mean[i] = static_cast<T>(var * (prior_mean(i) / sx2_s + obs));
  }
  post.var = var;
  return post;
}

// First-order ancestral step: sample from the bridge posterior.
template <typename T>
BridgeStateT<T> reverse_step_stochastic(const BridgeStateT<T>& state,
                                        const TensorT<T>& x0_hat, double t_to,
                                        const ScheduleParams& sched, Rng& rng) {
  if (!(t_to < state.t))
    throw std::invalid_argument("reverse_step_stochastic: requires t_to < state.t");
  const PosteriorParamsT<T> post =
      posterior_params(state.x, x0_hat, state.y, t_to, state.t, sched);
  BridgeStateT<T> next{t_to, TensorT<T>(state.x.shape), state.y};
  const T sd = static_cast<T>(std::sqrt(post.var));
  for (int64_t i = 0; i < next.x.numel(); ++i)
    next.x[i] = post.mean[i] + (sd == T(0) ? T(0) : sd * static_cast<T>(rng.normal()));
  return next;
}

// Variance-free counterpart: carries the current noise direction
//   r = (x - w_x(t) x0_hat - w_y(t) y) / sigma_x(t)
// to the target time. Preserves oracle-denoiser marginals exactly.
template <typename T>
BridgeStateT<T> reverse_step_deterministic(const BridgeStateT<T>& state,
                                           const TensorT<T>& x0_hat, double t_to,
                                           const ScheduleParams& sched) {
  if (!(t_to < state.t))
    throw std::invalid_argument("reverse_step_deterministic: requires t_to < state.t");
  check_same_shape(state.x, x0_hat, "reverse_step_deterministic");
  const BridgeCoefficients cur = marginal_coeffs(state.t, sched);
  const BridgeCoefficients nxt = marginal_coeffs(t_to, sched);
  const T wx_c = static_cast<T>(cur.w_x), wy_c = static_cast<T>(cur.w_y);
  const T wx_n = static_cast<T>(nxt.w_x), wy_n = static_cast<T>(nxt.w_y);
  const T sx_c = static_cast<T>(cur.sigma_x), sx_n = static_cast<T>(nxt.sigma_x);

  BridgeStateT<T> next{t_to, TensorT<T>(state.x.shape), state.y};
  for (int64_t i = 0; i < next.x.numel(); ++i) {
    const T r = sx_c == T(0)
                    ? T(0)
                    : (state.x[i] - wx_c * x0_hat[i] - wy_c * state.y[i]) / sx_c;
    next.x[i] = wx_n * x0_hat[i] + wy_n * state.y[i] + sx_n * r;
  }
  return next;
}

// A generator maps (x_t, y, t) to a clean-signal estimate.
template <typename T>
using GeneratorFn =
    std::function<TensorT<T>(const TensorT<T>&, const TensorT<T>&, double)>;

// Few-step inference. Starts at x = y (t = T) and alternates clean-estimate
// prediction with re-noising to the next grid time; the final output is the
// last clean estimate. mode marginal re-noises through the forward marginal
// (UFOGen parameterization); mode stochastic uses the bridge posterior.
template <typename T>
TensorT<T> ufogen_infer(const TensorT<T>& y, const GeneratorFn<T>& generator,
                        int n_steps, const ScheduleParams& sched, Rng& rng,
                        SamplerMode mode = SamplerMode::marginal) {
  sched.validate();
  if (n_steps < 1 || n_steps > sched.n_steps)
    throw std::invalid_argument("ufogen_infer: n_steps must be in 1..N");
  if (mode == SamplerMode::deterministic)
    throw std::invalid_argument("ufogen_infer: mode must be marginal or stochastic");

  // evaluation grid indices: ceil(N*j/s) for j = s..1, strictly decreasing
  std::vector<int> idx;
  for (int j = n_steps; j >= 1; --j)
    idx.push_back(static_cast<int>(
        (static_cast<int64_t>(sched.n_steps) * j + n_steps - 1) / n_steps));

  const std::vector<double> grid = sched.grid_times();
  BridgeStateT<T> state{1.0, y, y};
  TensorT<T> x0_hat;
  for (size_t j = 0; j < idx.size(); ++j) {
    const double t_cur = grid[static_cast<size_t>(idx[j])];
    x0_hat = generator(state.x, state.y, t_cur);
    check_same_shape(x0_hat, y, "ufogen_infer: generator output");
    if (j + 1 < idx.size()) {
      const double t_next = grid[static_cast<size_t>(idx[j + 1])];
      if (mode == SamplerMode::marginal) {
        state.x = marginal_sample(x0_hat, state.y, t_next, sched, rng);
        state.t = t_next;
      } else {
        state = reverse_step_stochastic(state, x0_hat, t_next, sched, rng);
      }
    }
  }
  return x0_hat;
}

// Multi-step sampler for the recon-only bridge baseline: uniform partition of
// [t_eps, 1] with n_steps points, iterating the chosen reverse step; the
// final step targets t = 0 and therefore emits the last clean estimate.
template <typename T>
TensorT<T> baseline_infer(const TensorT<T>& y, const GeneratorFn<T>& generator,
                          int n_steps, const ScheduleParams& sched, Rng& rng,
                          SamplerMode mode = SamplerMode::deterministic) {
  sched.validate();
  if (n_steps < 1) throw std::invalid_argument("baseline_infer: n_steps must be >= 1");
  if (mode == SamplerMode::marginal)
    throw std::invalid_argument("baseline_infer: mode must be stochastic or deterministic");

  std::vector<double> times(static_cast<size_t>(n_steps) + 1);
  for (int j = 0; j <= n_steps; ++j)
    times[static_cast<size_t>(j)] =
        sched.t_eps + (1.0 - sched.t_eps) * j / n_steps;

  BridgeStateT<T> state{1.0, y, y};
  for (int j = n_steps; j >= 1; --j) {
    const double t_cur = times[static_cast<size_t>(j)];
    const TensorT<T> x0_hat = generator(state.x, state.y, t_cur);
    check_same_shape(x0_hat, y, "baseline_infer: generator output");
    const double t_to = (j == 1) ? 0.0 : times[static_cast<size_t>(j) - 1];
    if (mode == SamplerMode::stochastic)
      state = reverse_step_stochastic(state, x0_hat, t_to, sched, rng);
    else
      state = reverse_step_deterministic(state, x0_hat, t_to, sched);
  }
  return state.x;
}

}  // namespace sbf
