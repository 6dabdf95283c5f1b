#pragma once

#include <vector>

namespace sbf {

// Variance-exploding noise schedule: zero drift, g^2(t) = c * k^(2t) on
// t in [0, 1]. All schedule math runs in double regardless of the training
// precision; the boundary cancellations at t = T are catastrophic in float.
struct ScheduleParams {
  double c = 0.40;        // diffusion magnitude
  double k = 2.6;         // diffusion growth rate, > 1
  double t_end = 1.0;     // horizon T, fixed at 1
  double t_eps = 0.03;    // smallest grid time t_0
  int n_steps = 4;        // grid resolution N

  void validate() const;

  // [t_eps, 1/N, 2/N, ..., 1], size n_steps + 1
  std::vector<double> grid_times() const;
};

// Per-time marginal quantities of the tractable Gaussian bridge.
struct BridgeCoefficients {
  double t = 0.0;
  double alpha = 1.0;       // identically 1 for VE
  double sigma2 = 0.0;      // accumulated variance sigma_t^2
  double sigma2_bar = 0.0;  // sigma_T^2 - sigma_t^2
  double w_x = 1.0;         // weight of the clean signal
  double w_y = 0.0;         // weight of the degraded signal
  double sigma_x = 0.0;     // marginal standard deviation
};

// Gaussian forward transition x_{t_from} -> x_{t_to}:
//   x_to = coef_x * x_from + coef_y * y + sqrt(var) * z
struct TransitionParams {
  double t_from = 0.0;
  double t_to = 0.0;
  double coef_x = 1.0;
  double coef_y = 0.0;
  double var = 0.0;
};

// sigma_t^2 = c (k^{2t} - 1) / (2 ln k)
double sigma_sq(double t, const ScheduleParams& sched);

BridgeCoefficients marginal_coeffs(double t, const ScheduleParams& sched);

TransitionParams transition_params(double t_from, double t_to,
                                   const ScheduleParams& sched);

}  // namespace sbf
