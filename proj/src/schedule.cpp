#include "sbf/schedule.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sbf {

namespace {

void check_time(double t, const char* where) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << where << ": time " << t << " outside [0, 1]";
    throw std::domain_error(os.str());
  }
}

}  // namespace

void ScheduleParams::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("schedule: c must be > 0");
  if (!(k > 1.0)) throw std::invalid_argument("schedule: k must be > 1");
  if (t_end != 1.0) throw std::invalid_argument("schedule: t_end is fixed at 1");
  if (n_steps < 1) throw std::invalid_argument("schedule: n_steps must be >= 1");
  if (!(t_eps > 0.0 && t_eps < 1.0 / n_steps))
    throw std::invalid_argument("schedule: t_eps must lie in (0, 1/n_steps)");
}

std::vector<double> ScheduleParams::grid_times() const {
  validate();
  std::vector<double> ts(static_cast<size_t>(n_steps) + 1);
  ts[0] = t_eps;
  for (int n = 1; n <= n_steps; ++n)
    ts[static_cast<size_t>(n)] = static_cast<double>(n) / n_steps;
  return ts;
}

double sigma_sq(double t, const ScheduleParams& sched) {
  check_time(t, "sigma_sq");
  // expm1 keeps sigma^2(0) exactly zero and is accurate for small t
  const double two_ln_k = 2.0 * std::log(sched.k);
  return sched.c * std::expm1(two_ln_k * t) / two_ln_k;
}

BridgeCoefficients marginal_coeffs(double t, const ScheduleParams& sched) {
  check_time(t, "marginal_coeffs");
  BridgeCoefficients bc;
  bc.t = t;
  bc.alpha = 1.0;
  const double s2_T = sigma_sq(1.0, sched);
  bc.sigma2 = sigma_sq(t, sched);
  bc.sigma2_bar = s2_T - bc.sigma2;
  bc.w_x = bc.sigma2_bar / s2_T;
  bc.w_y = bc.sigma2 / s2_T;
  bc.sigma_x = std::sqrt(bc.sigma2_bar * bc.sigma2 / s2_T);
  return bc;
}

TransitionParams transition_params(double t_from, double t_to,
                                   const ScheduleParams& sched) {
  check_time(t_from, "transition_params");
  check_time(t_to, "transition_params");
  if (!(t_from < t_to))
    throw std::invalid_argument("transition_params: requires t_from < t_to");

  const BridgeCoefficients from = marginal_coeffs(t_from, sched);
  const BridgeCoefficients to = marginal_coeffs(t_to, sched);
  if (from.w_x <= 0.0)
    throw std::domain_error(
        "transition_params: w_x(t_from) = 0 (t_from = T); no forward "
        "transition exists out of the horizon");

  TransitionParams tp;
  tp.t_from = t_from;
  tp.t_to = t_to;
  tp.coef_x = to.w_x / from.w_x;
  tp.coef_y = to.w_y - tp.coef_x * from.w_y;

  const double sx2_from = from.sigma_x * from.sigma_x;
  const double sx2_to = to.sigma_x * to.sigma_x;
  double var = sx2_to - tp.coef_x * tp.coef_x * sx2_from;
  // cancellation at t_to = T can leave a tiny negative residue
  const double tol = 1e-12 * std::max(1.0, sx2_to);
  if (var < 0.0) {
    if (var < -tol) {
      std::ostringstream os;
      os << "transition_params: variance " << var << " below -" << tol;
      throw std::logic_error(os.str());
    }
    var = 0.0;
  }
  tp.var = var;
  return tp;
}

}  // namespace sbf
