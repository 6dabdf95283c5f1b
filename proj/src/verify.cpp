#include "sbf/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sbf/bridge.hpp"
#include "sbf/rng.hpp"
#include "sbf/schedule.hpp"
#include "sbf/signal.hpp"
#include "sbf/stft.hpp"
#include "sbf/tape.hpp"
#include "sbf/tape_signal.hpp"

namespace sbf {

namespace {

ScheduleParams random_schedule(Rng& rng) {
  ScheduleParams s;
  s.c = rng.uniform_in(0.05, 2.0);
  s.k = rng.uniform_in(1.2, 6.0);
  return s;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

}  // namespace

VerifyResult verify_schedule_identities(uint64_t seed, int n_schedules,
                                        int n_pairs, bool corrupt_wy) {
  Rng rng = Rng(seed).derive("kernel_identities");
  double worst = 0.0;
  for (int d = 0; d < n_schedules; ++d) {
    const ScheduleParams s = random_schedule(rng);
    const double sT2 = sigma_sq(1.0, s);
    for (int i = 0; i < n_pairs; ++i) {
      double a = rng.uniform_in(0.0, 1.0), b = rng.uniform_in(0.0, 1.0);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-6) b = std::min(1.0, a + 1e-6);
      const BridgeCoefficients ca = marginal_coeffs(a, s);
      const BridgeCoefficients cb = marginal_coeffs(b, s);
      const double wy_a = corrupt_wy ? -ca.w_y : ca.w_y;
      const double wy_b = corrupt_wy ? -cb.w_y : cb.w_y;

      worst = std::max(worst, std::abs(ca.w_x + wy_a - 1.0));
      worst = std::max(worst, std::abs(ca.sigma2 + ca.sigma2_bar - sT2) / sT2);
      if (ca.w_x > 0.0) {
        const TransitionParams tp = transition_params(a, b, s);
        worst = std::max(worst, std::abs(tp.coef_x * ca.w_x - cb.w_x) /
                                     std::max(cb.w_x, 1e-300));
        worst = std::max(worst, std::abs(tp.coef_x * wy_a + tp.coef_y - wy_b));
        const double lhs = tp.coef_x * tp.coef_x * ca.sigma_x * ca.sigma_x + tp.var;
        const double rhs = cb.sigma_x * cb.sigma_x;
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
      }
    }
  }
  VerifyResult r;
  r.group = "kernel_identities";
  r.tolerance = 1e-10;
  r.measured = worst;
  r.pass = worst <= r.tolerance;
  std::ostringstream os;
  os << n_schedules << " schedules x " << n_pairs << " time pairs"
     << (corrupt_wy ? " [w_y sign corrupted]" : "");
  r.detail = os.str();
  return r;
}

VerifyResult verify_sigma_quadrature(uint64_t seed, int n_checks, int points) {
  Rng rng = Rng(seed).derive("quadrature");
  double worst = 0.0;
  for (int i = 0; i < n_checks; ++i) {
    const ScheduleParams s = random_schedule(rng);
    const double t = (i == 0) ? 1.0 : rng.uniform_in(0.05, 1.0);
    const double h = t / points;
    double acc = 0.0;
    for (int j = 0; j <= points; ++j) {
      const double tau = h * j;
      const double g2 = s.c * std::exp(2.0 * std::log(s.k) * tau);
      acc += (j == 0 || j == points) ? 0.5 * g2 : g2;
    }
    acc *= h;
    const double closed = sigma_sq(t, s);
    worst = std::max(worst, std::abs(closed - acc) / std::max(acc, 1e-300));
  }
  VerifyResult r;
  r.group = "sigma_quadrature";
  r.tolerance = 1e-8;
  r.measured = worst;
  r.pass = worst <= r.tolerance;
  r.detail = std::to_string(n_checks) + " schedules, " + std::to_string(points) +
             "-point trapezoid";
  return r;
}

VerifyResult verify_chapman_kolmogorov(uint64_t seed, int draws) {
  ScheduleParams sched;
  const auto grid = sched.grid_times();
  const TensorD x0 = TensorD::scalar(0.0), y = TensorD::scalar(1.0);
  Rng rng = Rng(seed).derive("chapman_kolmogorov");
  double worst_se = 0.0;
  for (size_t e = 0; e + 1 < grid.size(); ++e) {
    const double ta = grid[e], tb = grid[e + 1];
    const BridgeCoefficients target = marginal_coeffs(tb, sched);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const TensorD xa = marginal_sample(x0, y, ta, sched, rng);
      const double v = transition_sample(xa, y, ta, tb, sched, rng)[0];
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / draws, var = sum2 / draws - mean * mean;
    const double tvar = target.sigma_x * target.sigma_x;
    if (target.sigma_x > 0.0) {
      const double se_mean = target.sigma_x / std::sqrt(static_cast<double>(draws));
      const double se_var = tvar * std::sqrt(2.0 / draws);
      worst_se = std::max(worst_se, std::abs(mean - target.w_y) / se_mean);
      worst_se = std::max(worst_se, std::abs(var - tvar) / se_var);
    } else {
      // deterministic edge (t = T): exact equality expected
      worst_se = std::max(worst_se, std::abs(mean - target.w_y) > 0.0 ? 1e9 : 0.0);
    }
  }
  VerifyResult r;
  r.group = "chapman_kolmogorov_mc";
  r.tolerance = 3.0;
  r.measured = worst_se;
  r.pass = worst_se <= r.tolerance;
  r.detail = std::to_string(draws) + " draws per grid edge, N = 4 (standard errors)";
  return r;
}

VerifyResult verify_posterior_conditioning(uint64_t seed, int instances) {
  Rng rng = Rng(seed).derive("posterior");
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const ScheduleParams s = random_schedule(rng);
    double ta = rng.uniform_in(0.0, 0.98), tb = rng.uniform_in(0.0, 0.98);
    if (ta > tb) std::swap(ta, tb);
    if (tb - ta < 1e-4) tb += 1e-4;
    const double x_t = rng.normal(), x0 = rng.normal(), yv = rng.normal();

    const auto post = posterior_params(TensorD::scalar(x_t), TensorD::scalar(x0),
                                       TensorD::scalar(yv), ta, tb, s);

    // independent route: Brownian-bridge covariance conditioning
    const double su = sigma_sq(ta, s), sv = sigma_sq(tb, s), sT = sigma_sq(1.0, s);
    const double mean_s = x0 + su / sT * (yv - x0);
    const double mean_t = x0 + sv / sT * (yv - x0);
    const double var_s = su * (sT - su) / sT;
    const double var_t = sv * (sT - sv) / sT;
    const double cov = su * (sT - sv) / sT;
    double om = mean_s, ov = var_s;
    if (var_t > 0.0) {
      om = mean_s + cov / var_t * (x_t - mean_t);
      ov = var_s - cov * cov / var_t;
    }
    worst = std::max(worst, std::abs(post.mean[0] - om) / std::max(1.0, std::abs(om)));
    worst = std::max(worst, std::abs(post.var - ov) / std::max(1.0, ov));
  }
  VerifyResult r;
  r.group = "posterior_conditioning";
  r.tolerance = 1e-8;
  r.measured = worst;
  r.pass = worst <= r.tolerance;
  r.detail = std::to_string(instances) + " random scalar instances vs 2x2 oracle";
  return r;
}

VerifyResult verify_oracle_denoiser(uint64_t seed, int draws) {
  ScheduleParams sched;
  const auto grid = sched.grid_times();
  const double x0v = 0.25, yv = 1.0;
  const TensorD x0 = TensorD::scalar(x0v), y = TensorD::scalar(yv);
  Rng rng = Rng(seed).derive("oracle_denoiser");

  bool exact = true;
  double worst_se = 0.0;

  // stochastic sampler trajectories
  std::vector<double> sum(grid.size(), 0.0), sum2(grid.size(), 0.0);
  for (int i = 0; i < draws; ++i) {
    BridgeStateT<double> st{1.0, y, y};
    for (int g = static_cast<int>(grid.size()) - 2; g >= 0; --g) {
      st = reverse_step_stochastic(st, x0, grid[static_cast<size_t>(g)], sched, rng);
      sum[static_cast<size_t>(g)] += st.x[0];
      sum2[static_cast<size_t>(g)] += st.x[0] * st.x[0];
    }
    const auto fin = reverse_step_stochastic(st, x0, 0.0, sched, rng);
    exact = exact && fin.x[0] == x0v;
  }
  for (size_t g = 0; g + 1 < grid.size(); ++g) {
    const BridgeCoefficients bc = marginal_coeffs(grid[g], sched);
    const double mean = sum[g] / draws, var = sum2[g] / draws - mean * mean;
    const double tmean = bc.w_x * x0v + bc.w_y * yv, tvar = bc.sigma_x * bc.sigma_x;
    worst_se = std::max(worst_se, std::abs(mean - tmean) /
                                      (bc.sigma_x / std::sqrt(static_cast<double>(draws))));
    worst_se = std::max(worst_se, std::abs(var - tvar) / (tvar * std::sqrt(2.0 / draws)));
  }

  // deterministic sampler: one step from a true marginal sample
  {
    const double t_hi = grid[2], t_lo = grid[1];
    const BridgeCoefficients lo = marginal_coeffs(t_lo, sched);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      BridgeStateT<double> st{t_hi, marginal_sample(x0, y, t_hi, sched, rng), y};
      st = reverse_step_deterministic(st, x0, t_lo, sched);
      s1 += st.x[0];
      s2 += st.x[0] * st.x[0];
    }
    const double mean = s1 / draws, var = s2 / draws - mean * mean;
    const double tmean = lo.w_x * x0v + lo.w_y * yv, tvar = lo.sigma_x * lo.sigma_x;
    worst_se = std::max(worst_se, std::abs(mean - tmean) /
                                      (lo.sigma_x / std::sqrt(static_cast<double>(draws))));
    worst_se = std::max(worst_se, std::abs(var - tvar) / (tvar * std::sqrt(2.0 / draws)));
    BridgeStateT<double> st{t_hi, marginal_sample(x0, y, t_hi, sched, rng), y};
    exact = exact && reverse_step_deterministic(st, x0, 0.0, sched).x[0] == x0v;
  }

  // few-step loop with the oracle generator
  {
    GeneratorFn<double> oracle = [&](const TensorD&, const TensorD&, double) {
      return x0;
    };
    for (int s = 1; s <= sched.n_steps; ++s) {
      exact = exact && ufogen_infer(y, oracle, s, sched, rng)[0] == x0v;
      exact = exact &&
              ufogen_infer(y, oracle, s, sched, rng, SamplerMode::stochastic)[0] == x0v;
    }
  }

  VerifyResult r;
  r.group = "oracle_denoiser";
  r.tolerance = 3.0;
  r.measured = exact ? worst_se : 1e9;
  r.pass = exact && worst_se <= r.tolerance;
  r.detail = std::string("final emission bitwise ") + (exact ? "exact" : "WRONG") +
             "; mid-trajectory moments in standard errors";
  return r;
}

VerifyResult verify_gradcheck_core(uint64_t seed) {
  Rng rng = Rng(seed).derive("gradcheck_core");
  double worst = 0.0;

  // composite touching conv1d, linear, silu, softplus, compression,
  // magnitude, stft and istft
  StftPlan<double> plan(StftConfig{16, 4});
  const int64_t L = 40;
  // feature stack below is 2F + F = 27 channels for fft 16
  TensorD x({L}), w({2, 27, 3}), b({2}), lw({4, 2}), lb({4});
  for (auto& v : x.data) v = 0.5 * rng.normal();
  for (auto& v : w.data) v = 0.5 * rng.normal();
  for (auto& v : b.data) v = 0.1 * rng.normal();
  for (auto& v : lw.data) v = 0.5 * rng.normal();
  for (auto& v : lb.data) v = 0.1 * rng.normal();

  std::vector<std::pair<std::string, TensorD*>> params = {
      {"x", &x}, {"w", &w}, {"b", &b}, {"lw", &lw}, {"lb", &lb}};

  auto eval = [&](bool want_grads, std::vector<TensorD>* grads) -> double {
    TapeD tape;
    auto vx = ops::leaf(tape, x, want_grads);
    auto vw = ops::leaf(tape, w, want_grads);
    auto vb = ops::leaf(tape, b, want_grads);
    auto vlw = ops::leaf(tape, lw, want_grads);
    auto vlb = ops::leaf(tape, lb, want_grads);

    auto S = ops::stft(vx, plan);
    auto C = ops::compress_complex(S, 0.5, 0.15, 1e-8);
    auto M = ops::complex_magnitude(S, 1e-8);
    auto wav = ops::istft(S, plan, L);
    auto h = ops::conv1d(ops::concat_rows(C, M), vw, vb, 1, 1);
    h = ops::silu(h);
    auto pooled = ops::reshape(ops::crop_cols(h, 0, 1), {2});
    auto lin = ops::softplus(ops::linear(vlw, pooled, vlb));
    auto loss = ops::add(ops::sum_sq(lin), ops::sum_sq(wav));
    if (want_grads) {
      tape.backward(loss.id);
      grads->clear();
      for (auto vid : {vx.id, vw.id, vb.id, vlw.id, vlb.id})
        grads->push_back(tape.has_grad(vid) ? tape.grad(vid)
                                            : TensorD::zeros(tape.val(vid).shape));
      return 0.0;
    }
    return loss.value()[0];
  };

  std::vector<TensorD> analytic;
  eval(true, &analytic);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    TensorD& p = *params[pi].second;
    for (int64_t j = 0; j < p.numel(); ++j) {
      const double keep = p[j];
      double rel = HUGE_VAL;
      for (double h : {1e-4, 1e-5}) {
        p[j] = keep + h;
        const double up = eval(false, nullptr);
        p[j] = keep - h;
        const double dn = eval(false, nullptr);
        p[j] = keep;
        const double numeric = (up - dn) / (2.0 * h);
        const double a = analytic[pi][j];
        rel = std::min(rel, std::abs(a - numeric) /
                                std::max({std::abs(a), std::abs(numeric), 1e-6}));
      }
      worst = std::max(worst, rel);
    }
  }

  VerifyResult r;
  r.group = "gradcheck_core";
  r.tolerance = 1e-5;
  r.measured = worst;
  r.pass = worst <= r.tolerance;
  r.detail = "conv1d/linear/silu/softplus/compress/magnitude/stft/istft composite";
  return r;
}

VerifyResult verify_signal_suite(uint64_t seed) {
  Rng rng = Rng(seed).derive("signal_suite");
  double worst_norm = 0.0;  // max over checks of err / tol
  std::ostringstream detail;

  {
    StftPlan<double> plan(StftConfig{128, 32});
    TensorD x({4000});
    for (auto& v : x.data) v = 0.2 * rng.normal();
    const auto S = plan.forward(x);
    const auto rec = plan.inverse(S, x.numel());
    double max_err = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i)
      max_err = std::max(max_err, std::abs(rec[i] - x[i]));
    worst_norm = std::max(worst_norm, max_err / 1e-6);
    detail << "stft_roundtrip=" << fmt(max_err);

    const int N = 128, F = 65, TF = plan.num_frames(x.numel()), pad = 64;
    double win_e = 0.0, spec_e = 0.0;
    for (int f = 0; f < TF; ++f)
      for (int n = 0; n < N; ++n) {
        const int64_t i = static_cast<int64_t>(f) * 32 + n - pad;
        if (i >= 0 && i < x.numel()) {
          const double wv = plan.window()[static_cast<size_t>(n)] * x[i];
          win_e += wv * wv;
        }
      }
    for (int f = 0; f < TF; ++f)
      for (int j = 0; j < F; ++j) {
        const double e = S.at2(j, f) * S.at2(j, f) + S.at2(F + j, f) * S.at2(F + j, f);
        spec_e += (j == 0 || j == N / 2) ? e : 2.0 * e;
      }
    spec_e /= N;
    const double parseval = std::abs(spec_e - win_e) / win_e;
    worst_norm = std::max(worst_norm, parseval / 1e-6);
    detail << " parseval_rel=" << fmt(parseval);
  }

  {
    CompressionConfig cc{0.5, 0.15};
    TensorD S({10, 6});
    for (auto& v : S.data) v = rng.normal();
    const auto rt = power_decompress(power_compress(S, cc), cc);
    double rel = 0.0;
    for (int64_t i = 0; i < S.numel(); ++i)
      rel = std::max(rel, std::abs(rt[i] - S[i]) / std::max(1.0, std::abs(S[i])));
    worst_norm = std::max(worst_norm, rel / 1e-6);
    detail << " compress_roundtrip=" << fmt(rel);
  }

  {
    auto c = white_noise(512, rng);
    auto n = pink_noise(512, rng);
    double worst_snr = 0.0;
    for (double snr : {-6.0, 0.0, 12.0}) {
      const auto [noisy, g] = mix_at_snr(c, n, snr);
      (void)g;
      double pc = 0.0, pn = 0.0;
      for (size_t i = 0; i < c.size(); ++i) {
        pc += c[i] * c[i];
        const double rr = noisy[i] - c[i];
        pn += rr * rr;
      }
      worst_snr = std::max(worst_snr, std::abs(10.0 * std::log10(pc / pn) - snr));
    }
    worst_norm = std::max(worst_norm, worst_snr / 1e-9);
    detail << " snr_err_db=" << fmt(worst_snr);
  }

  VerifyResult r;
  r.group = "signal_suite";
  r.tolerance = 1.0;  // normalized: err / per-check tolerance
  r.measured = worst_norm;
  r.pass = worst_norm <= 1.0;
  r.detail = detail.str();
  return r;
}

std::vector<VerifyResult> run_all_verify(uint64_t seed, bool corrupt_wy) {
  std::vector<VerifyResult> rs;
  rs.push_back(verify_schedule_identities(seed, 100, 1000, corrupt_wy));
  rs.push_back(verify_sigma_quadrature(seed, 5, 1000000));
  rs.push_back(verify_chapman_kolmogorov(seed, 100000));
  rs.push_back(verify_posterior_conditioning(seed, 1000));
  rs.push_back(verify_oracle_denoiser(seed, 100000));
  rs.push_back(verify_gradcheck_core(seed));
  rs.push_back(verify_signal_suite(seed));
  return rs;
}

std::string format_verify_report(const std::vector<VerifyResult>& results) {
  std::ostringstream os;
  for (const auto& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.group << " measured=" << fmt(r.measured)
       << " tol=" << fmt(r.tolerance) << " (" << r.detail << ")\n";
  }
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  os << (failed == 0 ? "verify: all groups passed\n"
                     : "verify: " + std::to_string(failed) + " group(s) FAILED\n");
  return os.str();
}

}  // namespace sbf
