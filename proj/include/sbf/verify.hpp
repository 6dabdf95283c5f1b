#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sbf {

struct VerifyResult {
  std::string group;
  bool pass = false;
  double measured = 0.0;  // worst observed deviation in the group's units
  double tolerance = 0.0;
  std::string detail;
};

// Analytic kernel identities over random schedules. corrupt_wy flips the
// sign of w_y before checking, as a negative control for the suite itself.
VerifyResult verify_schedule_identities(uint64_t seed, int n_schedules,
                                        int n_pairs, bool corrupt_wy);

// Closed-form sigma_t^2 against trapezoid quadrature of g^2.
VerifyResult verify_sigma_quadrature(uint64_t seed, int n_checks, int points);

// Chapman-Kolmogorov: marginal + transition vs the direct marginal,
// Monte-Carlo moments per grid edge at N = 4 (units: standard errors).
VerifyResult verify_chapman_kolmogorov(uint64_t seed, int draws);

// posterior_params vs brute-force 2x2 joint-Gaussian conditioning.
VerifyResult verify_posterior_conditioning(uint64_t seed, int instances);

// Reverse samplers and the few-step loop with the oracle denoiser:
// bitwise final emission plus mid-trajectory moment preservation.
VerifyResult verify_oracle_denoiser(uint64_t seed, int draws);

// Finite-difference gradient checks of the core differentiable ops.
VerifyResult verify_gradcheck_core(uint64_t seed);

// STFT reconstruction/Parseval, compression round trip, exact SNR mixing.
VerifyResult verify_signal_suite(uint64_t seed);

std::vector<VerifyResult> run_all_verify(uint64_t seed, bool corrupt_wy);

std::string format_verify_report(const std::vector<VerifyResult>& results);

}  // namespace sbf
