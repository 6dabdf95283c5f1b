#pragma once

#include <string>
#include <vector>

#include "sbf/stft.hpp"

namespace sbf {

// SI-SDR saturates here instead of returning infinity, so CSV output stays
// numeric for exact reconstructions.
inline constexpr double kSiSdrSaturationDb = 200.0;

// 10 log10(||s_t||^2 / ||e||^2) with s_t the orthogonal projection of the
// estimate onto the reference and e the residual.
double si_sdr(const std::vector<double>& estimate,
              const std::vector<double>& reference);

// Log-spectral distance in dB: RMS over frames of the per-frame RMS
// log-magnitude difference.
double lsd(const std::vector<double>& estimate,
           const std::vector<double>& reference, const StftConfig& cfg);

struct EvalRecord {
  int item = 0;
  std::string task;
  double snr_db = 0.0;
  int n_steps = 1;
  std::string mode;
  double si_sdr_db = 0.0;
  double lsd_db = 0.0;
  double proc_per_sec = 0.0;  // zero unless timing was requested
};

// Deterministic fixed-header CSV (item,task,snr_db,n_steps,mode,si_sdr_db,
// lsd_db,proc_per_sec).
std::string eval_records_csv(const std::vector<EvalRecord>& records);

struct SnrBinSummary {
  double lo = 0.0, hi = 0.0;
  int n_steps = 1;
  std::string mode;
  int count = 0;
  double mean_si_sdr = 0.0;
  double mean_lsd = 0.0;
};

std::vector<SnrBinSummary> aggregate_by_bin(const std::vector<EvalRecord>& records,
                                            const std::vector<double>& bin_edges);

std::string summaries_json(const std::vector<SnrBinSummary>& summaries);

}  // namespace sbf
