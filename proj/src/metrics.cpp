#include "sbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace sbf {

double si_sdr(const std::vector<double>& estimate,
              const std::vector<double>& reference) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  double dot = 0.0, ref_e = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    dot += estimate[i] * reference[i];
    ref_e += reference[i] * reference[i];
  }
  if (!(ref_e > 0.0)) throw std::domain_error("si_sdr: zero-power reference");
  const double a = dot / ref_e;
  double sig = 0.0, err = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    const double st = a * reference[i];
    const double e = estimate[i] - st;
    sig += st * st;
    err += e * e;
  }
  if (err == 0.0) return kSiSdrSaturationDb;
  const double v = 10.0 * std::log10(sig / err);
  return std::min(v, kSiSdrSaturationDb);
}

double lsd(const std::vector<double>& estimate,
           const std::vector<double>& reference, const StftConfig& cfg) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("lsd: length mismatch");
  StftPlan<double> plan(cfg);
  TensorT<double> xe({static_cast<int64_t>(estimate.size())}, estimate);
  TensorT<double> xr({static_cast<int64_t>(reference.size())}, reference);
  const TensorT<double> Se = plan.forward(xe);
  const TensorT<double> Sr = plan.forward(xr);
  const int64_t F = Se.dim(0) / 2, TF = Se.dim(1);
  const double floor_mag = 1e-10;
  double acc = 0.0;
  for (int64_t f = 0; f < TF; ++f) {
    double frame = 0.0;
    for (int64_t j = 0; j < F; ++j) {
      const double me = std::max(
          floor_mag, std::hypot(Se.at2(j, f), Se.at2(F + j, f)));
      const double mr = std::max(
          floor_mag, std::hypot(Sr.at2(j, f), Sr.at2(F + j, f)));
      const double d = 20.0 * std::log10(me / mr);
      frame += d * d;
    }
    acc += frame / static_cast<double>(F);
  }
  return std::sqrt(acc / static_cast<double>(TF));
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  if (std::isnan(v)) return "nan";
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string eval_records_csv(const std::vector<EvalRecord>& records) {
  std::string out = "item,task,snr_db,n_steps,mode,si_sdr_db,lsd_db,proc_per_sec\n";
  for (const auto& r : records) {
    out += std::to_string(r.item);
    out += ',';
    out += r.task;
    out += ',';
    out += fmt_double(r.snr_db);
    out += ',';
    out += std::to_string(r.n_steps);
    out += ',';
    out += r.mode;
    out += ',';
    out += fmt_double(r.si_sdr_db);
    out += ',';
    out += fmt_double(r.lsd_db);
    out += ',';
    out += fmt_double(r.proc_per_sec);
    out += '\n';
  }
  return out;
}

std::vector<SnrBinSummary> aggregate_by_bin(const std::vector<EvalRecord>& records,
                                            const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2)
    throw std::invalid_argument("aggregate: need at least two bin edges");
  for (size_t i = 1; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > bin_edges[i - 1]))
      throw std::invalid_argument("aggregate: bin edges must increase");

  // key: (bin index, n_steps, mode) in deterministic order
  std::map<std::tuple<int, int, std::string>, SnrBinSummary> acc;
  for (const auto& r : records) {
    if (std::isnan(r.snr_db)) continue;
    int bin = -1;
    for (size_t i = 0; i + 1 < bin_edges.size(); ++i) {
      const bool last = i + 2 == bin_edges.size();
      if (r.snr_db >= bin_edges[i] &&
          (r.snr_db < bin_edges[i + 1] || (last && r.snr_db <= bin_edges[i + 1]))) {
        bin = static_cast<int>(i);
        break;
      }
    }
    if (bin < 0) continue;
    auto& s = acc[{bin, r.n_steps, r.mode}];
    s.lo = bin_edges[static_cast<size_t>(bin)];
    s.hi = bin_edges[static_cast<size_t>(bin) + 1];
    s.n_steps = r.n_steps;
    s.mode = r.mode;
    s.count += 1;
    s.mean_si_sdr += r.si_sdr_db;
    s.mean_lsd += r.lsd_db;
  }
  std::vector<SnrBinSummary> out;
  for (auto& [key, s] : acc) {
    s.mean_si_sdr /= s.count;
    s.mean_lsd /= s.count;
    out.push_back(s);
  }
  return out;
}

std::string summaries_json(const std::vector<SnrBinSummary>& summaries) {
  nlohmann::ordered_json root;
  root["bins"] = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json b;
    b["snr_lo"] = s.lo;
    b["snr_hi"] = s.hi;
    b["n_steps"] = s.n_steps;
    b["mode"] = s.mode;
    b["count"] = s.count;
    b["mean_si_sdr_db"] = s.mean_si_sdr;
    b["mean_lsd_db"] = s.mean_lsd;
    root["bins"].push_back(b);
  }
  return root.dump(2) + "\n";
}

}  // namespace sbf
