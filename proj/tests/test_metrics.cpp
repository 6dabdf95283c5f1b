#include <doctest.h>

#include <cmath>

#include "sbf/metrics.hpp"
#include "sbf/rng.hpp"
#include "sbf/signal.hpp"

using namespace sbf;

TEST_CASE("si_sdr hand examples") {
  std::vector<double> s{1.0, 0.0};
  std::vector<double> sh{1.0, 1.0};
  CHECK(si_sdr(sh, s) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(si_sdr(s, s) == kSiSdrSaturationDb);
  std::vector<double> s2{2.0, 0.0};
  CHECK(si_sdr(s2, s) == kSiSdrSaturationDb);

  std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(si_sdr(sh, zero), std::domain_error);
}

TEST_CASE("si_sdr projection identity: scaled references saturate") {
  Rng rng(31);
  std::vector<double> s(257);
  for (auto& v : s) v = rng.normal();
  for (double c : {3.0, -2.0, 0.25, -1.0, 1e-3}) {
    std::vector<double> cs(s.size());
    for (size_t i = 0; i < s.size(); ++i) cs[i] = c * s[i];
    CHECK(si_sdr(cs, s) == kSiSdrSaturationDb);
  }
}

TEST_CASE("lsd examples") {
  Rng rng(32);
  std::vector<double> a(2048);
  for (auto& v : a) v = 0.3 * rng.normal();
  StftConfig cfg{256, 64};

  CHECK(lsd(a, a, cfg) == 0.0);

  std::vector<double> b(a.size());
  for (size_t i = 0; i < a.size(); ++i) b[i] = 10.0 * a[i];
  CHECK(lsd(b, a, cfg) == doctest::Approx(20.0).epsilon(1e-9));

  std::vector<double> c(a.size());
  for (auto& v : c) v = 0.3 * rng.normal();
  CHECK(lsd(a, c, cfg) == doctest::Approx(lsd(c, a, cfg)).epsilon(1e-12));
}

TEST_CASE("csv and bin aggregation are deterministic") {
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 6; ++i) {
    EvalRecord r;
    r.item = i;
    r.task = "denoise";
    r.snr_db = -4.0 + 3.0 * i;
    r.n_steps = (i % 2) ? 1 : 4;
    r.mode = (i % 2) ? "marginal" : "stochastic";
    r.si_sdr_db = 10.0 + i;
    r.lsd_db = 2.0;
    recs.push_back(r);
  }
  const std::string csv1 = eval_records_csv(recs);
  const std::string csv2 = eval_records_csv(recs);
  CHECK(csv1 == csv2);
  CHECK(csv1.substr(0, csv1.find('\n')) ==
        "item,task,snr_db,n_steps,mode,si_sdr_db,lsd_db,proc_per_sec");

  const std::vector<double> edges{-5.0, -2.5, 2.5, 7.5, 12.5, 17.5};
  const auto agg = aggregate_by_bin(recs, edges);
  CHECK(!agg.empty());
  int total = 0;
  for (const auto& s : agg) total += s.count;
  CHECK(total == 6);
  const std::string js = summaries_json(agg);
  CHECK(js == summaries_json(agg));
  CHECK(js.find("mean_si_sdr_db") != std::string::npos);
}
