#include "sbf/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sbf/bridge.hpp"
#include "sbf/losses.hpp"
#include "sbf/training.hpp"
#include "sbf/verify.hpp"
#include "sbf/wav.hpp"

namespace fs = std::filesystem;

namespace sbf {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  if (std::isnan(v)) return "nan";
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<float> to_f32(const std::vector<double>& x) {
  std::vector<float> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i]);
  return out;
}

std::vector<double> to_f64(const std::vector<float>& x) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i]);
  return out;
}

TensorF wave_tensor(const std::vector<double>& x) {
  TensorF t({static_cast<int64_t>(x.size())});
  for (size_t i = 0; i < x.size(); ++i) t[static_cast<int64_t>(i)] = static_cast<float>(x[i]);
  return t;
}

ReconLossConfig recon_cfg_from(const ExperimentConfig& cfg) {
  ReconLossConfig rc;
  rc.stft = cfg.generator.stft;
  rc.compression = cfg.generator.compression;
  rc.alpha_l1 = cfg.train.alpha_l1;
  rc.mel_weight = cfg.train.task == TaskKind::dereverb ? cfg.train.mel_weight : 0.0;
  rc.sample_rate = cfg.synth.sample_rate;
  return rc;
}

TrainItem<float> to_item(const PairedSample& p) {
  TrainItem<float> it;
  it.x0 = wave_tensor(p.clean);
  it.y = wave_tensor(p.degraded);
  return it;
}

}  // namespace

void synth_dataset(const ExperimentConfig& cfg, const std::string& out_dir,
                   uint64_t seed, int items) {
  fs::create_directories(out_dir);
  std::ostringstream manifest;
  manifest << "clean,degraded,seed,snr_db,task,sample_rate,length\n";
  for (int i = 0; i < items; ++i) {
    const SynthSpec spec = cfg.synth_for_item(i);
    Rng rng = Rng(seed).derive("dataset", static_cast<uint64_t>(i));
    const uint64_t item_seed = rng.state();
    const PairedSample p = synth_pair(spec, rng);
    char cname[64], dname[64];
    std::snprintf(cname, sizeof(cname), "clean_%05d.wav", i);
    std::snprintf(dname, sizeof(dname), "degraded_%05d.wav", i);
    write_wav_f32((fs::path(out_dir) / cname).string(), to_f32(p.clean), p.sample_rate);
    write_wav_f32((fs::path(out_dir) / dname).string(), to_f32(p.degraded), p.sample_rate);
    manifest << cname << ',' << dname << ',' << item_seed << ','
             << fmt_double(p.snr_db) << ',' << to_string(p.task) << ','
             << p.sample_rate << ',' << p.clean.size() << "\n";
  }
  write_text_file((fs::path(out_dir) / "manifest.csv").string(), manifest.str());
}

std::vector<PairedSample> load_manifest(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("sweep: cannot open manifest " + manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<PairedSample> out;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream in(line);
    std::string clean_p, degraded_p, seed_s, snr_s, task_s, rate_s, len_s;
    if (!std::getline(in, clean_p, ',') || !std::getline(in, degraded_p, ',') ||
        !std::getline(in, seed_s, ',') || !std::getline(in, snr_s, ',') ||
        !std::getline(in, task_s, ',') || !std::getline(in, rate_s, ',') ||
        !std::getline(in, len_s, ','))
      throw std::runtime_error("manifest: malformed row: " + line);
    PairedSample p;
    const WavData cw = read_wav_f32((base / clean_p).string());
    const WavData dw = read_wav_f32((base / degraded_p).string());
    if (cw.samples.size() != dw.samples.size())
      throw std::runtime_error("manifest: clean/degraded length mismatch for " + clean_p);
    p.clean = to_f64(cw.samples);
    p.degraded = to_f64(dw.samples);
    p.sample_rate = cw.sample_rate;
    p.seed = std::stoull(seed_s);
    p.snr_db = snr_s == "nan" ? std::nan("") : std::stod(snr_s);
    p.task = task_from_string(task_s);
    out.push_back(std::move(p));
  }
  if (out.empty()) throw std::runtime_error("manifest: no items in " + manifest_path);
  return out;
}

namespace {

Checkpoint build_checkpoint(const ExperimentConfig& cfg, UNetGenerator<float>& gen,
                            MsStftDiscriminator<float>* disc, Trainer<float>& tr) {
  Checkpoint c;
  c.config_text = cfg.to_text();
  checkpoint_put_params(c, "gen", gen.params());
  checkpoint_put_ema(c, "ema_gen", tr.ema(), gen.params());
  checkpoint_put_opt(c, "opt_gen", tr.gen_opt(), gen.params());
  if (disc) {
    checkpoint_put_params(c, "disc", disc->params());
    checkpoint_put_opt(c, "opt_disc", tr.disc_opt(), disc->params());
  }
  c.f64.emplace_back("meta/step", TensorD::scalar(static_cast<double>(tr.step_index())));
  return c;
}

}  // namespace

void run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  UNetGenerator<float> gen(cfg.generator, Rng(cfg.run.seed).derive("gen_init").state());
  std::unique_ptr<MsStftDiscriminator<float>> disc;
  if (cfg.train.mode == TrainMode::sb_ufogen)
    disc = std::make_unique<MsStftDiscriminator<float>>(
        cfg.discriminator, Rng(cfg.run.seed).derive("disc_init").state());

  ReconLoss<float> recon(recon_cfg_from(cfg));
  ReconFn<float> recon_fn = [&recon](TapeF& tape, VarT<float> x0_hat,
                                     const TensorF& x0) {
    return recon(tape, x0_hat, x0);
  };

  TrainRunConfig tcfg = cfg.train;
  tcfg.workers = cfg.run.workers;
  Trainer<float> tr(gen, disc.get(), tcfg, cfg.schedule, recon_fn, cfg.run.seed);

  std::vector<PairedSample> dataset;
  if (!cfg.data.train_manifest.empty()) dataset = load_manifest(cfg.data.train_manifest);

  std::ofstream log((fs::path(out_dir) / "train.log").string());
  if (!log) throw std::runtime_error("train: cannot open log in " + out_dir);
  write_text_file((fs::path(out_dir) / "config.ini").string(), cfg.to_text());

  const int B = cfg.train.batch_size;
  for (int64_t step = 0; step < cfg.train.total_steps; ++step) {
    std::vector<TrainItem<float>> batch;
    batch.reserve(static_cast<size_t>(B));
    for (int ex = 0; ex < B; ++ex) {
      const int64_t gidx = step * B + ex;
      if (!dataset.empty()) {
        batch.push_back(to_item(dataset[static_cast<size_t>(gidx % dataset.size())]));
      } else {
        const SynthSpec spec = cfg.synth_for_item(gidx);
        Rng rng = Rng(cfg.run.seed).derive("data", static_cast<uint64_t>(step),
                                           static_cast<uint64_t>(ex));
        batch.push_back(to_item(synth_pair(spec, rng)));
      }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const StepStats st = tr.step(batch);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();

    if (st.step % cfg.train.log_every == 0 || step + 1 == cfg.train.total_steps)
      log << format_log_line(st, wall_ms) << "\n" << std::flush;

    if (cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%08lld.sbuf",
                    static_cast<long long>(step + 1));
      save_checkpoint((fs::path(out_dir) / name).string(),
                      build_checkpoint(cfg, gen, disc.get(), tr));
    }
  }
  save_checkpoint((fs::path(out_dir) / "ckpt_final.sbuf").string(),
                  build_checkpoint(cfg, gen, disc.get(), tr));
}

std::vector<std::string> applicable_modes(const ExperimentConfig& cfg) {
  if (cfg.train.mode == TrainMode::sb_ufogen) return {"marginal", "stochastic"};
  return {"deterministic", "stochastic"};
}

namespace {

struct LoadedGenerator {
  ExperimentConfig cfg;
  std::unique_ptr<UNetGenerator<float>> gen;
};

LoadedGenerator load_ema_generator(const Checkpoint& ckpt) {
  LoadedGenerator lg;
  lg.cfg = ExperimentConfig::from_text(ckpt.config_text);
  lg.gen = std::make_unique<UNetGenerator<float>>(lg.cfg.generator, 0);
  // inference always runs on the averaged weights
  checkpoint_get_params(ckpt, "ema_gen", lg.gen->params());
  return lg;
}

std::vector<float> run_inference(const LoadedGenerator& lg,
                                 const std::vector<float>& degraded, int n_steps,
                                 const std::string& mode, uint64_t seed) {
  TensorF y({static_cast<int64_t>(degraded.size())}, degraded);
  GeneratorFn<float> fn = [&](const TensorF& x_t, const TensorF& cond, double t) {
    return lg.gen->infer(x_t, cond, t);
  };
  Rng rng = Rng(seed).derive("infer");
  TensorF out;
  if (lg.cfg.train.mode == TrainMode::sb_ufogen) {
    SamplerMode m;
    if (mode == "marginal" || mode.empty())
      m = SamplerMode::marginal;
    else if (mode == "stochastic")
      m = SamplerMode::stochastic;
    else
      throw std::invalid_argument("enhance: mode '" + mode +
                                  "' is not valid for an sb_ufogen checkpoint");
    out = ufogen_infer(y, fn, n_steps, lg.cfg.schedule, rng, m);
  } else {
    SamplerMode m;
    if (mode == "deterministic" || mode.empty())
      m = SamplerMode::deterministic;
    else if (mode == "stochastic")
      m = SamplerMode::stochastic;
    else
      throw std::invalid_argument("enhance: mode '" + mode +
                                  "' is not valid for an sb_baseline checkpoint");
    out = baseline_infer(y, fn, n_steps, lg.cfg.schedule, rng, m);
  }
  return std::vector<float>(out.data.begin(), out.data.end());
}

}  // namespace

std::vector<float> enhance_waveform(const Checkpoint& ckpt,
                                    const std::vector<float>& degraded, int n_steps,
                                    const std::string& mode, uint64_t seed) {
  if (degraded.empty()) throw std::invalid_argument("enhance: empty waveform");
  const LoadedGenerator lg = load_ema_generator(ckpt);
  return run_inference(lg, degraded, n_steps, mode, seed);
}

std::vector<EvalRecord> run_sweep_cells(const std::vector<PairedSample>& items,
                                        const std::vector<int>& steps,
                                        const std::vector<std::string>& modes,
                                        const CellInferFn& infer, uint64_t seed,
                                        bool timing, int workers) {
  if (items.empty()) throw std::invalid_argument("sweep: no items");
  if (steps.empty()) throw std::invalid_argument("sweep: no step counts");
  if (modes.empty()) throw std::invalid_argument("sweep: no modes");

  const StftConfig lsd_cfg{256, 64};
  const int64_t n_cells = static_cast<int64_t>(items.size()) * steps.size() * modes.size();
  std::vector<EvalRecord> records(static_cast<size_t>(n_cells));

  train_detail::parallel_for(
      static_cast<int>(n_cells), workers, [&](int cell) {
        const int per_item = static_cast<int>(steps.size() * modes.size());
        const int item = cell / per_item;
        const int rest = cell % per_item;
        const int si = rest / static_cast<int>(modes.size());
        const int mi = rest % static_cast<int>(modes.size());
        const PairedSample& p = items[static_cast<size_t>(item)];

        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<float> est_f =
            infer(item, to_f32(p.degraded), steps[static_cast<size_t>(si)],
                  modes[static_cast<size_t>(mi)],
                  Rng(seed).derive("cell", static_cast<uint64_t>(cell)).state());
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        EvalRecord r;
        r.item = item;
        r.task = to_string(p.task);
        r.snr_db = p.snr_db;
        r.n_steps = steps[static_cast<size_t>(si)];
        r.mode = modes[static_cast<size_t>(mi)];
        const auto est = to_f64(est_f);
        r.si_sdr_db = si_sdr(est, p.clean);
        r.lsd_db = lsd(est, p.clean, lsd_cfg);
        const double audio_secs =
            static_cast<double>(p.clean.size()) / p.sample_rate;
        r.proc_per_sec = timing ? secs / audio_secs : 0.0;
        records[static_cast<size_t>(cell)] = r;
      });
  return records;
}

std::vector<EvalRecord> run_sweep(const Checkpoint& ckpt,
                                  const std::vector<PairedSample>& items,
                                  const std::vector<int>& steps,
                                  const std::vector<std::string>& modes,
                                  uint64_t seed, bool timing, int workers) {
  const LoadedGenerator lg = load_ema_generator(ckpt);
  for (int s : steps) {
    if (s < 1) throw std::invalid_argument("sweep: step counts must be >= 1");
    if (lg.cfg.train.mode == TrainMode::sb_ufogen && s > lg.cfg.schedule.n_steps)
      throw std::invalid_argument(
          "sweep: an sb_ufogen checkpoint cannot run " + std::to_string(s) +
          " steps (N = " + std::to_string(lg.cfg.schedule.n_steps) + ")");
  }
  const auto valid_modes = applicable_modes(lg.cfg);
  for (const auto& m : modes) {
    bool ok = false;
    for (const auto& vm : valid_modes) ok = ok || vm == m;
    if (!ok) throw std::invalid_argument("sweep: mode '" + m + "' not applicable");
  }
  CellInferFn infer = [&lg](int, const std::vector<float>& degraded, int n_steps,
                            const std::string& mode, uint64_t cell_seed) {
    return run_inference(lg, degraded, n_steps, mode, cell_seed);
  };
  return run_sweep_cells(items, steps, modes, infer, seed, timing, workers);
}

std::string sweep_plot_svg(const std::vector<SnrBinSummary>& summaries) {
  // group by (bin, mode); one polyline of mean SI-SDR over n_steps each
  struct Series {
    std::string label;
    std::vector<std::pair<int, double>> pts;
  };
  std::vector<Series> series;
  for (const auto& s : summaries) {
    char lab[96];
    std::snprintf(lab, sizeof(lab), "[%g,%g]dB %s", s.lo, s.hi, s.mode.c_str());
    Series* found = nullptr;
    for (auto& sr : series)
      if (sr.label == lab) found = &sr;
    if (!found) {
      series.push_back({lab, {}});
      found = &series.back();
    }
    found->pts.emplace_back(s.n_steps, s.mean_si_sdr);
  }
  double ymin = 1e9, ymax = -1e9;
  int xmax = 1;
  for (auto& sr : series) {
    std::sort(sr.pts.begin(), sr.pts.end());
    for (auto& [x, v] : sr.pts) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
      xmax = std::max(xmax, x);
    }
  }
  if (series.empty()) return "<svg xmlns='http://www.w3.org/2000/svg'/>\n";
  if (ymax - ymin < 1.0) ymax = ymin + 1.0;

  const double W = 640, H = 400, mx = 60, my = 40;
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
     << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};
  auto xmap = [&](double x) { return mx + (W - 2 * mx) * (x - 1) / std::max(1, xmax - 1); };
  auto ymap = [&](double v) { return H - my - (H - 2 * my) * (v - ymin) / (ymax - ymin); };
  os << "<text x='" << W / 2 << "' y='" << H - 8
     << "' font-size='12' text-anchor='middle'>sampling steps</text>\n";
  os << "<text x='14' y='" << H / 2
     << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 " << H / 2
     << ")'>mean SI-SDR (dB)</text>\n";
  for (size_t i = 0; i < series.size(); ++i) {
    const char* col = colors[i % 10];
    os << "<polyline fill='none' stroke='" << col << "' stroke-width='1.5' points='";
    for (const auto& [x, v] : series[i].pts) os << xmap(x) << ',' << ymap(v) << ' ';
    os << "'/>\n";
    for (const auto& [x, v] : series[i].pts)
      os << "<circle cx='" << xmap(x) << "' cy='" << ymap(v) << "' r='2.5' fill='"
         << col << "'/>\n";
    os << "<text x='" << W - mx + 4 << "' y='" << 20 + 14 * i << "' font-size='10' fill='"
       << col << "'>" << series[i].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- CLI wrappers ----

int cmd_verify(const VerifyCmdOptions& opt) {
  const auto results = run_all_verify(opt.seed, opt.corrupt_wy);
  const std::string report = format_verify_report(results);
  std::cout << report;
  if (!opt.out_path.empty()) write_text_file(opt.out_path, report);
  for (const auto& r : results)
    if (!r.pass) return 1;
  return 0;
}

int cmd_synth(const SynthCmdOptions& opt) {
  try {
    ExperimentConfig cfg = ExperimentConfig::from_file(opt.config_path);
    if (opt.has_seed) cfg.run.seed = opt.seed;
    const std::string out = opt.out_dir.empty() ? cfg.run.out_dir : opt.out_dir;
    synth_dataset(cfg, out, cfg.run.seed, cfg.data.items);
    std::cout << "synth: wrote " << cfg.data.items << " pairs to " << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "synth: error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_train(const TrainCmdOptions& opt) {
  try {
    ExperimentConfig cfg = ExperimentConfig::from_file(opt.config_path);
    if (opt.has_seed) cfg.run.seed = opt.seed;
    if (opt.workers > 0) cfg.run.workers = opt.workers;
    if (opt.total_steps > 0) cfg.train.total_steps = opt.total_steps;
    const std::string out = opt.out_dir.empty() ? cfg.run.out_dir : opt.out_dir;
    run_training(cfg, out);
    std::cout << "train: finished " << cfg.train.total_steps << " steps; checkpoints in "
              << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "train: error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_enhance(const EnhanceCmdOptions& opt) {
  try {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
    const ExperimentConfig cfg = ExperimentConfig::from_text(ckpt.config_text);
    const WavData in = read_wav_f32(opt.wav_in);
    if (in.sample_rate != cfg.synth.sample_rate) {
      std::cerr << "enhance: error: sample rate mismatch (wav " << in.sample_rate
                << " Hz, model " << cfg.synth.sample_rate << " Hz)\n";
      return 1;
    }
    const auto out = enhance_waveform(ckpt, in.samples, opt.n_steps, opt.mode, opt.seed);
    write_wav_f32(opt.wav_out, out, in.sample_rate);
    std::cout << "enhance: wrote " << opt.wav_out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "enhance: error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const SweepCmdOptions& opt) {
  try {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
    const ExperimentConfig cfg = ExperimentConfig::from_text(ckpt.config_text);
    const auto items = load_manifest(opt.manifest_path);
    const std::vector<int> steps = opt.steps.empty() ? cfg.eval.steps : opt.steps;
    const std::vector<std::string> modes =
        opt.mode.empty() ? applicable_modes(cfg) : std::vector<std::string>{opt.mode};

    const auto records =
        run_sweep(ckpt, items, steps, modes, opt.seed, opt.timing, opt.workers);
    fs::create_directories(opt.out_dir);
    write_text_file((fs::path(opt.out_dir) / "sweep.csv").string(),
                    eval_records_csv(records));
    const auto agg = aggregate_by_bin(records, cfg.eval.snr_bin_edges);
    write_text_file((fs::path(opt.out_dir) / "summary.json").string(),
                    summaries_json(agg));
    if (opt.plot)
      write_text_file((fs::path(opt.out_dir) / "sweep_plot.svg").string(),
                      sweep_plot_svg(agg));
    std::cout << "sweep: " << records.size() << " cells -> " << opt.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sweep: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sbf
