#include "sbf/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sbf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

using KvMap = std::map<std::string, std::string>;  // "section.key" -> value

KvMap parse_kv(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full))
      throw std::invalid_argument("config: duplicate key " + full);
    kv[full] = val;
  }
  return kv;
}

class KvReader {
 public:
  explicit KvReader(KvMap kv) : kv_(std::move(kv)) {}

  bool has(const std::string& k) const { return kv_.count(k) != 0; }

  std::string str(const std::string& k, const std::string& dflt) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    used_.insert(k);
    return it->second;
  }
  double num(const std::string& k, double dflt) {
    auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    used_.insert(k);
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      throw std::invalid_argument("config: " + k + " is not a number: " + it->second);
    }
  }
  int64_t integer(const std::string& k, int64_t dflt) {
    const double v = num(k, static_cast<double>(dflt));
    const int64_t i = static_cast<int64_t>(v);
    if (static_cast<double>(i) != v)
      throw std::invalid_argument("config: " + k + " must be an integer");
    return i;
  }

  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k))
        throw std::invalid_argument("config: unknown key " + k);
  }

 private:
  KvMap kv_;
  std::set<std::string> used_;
};

std::vector<double> parse_num_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw std::invalid_argument(std::string("config: bad number in ") + what);
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string("config: empty list ") + what);
  return out;
}

std::string fmt_num(double v) {
  // shortest round-trippable decimal keeps serialization canonical
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = std::stod(buf);
  if (parsed == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char b2[64];
      std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
      if (std::stod(b2) == v) return b2;
    }
  }
  return buf;
}

const char* to_string(InputRep r) {
  return r == InputRep::compressed_complex_spectrogram ? "compressed_complex_spectrogram"
                                                       : "waveform";
}
const char* to_string(TrainMode m) {
  return m == TrainMode::sb_ufogen ? "sb_ufogen" : "sb_baseline";
}

}  // namespace

void ExperimentConfig::validate() const {
  schedule.validate();
  generator.validate();
  discriminator.validate();
  train.validate();
  synth.validate();
  if (clean_kind != "mix") clean_kind_from_string(clean_kind);
  if (train.n_steps != schedule.n_steps)
    throw std::invalid_argument("config: train.n_steps must equal schedule.n_steps");
  if (eval.steps.empty()) throw std::invalid_argument("config: eval.steps empty");
  for (int s : eval.steps)
    if (s < 1) throw std::invalid_argument("config: eval step counts must be >= 1");
  if (eval.snr_bin_edges.size() < 2)
    throw std::invalid_argument("config: need at least 2 snr bin edges");
  for (size_t i = 1; i < eval.snr_bin_edges.size(); ++i)
    if (!(eval.snr_bin_edges[i] > eval.snr_bin_edges[i - 1]))
      throw std::invalid_argument("config: snr bin edges must increase");
  if (run.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
}

SynthSpec ExperimentConfig::synth_for_item(int64_t index) const {
  SynthSpec s = synth;
  if (clean_kind == "mix") {
    constexpr CleanKind kinds[3] = {CleanKind::harmonic, CleanKind::chirp,
                                    CleanKind::filtered_noise_burst};
    s.clean_kind = kinds[index % 3];
  } else {
    s.clean_kind = clean_kind_from_string(clean_kind);
  }
  return s;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  KvReader kv(parse_kv(text));
  ExperimentConfig c;

  c.run.seed = static_cast<uint64_t>(kv.integer("run.seed", 1));
  c.run.out_dir = kv.str("run.out_dir", "out");
  c.run.workers = static_cast<int>(kv.integer("run.workers", 1));

  c.schedule.c = kv.num("schedule.c", 0.40);
  c.schedule.k = kv.num("schedule.k", 2.6);
  c.schedule.t_eps = kv.num("schedule.t_eps", 0.03);
  c.schedule.n_steps = static_cast<int>(kv.integer("schedule.n_steps", 4));

  c.generator.base_channels = static_cast<int>(kv.integer("generator.base_channels", 32));
  c.generator.depth = static_cast<int>(kv.integer("generator.depth", 3));
  c.generator.time_embed_dim =
      static_cast<int>(kv.integer("generator.time_embed_dim", 64));
  const std::string rep =
      kv.str("generator.input_rep", "compressed_complex_spectrogram");
  if (rep == "compressed_complex_spectrogram")
    c.generator.input_rep = InputRep::compressed_complex_spectrogram;
  else if (rep == "waveform")
    c.generator.input_rep = InputRep::waveform;
  else
    throw std::invalid_argument("config: unknown generator.input_rep " + rep);
  c.generator.stft.fft_size = static_cast<int>(kv.integer("generator.fft_size", 128));
  c.generator.stft.hop = static_cast<int>(kv.integer("generator.hop", 32));
  c.generator.compression.exponent = kv.num("generator.comp_exponent", 0.5);
  c.generator.compression.scale = kv.num("generator.comp_scale", 0.15);

  const std::string scales = kv.str(
      "discriminator.scales", "512:128,256:64,128:32,64:16,32:8");
  c.discriminator.scales.clear();
  {
    std::istringstream in(scales);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      const size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: discriminator.scales expects fft:hop pairs");
      StftConfig sc;
      sc.fft_size = std::stoi(tok.substr(0, colon));
      sc.hop = std::stoi(tok.substr(colon + 1));
      c.discriminator.scales.push_back(sc);
    }
  }
  c.discriminator.channels = static_cast<int>(kv.integer("discriminator.channels", 16));
  c.discriminator.time_embed_dim =
      static_cast<int>(kv.integer("discriminator.time_embed_dim", 32));
  c.discriminator.compression = c.generator.compression;

  const std::string mode = kv.str("train.mode", "sb_ufogen");
  if (mode == "sb_ufogen")
    c.train.mode = TrainMode::sb_ufogen;
  else if (mode == "sb_baseline")
    c.train.mode = TrainMode::sb_baseline;
  else
    throw std::invalid_argument("config: unknown train.mode " + mode);
  c.train.task = task_from_string(kv.str("train.task", "denoise"));
  c.train.lambda_recon = kv.num("train.lambda_recon", 100.0);
  c.train.alpha_l1 = kv.num("train.alpha_l1", 1e-3);
  c.train.mel_weight = kv.num("train.mel_weight", 0.01);
  c.train.n_steps = static_cast<int>(kv.integer("train.n_steps", c.schedule.n_steps));
  c.train.batch_size = static_cast<int>(kv.integer("train.batch_size", 16));
  c.train.lr = kv.num("train.lr", 1e-4);
  c.train.ema_decay = kv.num("train.ema_decay", 0.999);
  c.train.total_steps = kv.integer("train.total_steps", 1000);
  c.train.adv_weight = kv.num("train.adv_weight", 1.0);
  c.train.r1_weight = kv.num("train.r1_weight", 0.0);
  c.train.weight_decay = kv.num("train.weight_decay", 0.0);
  c.train.checkpoint_every = kv.integer("train.checkpoint_every", 2000);
  c.train.log_every = kv.integer("train.log_every", 50);
  c.train.workers = c.run.workers;

  c.synth.sample_rate = static_cast<int>(kv.integer("synth.sample_rate", 8000));
  c.synth.duration = kv.num("synth.duration", 0.128);
  c.clean_kind = kv.str("synth.clean_kind", "mix");
  c.synth.snr_lo_db = kv.num("synth.snr_lo_db", -5.0);
  c.synth.snr_hi_db = kv.num("synth.snr_hi_db", 15.0);
  c.synth.has_rir = kv.integer("synth.has_rir", 0) != 0;
  c.synth.rir.decay_time = kv.num("synth.rir_decay_time", 0.03);
  c.synth.rir.length = static_cast<int>(kv.integer("synth.rir_length", 256));
  c.synth.seed = c.run.seed;

  c.data.train_manifest = kv.str("data.train_manifest", "");
  c.data.items = static_cast<int>(kv.integer("data.items", 512));

  {
    const std::string steps = kv.str("eval.steps", "1,2,4");
    c.eval.steps.clear();
    for (double v : parse_num_list(steps, "eval.steps"))
      c.eval.steps.push_back(static_cast<int>(v));
  }
  c.eval.snr_bin_edges = parse_num_list(
      kv.str("eval.snr_bin_edges", "-5,-2.5,2.5,7.5,12.5,17.5"), "eval.snr_bin_edges");
  c.eval.items = static_cast<int>(kv.integer("eval.items", 64));

  kv.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_text(text);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "[run]\n";
  os << "out_dir = " << run.out_dir << "\n";
  os << "seed = " << run.seed << "\n";
  os << "workers = " << run.workers << "\n";
  os << "\n[schedule]\n";
  os << "c = " << fmt_num(schedule.c) << "\n";
  os << "k = " << fmt_num(schedule.k) << "\n";
  os << "n_steps = " << schedule.n_steps << "\n";
  os << "t_eps = " << fmt_num(schedule.t_eps) << "\n";
  os << "\n[generator]\n";
  os << "base_channels = " << generator.base_channels << "\n";
  os << "comp_exponent = " << fmt_num(generator.compression.exponent) << "\n";
  os << "comp_scale = " << fmt_num(generator.compression.scale) << "\n";
  os << "depth = " << generator.depth << "\n";
  os << "fft_size = " << generator.stft.fft_size << "\n";
  os << "hop = " << generator.stft.hop << "\n";
  os << "input_rep = " << to_string(generator.input_rep) << "\n";
  os << "time_embed_dim = " << generator.time_embed_dim << "\n";
  os << "\n[discriminator]\n";
  os << "channels = " << discriminator.channels << "\n";
  os << "scales = ";
  for (size_t i = 0; i < discriminator.scales.size(); ++i)
    os << (i ? "," : "") << discriminator.scales[i].fft_size << ":"
       << discriminator.scales[i].hop;
  os << "\n";
  os << "time_embed_dim = " << discriminator.time_embed_dim << "\n";
  os << "\n[train]\n";
  os << "adv_weight = " << fmt_num(train.adv_weight) << "\n";
  os << "alpha_l1 = " << fmt_num(train.alpha_l1) << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "checkpoint_every = " << train.checkpoint_every << "\n";
  os << "ema_decay = " << fmt_num(train.ema_decay) << "\n";
  os << "lambda_recon = " << fmt_num(train.lambda_recon) << "\n";
  os << "log_every = " << train.log_every << "\n";
  os << "lr = " << fmt_num(train.lr) << "\n";
  os << "mel_weight = " << fmt_num(train.mel_weight) << "\n";
  os << "mode = " << to_string(train.mode) << "\n";
  os << "n_steps = " << train.n_steps << "\n";
  os << "r1_weight = " << fmt_num(train.r1_weight) << "\n";
  os << "task = " << sbf::to_string(train.task) << "\n";
  os << "total_steps = " << train.total_steps << "\n";
  os << "weight_decay = " << fmt_num(train.weight_decay) << "\n";
  os << "\n[synth]\n";
  os << "clean_kind = " << clean_kind << "\n";
  os << "duration = " << fmt_num(synth.duration) << "\n";
  os << "has_rir = " << (synth.has_rir ? 1 : 0) << "\n";
  os << "rir_decay_time = " << fmt_num(synth.rir.decay_time) << "\n";
  os << "rir_length = " << synth.rir.length << "\n";
  os << "sample_rate = " << synth.sample_rate << "\n";
  os << "snr_hi_db = " << fmt_num(synth.snr_hi_db) << "\n";
  os << "snr_lo_db = " << fmt_num(synth.snr_lo_db) << "\n";
  os << "\n[data]\n";
  os << "items = " << data.items << "\n";
  os << "train_manifest = " << data.train_manifest << "\n";
  os << "\n[eval]\n";
  os << "items = " << eval.items << "\n";
  os << "snr_bin_edges = ";
  for (size_t i = 0; i < eval.snr_bin_edges.size(); ++i)
    os << (i ? "," : "") << fmt_num(eval.snr_bin_edges[i]);
  os << "\n";
  os << "steps = ";
  for (size_t i = 0; i < eval.steps.size(); ++i) os << (i ? "," : "") << eval.steps[i];
  os << "\n";
  return os.str();
}

}  // namespace sbf
