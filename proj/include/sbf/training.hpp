#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sbf/bridge.hpp"
#include "sbf/losses.hpp"
#include "sbf/nets.hpp"
#include "sbf/optim.hpp"
#include "sbf/schedule.hpp"

namespace sbf {

enum class TrainMode { sb_ufogen, sb_baseline };

struct TrainRunConfig {
  double lambda_recon = 100.0;
  double alpha_l1 = 1e-3;
  double mel_weight = 0.01;  // active only for the dereverberation task
  int n_steps = 4;           // N
  int batch_size = 16;
  double lr = 1e-4;
  double ema_decay = 0.999;
  int64_t total_steps = 0;
  TaskKind task = TaskKind::denoise;
  TrainMode mode = TrainMode::sb_ufogen;
  double adv_weight = 1.0;
  double r1_weight = 0.0;  // finite-difference R1-style penalty, off by default
  double weight_decay = 0.0;
  int workers = 1;
  int64_t checkpoint_every = 2000;
  int64_t log_every = 50;

  void validate() const {
    if (lambda_recon < 0 || alpha_l1 < 0 || mel_weight < 0 || adv_weight < 0 ||
        r1_weight < 0)
      throw std::invalid_argument("train: loss weights must be >= 0");
    if (n_steps < 1) throw std::invalid_argument("train: n_steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (workers < 1) throw std::invalid_argument("train: workers must be >= 1");
  }
};

template <typename T>
struct TrainItem {
  TensorT<T> x0;
  TensorT<T> y;
};

struct StepStats {
  int64_t step = 0;
  double d_loss = 0.0;
  double g_adv = 0.0;
  double recon = 0.0;
  double g_grad_norm = 0.0;
  double d_grad_norm = 0.0;
};

namespace train_detail {

// Deterministic fan-out: results are indexed by item, reduction happens in
// item order afterwards, so the worker count never changes the bits.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int w = std::min(workers, n);
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += w) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace train_detail

// Algorithm state for one training run: generator, discriminator, their
// optimizers, and the parameter average.
template <typename T>
class Trainer {
 public:
  Trainer(GeneratorModel<T>& gen, DiscriminatorModel<T>* disc,
          const TrainRunConfig& cfg, const ScheduleParams& sched,
          ReconFn<T> recon, uint64_t seed)
      : gen_(gen), disc_(disc), cfg_(cfg), sched_(sched), recon_(std::move(recon)),
        root_(Rng(seed).derive("train")) {
    cfg_.validate();
    sched_.validate();
    if (sched_.n_steps != cfg_.n_steps)
      throw std::invalid_argument("train: schedule N and config N disagree");
    if (cfg_.mode == TrainMode::sb_ufogen && disc_ == nullptr)
      throw std::invalid_argument("train: sb_ufogen requires a discriminator");

    typename AdamWT<T>::Options gopt;
    gopt.lr = cfg_.lr;
    gopt.weight_decay = cfg_.weight_decay;
    g_opt_ = AdamWT<T>(gopt);
    g_opt_.attach(gen_.params());
    if (disc_) {
      d_opt_ = AdamWT<T>(gopt);
      d_opt_.attach(disc_->params());
    }
    ema_ = EmaT<T>(cfg_.ema_decay);
    ema_.attach(gen_.params());
  }

  const TrainRunConfig& config() const { return cfg_; }
  const ScheduleParams& schedule() const { return sched_; }
  int64_t step_index() const { return step_idx_; }
  EmaT<T>& ema() { return ema_; }
  AdamWT<T>& gen_opt() { return g_opt_; }
  AdamWT<T>& disc_opt() { return d_opt_; }

  StepStats step(const std::vector<TrainItem<T>>& batch) {
    if (batch.empty()) throw std::invalid_argument("train: empty batch");
    return cfg_.mode == TrainMode::sb_ufogen ? ufogen_step(batch)
                                             : baseline_step(batch);
  }

  // Exposed for the gradient-equality check between the adversarial path at
  // adv_weight = 0 and a pure reconstruction step.
  struct GPhaseOut {
    GradsT<T> grads;
    double g_adv = 0.0;
    double recon = 0.0;
  };
  GPhaseOut g_phase(const std::vector<TrainItem<T>>& batch, int64_t step_idx) {
    std::vector<GradsT<T>> grads(batch.size());
    std::vector<double> adv(batch.size(), 0.0), rec(batch.size(), 0.0);
    train_detail::parallel_for(
        static_cast<int>(batch.size()), cfg_.workers, [&](int ex) {
          g_phase_example(batch[static_cast<size_t>(ex)], step_idx, ex,
                          grads[static_cast<size_t>(ex)],
                          adv[static_cast<size_t>(ex)], rec[static_cast<size_t>(ex)]);
        });
    GPhaseOut out;
    for (size_t ex = 0; ex < batch.size(); ++ex) {
      accumulate_grads(out.grads, grads[ex]);
      out.g_adv += adv[ex];
      out.recon += rec[ex];
    }
    const T inv = static_cast<T>(1.0 / batch.size());
    scale_grads(out.grads, inv);
    out.g_adv /= static_cast<double>(batch.size());
    out.recon /= static_cast<double>(batch.size());
    return out;
  }

  struct PathSample {
    int n = 1;
    double t_n = 1.0, t_nm1 = 0.0;
    TensorT<T> x_tnm1, x_tn;
  };

  // Algorithm-1 time and state draws for one example; public so properties
  // of the time sampling are directly observable.
  PathSample sample_real_path(const TrainItem<T>& item, int64_t step, int ex) const {
    PathSample ps;
    Rng rng = root_.derive("path", static_cast<uint64_t>(step), static_cast<uint64_t>(ex));
    ps.n = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg_.n_steps)));
    const auto grid = sched_.grid_times();
    ps.t_n = grid[static_cast<size_t>(ps.n)];
    ps.t_nm1 = grid[static_cast<size_t>(ps.n) - 1];
    ps.x_tnm1 = marginal_sample(item.x0, item.y, ps.t_nm1, sched_, rng);
    ps.x_tn = transition_sample(ps.x_tnm1, item.y, ps.t_nm1, ps.t_n, sched_, rng);
    return ps;
  }

 private:
  void d_phase_example(const TrainItem<T>& item, int64_t step, int ex,
                       GradsT<T>& grads, double& loss_out) {
    const PathSample ps = sample_real_path(item, step, ex);
    // fake sample for the discriminator: generator runs without gradients
    Rng rng = root_.derive("fake_d", static_cast<uint64_t>(step), static_cast<uint64_t>(ex));
    const TensorT<T> x0_hat = gen_.infer(ps.x_tn, item.y, ps.t_n);
    const TensorT<T> x_fake = marginal_sample(x0_hat, item.y, ps.t_nm1, sched_, rng);

    TapeT<T> tape;
    LeavesT<T> leaves(tape, disc_->params(), true);
    auto real_logits =
        disc_->forward(tape, leaves, ops::constant(tape, ps.x_tnm1), item.y, ps.t_nm1);
    auto fake_logits =
        disc_->forward(tape, leaves, ops::constant(tape, x_fake), item.y, ps.t_nm1);
    auto loss = d_loss(real_logits, fake_logits);

    if (cfg_.r1_weight > 0.0) {
      // finite-difference sharpness penalty around the real sample
      const T delta = static_cast<T>(1e-2);
      TensorT<T> bumped = ps.x_tnm1;
      Rng r1rng = root_.derive("r1", static_cast<uint64_t>(step), static_cast<uint64_t>(ex));
      for (int64_t i = 0; i < bumped.numel(); ++i)
        bumped[i] += delta * static_cast<T>(r1rng.normal());
      auto bumped_logits =
          disc_->forward(tape, leaves, ops::constant(tape, bumped), item.y, ps.t_nm1);
      VarT<T> pen;
      for (size_t s = 0; s < real_logits.size(); ++s) {
        auto d = ops::sub(bumped_logits[s], real_logits[s]);
        auto term = ops::mean(ops::square(d));
        pen = s == 0 ? term : ops::add(pen, term);
      }
      pen = ops::scale(pen, static_cast<T>(cfg_.r1_weight /
                                           (delta * delta * real_logits.size())));
      loss = ops::add(loss, pen);
    }

    loss_out = static_cast<double>(loss.value()[0]);
    if (tape.requires_grad(loss.id)) {
      tape.backward(loss.id);
      grads = leaves.collect_grads();
    } else {
      // a parameterless discriminator (test double) has nothing to update
      grads = leaves.collect_grads();
    }
  }

  void g_phase_example(const TrainItem<T>& item, int64_t step, int ex,
                       GradsT<T>& grads, double& adv_out, double& recon_out) {
    const PathSample ps = sample_real_path(item, step, ex);
    Rng rng = root_.derive("fake_g", static_cast<uint64_t>(step), static_cast<uint64_t>(ex));

    TapeT<T> tape;
    LeavesT<T> g_leaves(tape, gen_.params(), true);
    auto x0_hat = gen_.forward(tape, g_leaves, ps.x_tn, item.y, ps.t_n);

    VarT<T> adv;
    bool has_adv = false;
    if (cfg_.adv_weight > 0.0 && disc_) {
      // re-noise the clean estimate through the forward marginal (UFOGen)
      const BridgeCoefficients bc = marginal_coeffs(ps.t_nm1, sched_);
      TensorT<T> offset(item.y.shape);
      for (int64_t i = 0; i < offset.numel(); ++i)
        offset[i] = static_cast<T>(bc.w_y) * item.y[i] +
                    static_cast<T>(bc.sigma_x) *
                        (bc.sigma_x == 0.0 ? T(0) : static_cast<T>(rng.normal()));
      auto x_fake = ops::add(ops::scale(x0_hat, static_cast<T>(bc.w_x)),
                             ops::constant(tape, offset));
      LeavesT<T> d_leaves(tape, disc_->params(), false);
      auto fake_logits = disc_->forward(tape, d_leaves, x_fake, item.y, ps.t_nm1);
      adv = g_adv_loss(fake_logits);
      has_adv = true;
    }

    auto rec = recon_(tape, x0_hat, item.x0);
    auto loss = ops::scale(rec, static_cast<T>(cfg_.lambda_recon));
    if (has_adv) loss = ops::add(loss, ops::scale(adv, static_cast<T>(cfg_.adv_weight)));

    adv_out = has_adv ? static_cast<double>(adv.value()[0]) : 0.0;
    recon_out = static_cast<double>(rec.value()[0]);
    tape.backward(loss.id);
    grads = g_leaves.collect_grads();
  }

  StepStats ufogen_step(const std::vector<TrainItem<T>>& batch) {
    StepStats st;
    st.step = step_idx_;
    const int B = static_cast<int>(batch.size());

    // discriminator update first, per the alternating scheme
    {
      std::vector<GradsT<T>> grads(batch.size());
      std::vector<double> losses(batch.size(), 0.0);
      train_detail::parallel_for(B, cfg_.workers, [&](int ex) {
        d_phase_example(batch[static_cast<size_t>(ex)], step_idx_, ex,
                        grads[static_cast<size_t>(ex)], losses[static_cast<size_t>(ex)]);
      });
      GradsT<T> total;
      for (int ex = 0; ex < B; ++ex) {
        accumulate_grads(total, grads[static_cast<size_t>(ex)]);
        st.d_loss += losses[static_cast<size_t>(ex)];
      }
      scale_grads(total, static_cast<T>(1.0 / B));
      st.d_loss /= B;
      st.d_grad_norm = grad_norm(total);
      check_finite(st, "discriminator");
      d_opt_.step(disc_->params(), total);
    }

    // generator update with a freshly sampled fake path
    {
      GPhaseOut out = g_phase(batch, step_idx_);
      st.g_adv = out.g_adv;
      st.recon = out.recon;
      st.g_grad_norm = grad_norm(out.grads);
      check_finite(st, "generator");
      g_opt_.step(gen_.params(), out.grads);
      ema_.update(gen_.params());
    }

    ++step_idx_;
    return st;
  }

  StepStats baseline_step(const std::vector<TrainItem<T>>& batch) {
    StepStats st;
    st.step = step_idx_;
    const int B = static_cast<int>(batch.size());
    std::vector<GradsT<T>> grads(batch.size());
    std::vector<double> losses(batch.size(), 0.0);
    train_detail::parallel_for(B, cfg_.workers, [&](int ex) {
      const TrainItem<T>& item = batch[static_cast<size_t>(ex)];
      Rng rng = root_.derive("baseline", static_cast<uint64_t>(step_idx_),
                             static_cast<uint64_t>(ex));
      // data-prediction training on marginal samples over continuous time
      const double t = sched_.t_eps + (1.0 - sched_.t_eps) * rng.uniform();
      const TensorT<T> x_t = marginal_sample(item.x0, item.y, t, sched_, rng);
      TapeT<T> tape;
      LeavesT<T> leaves(tape, gen_.params(), true);
      auto x0_hat = gen_.forward(tape, leaves, x_t, item.y, t);
      auto loss = recon_(tape, x0_hat, item.x0);
      losses[static_cast<size_t>(ex)] = static_cast<double>(loss.value()[0]);
      tape.backward(loss.id);
      grads[static_cast<size_t>(ex)] = leaves.collect_grads();
    });
    GradsT<T> total;
    for (int ex = 0; ex < B; ++ex) {
      accumulate_grads(total, grads[static_cast<size_t>(ex)]);
      st.recon += losses[static_cast<size_t>(ex)];
    }
    scale_grads(total, static_cast<T>(1.0 / B));
    st.recon /= B;
    st.g_grad_norm = grad_norm(total);
    check_finite(st, "baseline");
    g_opt_.step(gen_.params(), total);
    ema_.update(gen_.params());
    ++step_idx_;
    return st;
  }

  void check_finite(const StepStats& st, const char* phase) const {
    const bool ok = std::isfinite(st.d_loss) && std::isfinite(st.g_adv) &&
                    std::isfinite(st.recon) && std::isfinite(st.g_grad_norm) &&
                    std::isfinite(st.d_grad_norm);
    if (!ok) {
      std::ostringstream os;
      os << "train: non-finite loss in " << phase << " at step " << st.step
         << " (d_loss=" << st.d_loss << ", g_adv=" << st.g_adv
         << ", recon=" << st.recon << ", g_grad=" << st.g_grad_norm
         << ", d_grad=" << st.d_grad_norm << ")";
      throw std::runtime_error(os.str());
    }
  }

  GeneratorModel<T>& gen_;
  DiscriminatorModel<T>* disc_;
  TrainRunConfig cfg_;
  ScheduleParams sched_;
  ReconFn<T> recon_;
  Rng root_;
  AdamWT<T> g_opt_, d_opt_;
  EmaT<T> ema_;
  int64_t step_idx_ = 0;
};

// Formats one training-log record; the log is line-delimited key=value text.
inline std::string format_log_line(const StepStats& st, double wall_ms) {
  std::ostringstream os;
  os.precision(10);
  os << "step=" << st.step << " d_loss=" << st.d_loss << " g_adv=" << st.g_adv
     << " recon=" << st.recon << " g_grad=" << st.g_grad_norm
     << " d_grad=" << st.d_grad_norm << " wall_ms=" << wall_ms;
  return os.str();
}

}  // namespace sbf
