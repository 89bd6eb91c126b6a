#include "emgstream/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <thread>

#include "emgstream/error.hpp"
#include "emgstream/log.hpp"

namespace emgstream {

namespace {

constexpr uint64_t kSplitStream = 0x73706c6974ULL;    // "split"
constexpr uint64_t kShuffleStream = 0x73687566ULL;    // "shuf"
constexpr uint64_t kDropoutStream = 0x64726f70ULL;    // "drop"
constexpr uint64_t kValidationEpoch = 0xffffffffULL;  // fixed masks for val loss

struct ExampleRef {
  int rec = 0;
  int64_t start = 0;
  int64_t window_id = 0;
  MaskTask task = MaskTask::ActionRecon;
};

std::vector<MaskTask> active_tasks(const TrainConfig& cfg) {
  std::vector<MaskTask> tasks{MaskTask::ActionRecon, MaskTask::EmgRecon, MaskTask::JointRecon};
  if (cfg.include_self_supervised) tasks.push_back(MaskTask::SelfSupervisedEmg);
  return tasks;
}

MaskedExample materialize(const std::vector<Recording>& recs, const ExampleRef& ref,
                          const MaskConfig& mc, uint64_t epoch, int window_len) {
  const Window w = extract_window(recs[static_cast<size_t>(ref.rec)], ref.start, window_len);
  Rng rng = mask_stream(mc, epoch, static_cast<uint64_t>(ref.window_id), ref.task);
  return make_masked_example(w, ref.window_id, ref.task, mc, rng);
}

/// Deterministic parallel map-reduce over a list of examples: fixed chunk
/// per worker, per-worker accumulation in index order, reduction in worker
/// order.
template <typename Fn>
void run_chunked(int threads, int64_t count, const Fn& fn) {
  const int w = std::max(1, threads);
  const int64_t chunk = (count + w - 1) / w;
  std::vector<std::thread> pool;
  for (int i = 1; i < w; ++i) {
    const int64_t lo = i * chunk;
    const int64_t hi = std::min<int64_t>(count, lo + chunk);
    if (lo >= hi) continue;
    pool.emplace_back([&fn, i, lo, hi] { fn(i, lo, hi); });
  }
  fn(0, 0, std::min<int64_t>(count, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::Config, "batch_size must be >= 1");
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (learning_rate <= 0) fail(ErrorKind::Config, "learning_rate must be positive");
  if (warmup_ratio < 0 || warmup_ratio >= 1) fail(ErrorKind::Config, "warmup_ratio must lie in [0, 1)");
  if (weight_decay < 0) fail(ErrorKind::Config, "weight_decay must be >= 0");
  if (val_subject_fraction < 0 || val_subject_fraction >= 1)
    fail(ErrorKind::Config, "val_subject_fraction must lie in [0, 1)");
  if (threads < 1) fail(ErrorKind::Config, "threads must be >= 1");
}

int64_t warmup_steps(const TrainConfig& cfg, int64_t total_steps) {
  return static_cast<int64_t>(cfg.warmup_ratio * static_cast<double>(total_steps));
}

double lr_at_step(const TrainConfig& cfg, int64_t step, int64_t total_steps) {
  const int64_t w = warmup_steps(cfg, total_steps);
  if (w > 0 && step <= w)
    return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(w);
  if (total_steps <= w) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - w);
}

AdamW::AdamW(const ModelParams& shape, const TrainConfig& cfg)
    : m_(ModelParams::zeros_like(shape)), v_(ModelParams::zeros_like(shape)), cfg_(cfg) {}

void AdamW::step(ModelParams& params, ModelParams& grads, double lr) {
  ++t_;
  const double b1 = cfg_.adam_beta1;
  const double b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto pv = param_views(params);
  auto gv = param_views(grads);
  auto mv = param_views(m_);
  auto vv = param_views(v_);
  for (size_t i = 0; i < pv.size(); ++i) {
    if (!pv[i].trainable) continue;
    Eigen::Map<Eigen::ArrayXd> p(pv[i].data, pv[i].size);
    Eigen::Map<Eigen::ArrayXd> g(gv[i].data, gv[i].size);
    Eigen::Map<Eigen::ArrayXd> m(mv[i].data, mv[i].size);
    Eigen::Map<Eigen::ArrayXd> v(vv[i].data, vv[i].size);
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    if (pv[i].decay && cfg_.weight_decay > 0) p -= lr * cfg_.weight_decay * p;
    p -= lr * ((m / c1) / ((v / c2).sqrt() + cfg_.adam_eps));
  }
}

void split_subjects(const std::vector<Recording>& recs, double fraction, uint64_t seed,
                    std::vector<std::string>& train_out, std::vector<std::string>& val_out) {
  std::set<std::string> uniq;
  for (const auto& r : recs) uniq.insert(r.subject_id);
  std::vector<std::string> subjects(uniq.begin(), uniq.end());
  if (subjects.size() < 2)
    fail(ErrorKind::Config, "subject-level validation split needs at least 2 subjects, got " +
                                std::to_string(subjects.size()));
  Rng rng(derive_seed(seed, {kSplitStream}));
  for (size_t i = subjects.size() - 1; i > 0; --i)
    std::swap(subjects[i], subjects[rng.uniform_int(i + 1)]);
  size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(fraction * static_cast<double>(subjects.size())));
  if (n_val >= subjects.size()) n_val = subjects.size() - 1;
  val_out.assign(subjects.begin(), subjects.begin() + static_cast<long>(n_val));
  train_out.assign(subjects.begin() + static_cast<long>(n_val), subjects.end());
  std::sort(train_out.begin(), train_out.end());
  std::sort(val_out.begin(), val_out.end());
}

TrainResult train(const std::vector<Recording>& recs, const ModelHyper& hyper,
                  const TrainConfig& cfg, const MaskConfig& mask_cfg, const WindowSpec& wspec) {
  cfg.validate();
  mask_cfg.validate();
  hyper.validate();
  if (recs.empty()) fail(ErrorKind::Config, "training dataset is empty");
  for (const auto& r : recs) {
    if (r.channels() != hyper.channels)
      fail(ErrorKind::Config, "recording channel count " + std::to_string(r.channels()) +
                                  " != model channels " + std::to_string(hyper.channels));
    if (r.num_classes() != hyper.num_classes)
      fail(ErrorKind::Config, "recording class count != model num_classes");
  }
  if (wspec.window_len != hyper.window_len)
    fail(ErrorKind::Config, "window spec length != model window_len");

  TrainResult result;
  split_subjects(recs, cfg.val_subject_fraction, cfg.seed, result.train_subjects,
                 result.val_subjects);
  auto is_val_subject = [&result](const std::string& s) {
    return std::binary_search(result.val_subjects.begin(), result.val_subjects.end(), s);
  };

  // Stable window ids: enumerate every window of every recording in input
  // order, then partition by split.
  const auto tasks = active_tasks(cfg);
  std::vector<ExampleRef> train_refs, val_refs;
  int64_t next_window_id = 0;
  for (size_t ri = 0; ri < recs.size(); ++ri) {
    const WindowIndex idx = window_starts(recs[ri].length(), wspec);
    if (idx.too_short)
      log_warn("recording " + recs[ri].subject_id + "/" + recs[ri].session_id +
               " shorter than one window; skipped");
    for (int64_t s : idx.starts) {
      const int64_t wid = next_window_id++;
      for (MaskTask task : tasks) {
        ExampleRef ref{static_cast<int>(ri), s, wid, task};
        if (is_val_subject(recs[ri].subject_id))
          val_refs.push_back(ref);
        else
          train_refs.push_back(ref);
      }
    }
  }
  if (train_refs.empty()) fail(ErrorKind::Config, "no training windows after split");
  if (val_refs.empty()) fail(ErrorKind::Config, "validation set is empty");

  ModelParams params = ModelParams::init(hyper, cfg.seed);
  AdamW opt(params, cfg);
  const int64_t n_train = static_cast<int64_t>(train_refs.size());
  const int64_t batches_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = batches_per_epoch * cfg.epochs;

  const int workers = std::max(1, cfg.threads);
  std::vector<ModelParams> worker_grads(static_cast<size_t>(workers),
                                        ModelParams::zeros_like(params));
  std::vector<Tape> worker_tapes(static_cast<size_t>(workers));
  ModelParams grads = ModelParams::zeros_like(params);

  int64_t step = 0;
  double lr_last = 0;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Per-epoch shuffle and mask re-sampling.
    std::vector<ExampleRef> order = train_refs;
    Rng shuffle_rng(derive_seed(cfg.seed, {kShuffleStream, static_cast<uint64_t>(epoch)}));
    for (size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    double ep_loss = 0, ep_mse = 0, ep_ce = 0;
    for (int64_t b = 0; b < batches_per_epoch; ++b) {
      const int64_t lo = b * cfg.batch_size;
      const int64_t hi = std::min<int64_t>(n_train, lo + cfg.batch_size);
      const int64_t bsz = hi - lo;
      const double scale = 1.0 / static_cast<double>(bsz);

      std::vector<std::array<double, 3>> worker_loss(static_cast<size_t>(workers),
                                                     {0.0, 0.0, 0.0});
      for (auto& g : worker_grads) g.set_zero();
      run_chunked(workers, bsz, [&](int w, int64_t i0, int64_t i1) {
        auto& wl = worker_loss[static_cast<size_t>(w)];
        for (int64_t i = i0; i < i1; ++i) {
          const ExampleRef& ref = order[static_cast<size_t>(lo + i)];
          const MaskedExample ex =
              materialize(recs, ref, mask_cfg, static_cast<uint64_t>(epoch), hyper.window_len);
          const uint64_t drop_seed =
              derive_seed(cfg.seed, {kDropoutStream, static_cast<uint64_t>(epoch),
                                     static_cast<uint64_t>(ref.window_id),
                                     static_cast<uint64_t>(ref.task)});
          const LossBreakdown lb =
              example_grad(ex, params, true, drop_seed, scale,
                           worker_grads[static_cast<size_t>(w)],
                           &worker_tapes[static_cast<size_t>(w)]);
          wl[0] += lb.total;
          wl[1] += lb.mse;
          wl[2] += lb.ce;
        }
      });

      grads.set_zero();
      {
        auto gv = param_views(grads);
        for (int w = 0; w < workers; ++w) {
          auto wv = param_views(worker_grads[static_cast<size_t>(w)]);
          for (size_t i = 0; i < gv.size(); ++i)
            Eigen::Map<Eigen::ArrayXd>(gv[i].data, gv[i].size) +=
                Eigen::Map<const Eigen::ArrayXd>(wv[i].data, wv[i].size);
          ep_loss += worker_loss[static_cast<size_t>(w)][0];
          ep_mse += worker_loss[static_cast<size_t>(w)][1];
          ep_ce += worker_loss[static_cast<size_t>(w)][2];
        }
      }

      lr_last = lr_at_step(cfg, step, total_steps);
      opt.step(params, grads, lr_last);
      ++step;
    }

    // Validation with fixed masks so epochs are comparable.
    std::vector<std::array<double, 1>> val_loss(static_cast<size_t>(workers), {0.0});
    run_chunked(workers, static_cast<int64_t>(val_refs.size()),
                [&](int w, int64_t i0, int64_t i1) {
                  for (int64_t i = i0; i < i1; ++i) {
                    const MaskedExample ex = materialize(recs, val_refs[static_cast<size_t>(i)],
                                                         mask_cfg, kValidationEpoch,
                                                         hyper.window_len);
                    val_loss[static_cast<size_t>(w)][0] +=
                        example_loss(ex, params, false, 0).total;
                  }
                });
    double v_loss = 0;
    for (int w = 0; w < workers; ++w) v_loss += val_loss[static_cast<size_t>(w)][0];
    v_loss /= static_cast<double>(val_refs.size());

    EpochLog el;
    el.epoch = epoch;
    el.train_loss = ep_loss / static_cast<double>(n_train);
    el.train_mse = ep_mse / static_cast<double>(n_train);
    el.train_ce = ep_ce / static_cast<double>(n_train);
    el.val_loss = v_loss;
    el.lr_last = lr_last;
    result.log.push_back(el);
    log_info("epoch " + std::to_string(epoch) + ": train_loss=" + std::to_string(el.train_loss) +
             " val_loss=" + std::to_string(v_loss));

    if (v_loss < result.best_val_loss) {
      result.best_val_loss = v_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::string format_train_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,train_mse,train_ce,val_loss,lr_last\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                  e.train_mse, e.train_ce, e.val_loss, e.lr_last);
    out += buf;
  }
  return out;
}

}  // namespace emgstream
