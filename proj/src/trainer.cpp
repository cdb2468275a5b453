#include "dscn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dscn/rng.hpp"

namespace dscn {

namespace {

std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0x3eaULL + static_cast<uint64_t>(epoch)));
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.next_u64() % i]);
  return idx;
}

void hwc_to_chw(const ImageTensor& img, float* dst) {
  const int h = img.height, w = img.width;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dst[(static_cast<size_t>(c) * h + y) * w + x] = img.at(y, x, c);
}

}  // namespace

DataSet load_image_dataset(const Manifest& manifest, std::optional<Split> filter) {
  DataSet data;
  for (const SampleRecord& r : manifest.records) {
    if (filter && r.split != *filter) continue;
    LabeledImage li;
    li.id = r.path;
    li.label = r.label == Label::kDepressed ? 1 : 0;
    li.image = read_png(r.path);
    data.push_back(std::move(li));
  }
  return data;
}

Tensor<float> make_batch(const DataSet& data, const std::vector<size_t>& indices,
                         const AugmentSpec* aug, const std::vector<int>* draws,
                         std::vector<int>* labels) {
  if (indices.empty()) throw EmptySplit("empty batch");
  const int h = data[indices[0]].image.height;
  const int w = data[indices[0]].image.width;
  Tensor<float> batch({static_cast<int>(indices.size()), 3, h, w});
  if (labels) labels->clear();
  for (size_t i = 0; i < indices.size(); ++i) {
    const LabeledImage& li = data[indices[i]];
    if (li.image.height != h || li.image.width != w)
      throw ShapeMismatch("images in one batch must share dimensions");
    float* dst = batch.ptr() + i * 3 * static_cast<size_t>(h) * w;
    if (aug && draws) {
      ImageTensor a = augment(li.image, *aug, (*draws)[i]);
      hwc_to_chw(a, dst);
    } else {
      hwc_to_chw(li.image, dst);
    }
    if (labels) labels->push_back(li.label);
  }
  return batch;
}

EvalResult evaluate_model(const Model<float>& model, const DataSet& data, int batch_size) {
  if (data.empty()) throw EmptySplit("cannot evaluate empty set");
  double loss_sum = 0.0;
  int64_t correct = 0;
  for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
    std::vector<size_t> idx;
    for (size_t i = start; i < std::min(data.size(), start + static_cast<size_t>(batch_size));
         ++i)
      idx.push_back(i);
    std::vector<int> labels;
    Tensor<float> batch = make_batch(data, idx, nullptr, nullptr, &labels);
    Tensor<float> logits = model.forward_eval(batch);
    loss_sum += ops::softmax_cross_entropy<float>(logits, labels, nullptr) *
                static_cast<double>(idx.size());
    const int c = logits.dim(1);
    for (size_t i = 0; i < idx.size(); ++i) {
      const float* z = logits.ptr() + i * static_cast<size_t>(c);
      int arg = 0;
      for (int j = 1; j < c; ++j)
        if (z[j] > z[arg]) arg = j;
      if (arg == labels[i]) ++correct;
    }
  }
  EvalResult res;
  res.loss = loss_sum / static_cast<double>(data.size());
  res.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return res;
}

// ------------------------------------------------------------ LR finder ----

LrCurve lr_find_core(const LrFindOptions& options,
                     const std::function<double(double lr)>& step_at_lr) {
  if (options.iters < 2) throw std::invalid_argument("lr_find needs >= 2 iterations");
  LrCurve curve;
  double ema = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.iters; ++k) {
    double lr = options.lr_start *
                std::pow(options.lr_end / options.lr_start,
                         static_cast<double>(k) / static_cast<double>(options.iters - 1));
    double loss = step_at_lr(lr);
    if (!std::isfinite(loss)) {
      if (k == 0) throw DivergedImmediately("loss non-finite on the first step");
      break;
    }
    ema = options.smooth_beta * ema + (1.0 - options.smooth_beta) * loss;
    double smoothed = ema / (1.0 - std::pow(options.smooth_beta, k + 1));
    curve.points.push_back({lr, smoothed});
    best = std::min(best, smoothed);
    if (smoothed > options.diverge_factor * best) break;
  }
  return curve;
}

LrCurve lr_find(Model<float>& model, const DataSet& train, int batch_size, uint64_t seed,
                const LrFindOptions& options) {
  if (train.empty()) throw EmptySplit("lr_find needs training data");
  const Model<float> snapshot = model;  // full state, restored on every exit
  SgdOptimizer<float> opt;

  size_t cursor = 0;
  int epoch = 0;
  std::vector<size_t> order = epoch_order(train.size(), seed, epoch);
  auto next_batch = [&](std::vector<size_t>& idx) {
    idx.clear();
    for (int i = 0; i < batch_size; ++i) {
      if (cursor >= order.size()) {
        order = epoch_order(train.size(), seed, ++epoch);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
  };

  LrCurve curve;
  try {
    curve = lr_find_core(options, [&](double lr) {
      std::vector<size_t> idx;
      next_batch(idx);
      std::vector<int> labels;
      Tensor<float> batch = make_batch(train, idx, nullptr, nullptr, &labels);
      double loss = model.loss_and_grads(batch, labels);
      opt.step(model, lr, 0.9);
      return loss;
    });
  } catch (...) {
    model = snapshot;
    throw;
  }
  model = snapshot;
  return curve;
}

double suggest_lr(const LrCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 10) throw std::invalid_argument("lr curve needs >= 10 points");
  int steepest = -1;
  double steepest_drop = 0.0;
  size_t min_i = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double drop = pts[i + 1].smoothed_loss - pts[i].smoothed_loss;
    if (drop < steepest_drop) {
      steepest_drop = drop;
      steepest = static_cast<int>(i);
    }
    if (pts[i].smoothed_loss < pts[min_i].smoothed_loss) min_i = i;
  }
  if (pts.back().smoothed_loss < pts[min_i].smoothed_loss) min_i = pts.size() - 1;
  if (steepest < 0) throw NoDescent("smoothed loss never decreases");
  double lr = pts[static_cast<size_t>(steepest)].lr / 10.0;
  return std::clamp(lr, pts.front().lr, pts[min_i].lr);
}

// ------------------------------------------------------ activation cache ---

FeatureCache cache_activations(const Model<float>& model, const DataSet& data, int batch_size) {
  if (!model.groups()[0].frozen || !model.groups()[1].frozen)
    throw BodyNotFrozen("groups 0-1 must be frozen before caching activations");
  if (data.empty()) throw EmptySplit("cannot cache an empty set");

  FeatureCache cache;
  cache.body_hash = body_digest(model);
  const int c = model.feature_dim();
  for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
    std::vector<size_t> idx;
    for (size_t i = start; i < std::min(data.size(), start + static_cast<size_t>(batch_size));
         ++i)
      idx.push_back(i);
    Tensor<float> batch = make_batch(data, idx, nullptr, nullptr, nullptr);
    Tensor<float> feats = model.features_eval(batch);
    for (size_t i = 0; i < idx.size(); ++i) {
      const float* f = feats.ptr() + i * static_cast<size_t>(c);
      cache.features[data[idx[i]].id] = std::vector<float>(f, f + c);
    }
  }
  return cache;
}

bool cache_valid(const FeatureCache& cache, const Model<float>& model) {
  return cache.body_hash == body_digest(model);
}

// ------------------------------------------------------------- fine-tune ---

namespace {

struct ValTracker {
  double best = std::numeric_limits<double>::infinity();
  Model<float> best_model;
  explicit ValTracker(const Model<float>& m) : best_model(m) {}
  void observe(double val_loss, const Model<float>& m) {
    if (val_loss < best) {
      best = val_loss;
      best_model = m;
    }
  }
};

}  // namespace

FineTuneResult fine_tune(Model<float> model, const DataSet& train, const DataSet& val,
                         const TrainPlan& plan, const PhaseCallback& on_phase) {
  if (train.empty() || val.empty()) throw EmptySplit("fine_tune needs non-empty train and val");
  if (plan.disc_factor < 3.0 || plan.disc_factor > 10.0)
    throw std::invalid_argument("disc_factor must lie in [3, 10]");
  if (plan.batch_size < 1 || plan.cycle_len < 1 || plan.cycle_mult < 1 || plan.max_cycles < 1 ||
      plan.overfit_patience < 1)
    throw std::invalid_argument("invalid train plan");

  AugmentSpec aug = plan.augment_spec;
  if (aug.rng_seed == 0) aug.rng_seed = mix_seed(plan.seed, 0xa06ULL);

  TrainHistory history;
  ValTracker tracker(model);
  SgdOptimizer<float> opt;
  const int steps_per_epoch =
      static_cast<int>((train.size() + static_cast<size_t>(plan.batch_size) - 1) /
                       static_cast<size_t>(plan.batch_size));
  int global_epoch = 0;

  auto emit = [&](const std::string& phase) {
    if (on_phase) on_phase(phase, model);
  };

  auto record_epoch = [&](const std::string& phase, double train_loss) {
    EvalResult ev = evaluate_model(model, val, plan.batch_size);
    history.epochs.push_back({phase, global_epoch, train_loss, ev.loss, ev.accuracy});
    tracker.observe(ev.loss, model);
    ++global_epoch;
    return ev.loss;
  };

  // steps 3 + 1: freeze the body, then cache activations of unaugmented data
  model.set_frozen({0, 1}, true);
  emit("freeze_body");
  FeatureCache cache = cache_activations(model, train, plan.batch_size);

  // step 2: head learning rate (plan override or finder)
  double top_lr;
  if (plan.head_lr) {
    top_lr = *plan.head_lr;
  } else {
    LrCurve curve = lr_find(model, train, plan.batch_size, mix_seed(plan.seed, 0x1f1ULL));
    top_lr = suggest_lr(curve);
  }
  emit("head_lr_chosen");

  // step 4: head epochs on the cache, constant lr
  const int feat_dim = model.feature_dim();
  for (int e = 0; e < plan.head_epochs_cached; ++e) {
    std::vector<size_t> order = epoch_order(train.size(), plan.seed, global_epoch);
    double loss_sum = 0.0;
    int64_t step = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(plan.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(plan.batch_size));
      Tensor<float> feats({static_cast<int>(stop - start), feat_dim});
      std::vector<int> labels;
      for (size_t i = start; i < stop; ++i) {
        const LabeledImage& li = train[order[i]];
        const std::vector<float>& f = cache.features.at(li.id);
        std::copy(f.begin(), f.end(), feats.ptr() + (i - start) * static_cast<size_t>(feat_dim));
        labels.push_back(li.label);
      }
      loss_sum += model.head_loss_and_grads(feats, labels) * static_cast<double>(stop - start);
      opt.step(model, top_lr, 0.9);
      history.lr_trace.push_back({step++, "head_cached", top_lr});
    }
    record_epoch("head_cached", loss_sum / static_cast<double>(train.size()));
  }
  emit("head_cached_done");

  // step 5: head epochs with augmentation, cycle_len = 1
  opt.reset();
  SgdrSchedule sched5 = SgdrSchedule::from_lr_max(top_lr, 1, 1, steps_per_epoch);
  int64_t step5 = 0;
  for (int e = 0; e < plan.head_epochs_aug; ++e) {
    std::vector<size_t> order = epoch_order(train.size(), plan.seed, global_epoch);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(plan.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(plan.batch_size));
      std::vector<size_t> idx(order.begin() + static_cast<long>(start),
                              order.begin() + static_cast<long>(stop));
      std::vector<int> draws(idx.size(), 0);
      if (plan.use_augmentation)
        for (size_t i = 0; i < idx.size(); ++i)
          draws[i] = 1 + global_epoch * static_cast<int>(train.size()) + static_cast<int>(idx[i]);
      std::vector<int> labels;
      Tensor<float> batch = make_batch(train, idx, &aug, &draws, &labels);
      double lr = sgdr_lr(step5, sched5);
      loss_sum += model.loss_and_grads(batch, labels) * static_cast<double>(idx.size());
      opt.step(model, lr, 0.9);
      history.lr_trace.push_back({step5++, "head_aug", lr});
    }
    record_epoch("head_aug", loss_sum / static_cast<double>(train.size()));
  }
  emit("body_frozen_end");

  // step 6: unfreeze everything
  model.set_frozen({0, 1}, false);
  // step 7: discriminative ladder
  const double d = plan.disc_factor;
  model.set_group_lr_scales(1.0 / (d * d), 1.0 / d, 1.0);
  emit("unfrozen");

  // step 8: re-run the finder on the unfrozen model (skipped under override)
  double top2 = top_lr;
  if (!plan.head_lr) {
    LrCurve curve = lr_find(model, train, plan.batch_size, mix_seed(plan.seed, 0x8f8ULL));
    top2 = suggest_lr(curve);
  }

  // step 9: SGDR with doubling cycles until overfit or the cycle cap
  opt.reset();
  SgdrSchedule sched9 =
      SgdrSchedule::from_lr_max(top2, plan.cycle_len, plan.cycle_mult, steps_per_epoch);
  int64_t step9 = 0;
  int cycle = 0;
  int strikes = 0;
  int epoch_in_phase = 0;
  while (cycle < plan.max_cycles) {
    std::vector<size_t> order = epoch_order(train.size(), plan.seed, global_epoch);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(plan.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(plan.batch_size));
      std::vector<size_t> idx(order.begin() + static_cast<long>(start),
                              order.begin() + static_cast<long>(stop));
      std::vector<int> draws(idx.size(), 0);
      if (plan.use_augmentation)
        for (size_t i = 0; i < idx.size(); ++i)
          draws[i] = 1 + global_epoch * static_cast<int>(train.size()) + static_cast<int>(idx[i]);
      std::vector<int> labels;
      Tensor<float> batch = make_batch(train, idx, &aug, &draws, &labels);
      double lr = sgdr_lr(step9, sched9);
      loss_sum += model.loss_and_grads(batch, labels) * static_cast<double>(idx.size());
      opt.step(model, lr, 0.9);
      history.lr_trace.push_back({step9++, "full_sgdr", lr});
    }
    double val_loss = record_epoch("full_sgdr", loss_sum / static_cast<double>(train.size()));
    ++epoch_in_phase;

    double boundary = sgdr_cycle_start_epoch(cycle + 1, sched9);
    if (static_cast<double>(epoch_in_phase) >= boundary) {
      // overfit rule: val loss > best by more than 1% at consecutive boundaries
      if (val_loss > tracker.best * 1.01)
        ++strikes;
      else
        strikes = 0;
      ++cycle;
      if (strikes >= plan.overfit_patience) break;
    }
  }
  emit("done");

  FineTuneResult result{std::move(tracker.best_model), std::move(history), tracker.best};
  return result;
}

// --------------------------------------------------------------- predict ---

std::vector<double> predict(const Model<float>& model, const ImageTensor& image) {
  Tensor<float> batch({1, 3, image.height, image.width});
  hwc_to_chw(image, batch.ptr());
  Tensor<float> logits = model.forward_eval(batch);
  return ops::softmax_row(logits, 0);
}

std::vector<double> predict_tta(const Model<float>& model, const ImageTensor& image,
                                const AugmentSpec& spec, int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  std::vector<double> mean;
  for (int draw = 0; draw <= k; ++draw) {
    std::vector<double> p = predict(model, draw == 0 ? image : augment(image, spec, draw));
    if (mean.empty()) mean.assign(p.size(), 0.0);
    for (size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(k + 1);
  return mean;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "epoch,phase,train_loss,val_loss,val_acc\n";
  char buf[160];
  for (const EpochStat& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.9g,%.9g,%.9g\n", e.epoch, e.phase.c_str(),
                  e.train_loss, e.val_loss, e.val_accuracy);
    f << buf;
  }
  if (!f) throw IoError("short write to " + path);
}

void write_lr_trace_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "step,phase,lr\n";
  char buf[128];
  for (const LrTracePoint& p : history.lr_trace) {
    std::snprintf(buf, sizeof(buf), "%lld,%s,%.12g\n", static_cast<long long>(p.step),
                  p.phase.c_str(), p.lr);
    f << buf;
  }
  if (!f) throw IoError("short write to " + path);
}

}  // namespace dscn
