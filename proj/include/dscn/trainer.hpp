#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dscn/augment.hpp"
#include "dscn/image.hpp"
#include "dscn/manifest.hpp"
#include "dscn/model.hpp"
#include "dscn/sgdr.hpp"

namespace dscn {

struct LabeledImage {
  std::string id;
  int label = 0;
  ImageTensor image;
};
using DataSet = std::vector<LabeledImage>;

// Decodes the PNGs referenced by a manifest, optionally restricted to one
// split. Sample id = image path.
DataSet load_image_dataset(const Manifest& manifest, std::optional<Split> filter = std::nullopt);

// Planar [N,3,H,W] batch from HWC images; draws apply augmentation per image
// (draw 0 = identity). labels receives the class indices when non-null.
Tensor<float> make_batch(const DataSet& data, const std::vector<size_t>& indices,
                         const AugmentSpec* aug, const std::vector<int>* draws,
                         std::vector<int>* labels);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};
EvalResult evaluate_model(const Model<float>& model, const DataSet& data, int batch_size);

// ------------------------------------------------------------ LR finder ----

struct LrPoint {
  double lr = 0.0;
  double smoothed_loss = 0.0;
};
struct LrCurve {
  std::vector<LrPoint> points;
};

struct LrFindOptions {
  double lr_start = 1e-7;
  double lr_end = 10.0;
  int iters = 100;
  double smooth_beta = 0.98;
  double diverge_factor = 4.0;
};

// Geometric sweep over a caller-supplied training step; records
// bias-corrected exponentially smoothed loss and aborts once the smoothed
// loss exceeds diverge_factor times its minimum. The callback owns whatever
// state it trains (used directly by tests with stand-in problems).
LrCurve lr_find_core(const LrFindOptions& options,
                     const std::function<double(double lr)>& step_at_lr);

// Model-driven sweep; the model is restored bit-exactly afterwards.
LrCurve lr_find(Model<float>& model, const DataSet& train, int batch_size, uint64_t seed,
                const LrFindOptions& options = {});

// lr at the steepest negative slope of the smoothed curve, divided by 10,
// clamped to [first lr, lr at minimum loss]. Throws NoDescent for a curve
// that never decreases.
double suggest_lr(const LrCurve& curve);

// ------------------------------------------------------ activation cache ---

struct FeatureCache {
  std::unordered_map<std::string, std::vector<float>> features;  // id -> pooled features
  uint64_t body_hash = 0;
};

// EvalMode forward through the frozen body (groups 0-1 must be frozen).
FeatureCache cache_activations(const Model<float>& model, const DataSet& data,
                               int batch_size = 32);
bool cache_valid(const FeatureCache& cache, const Model<float>& model);

// ------------------------------------------------------------- fine-tune ---

struct TrainPlan {
  std::optional<double> head_lr = 0.01;  // nullopt -> run the LR finder
  double disc_factor = 10.0;             // within [3, 10]
  int head_epochs_cached = 2;
  int head_epochs_aug = 3;
  int batch_size = 16;
  uint64_t seed = 0;
  int overfit_patience = 2;  // consecutive cycle-boundary strikes
  int cycle_len = 1;
  int cycle_mult = 2;
  int max_cycles = 10;  // hard cap for the final phase
  bool use_augmentation = true;
  AugmentSpec augment_spec;  // rng_seed derived from seed when left at 0
};

struct EpochStat {
  std::string phase;
  int epoch = 0;  // global epoch index
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};
struct LrTracePoint {
  int64_t step = 0;  // step index within its phase
  std::string phase;
  double lr = 0.0;
};
struct TrainHistory {
  std::vector<EpochStat> epochs;
  std::vector<LrTracePoint> lr_trace;
};

struct FineTuneResult {
  Model<float> model;  // checkpoint with the best validation loss
  TrainHistory history;
  double best_val_loss = 0.0;
};

using PhaseCallback = std::function<void(const std::string& phase, const Model<float>& model)>;

// The nine-step procedure: freeze body, build cache, pick the head rate
// (plan.head_lr or LR finder), train the head on cached activations, then
// with augmentation under one-epoch cosine cycles, unfreeze, set the
// discriminative ladder (top / disc / disc^2), optionally re-run the finder,
// and anneal with doubling cycles until validation loss exceeds its best by
// >1% at overfit_patience consecutive cycle boundaries (or max_cycles).
FineTuneResult fine_tune(Model<float> model, const DataSet& train, const DataSet& val,
                         const TrainPlan& plan, const PhaseCallback& on_phase = nullptr);

// --------------------------------------------------------------- predict ---

// Softmax over EvalMode logits.
std::vector<double> predict(const Model<float>& model, const ImageTensor& image);

// Mean prediction over the identity and k augmented variants (draws 1..k).
std::vector<double> predict_tta(const Model<float>& model, const ImageTensor& image,
                                const AugmentSpec& spec, int k = 4);

void write_history_csv(const TrainHistory& history, const std::string& path);
void write_lr_trace_csv(const TrainHistory& history, const std::string& path);

}  // namespace dscn
