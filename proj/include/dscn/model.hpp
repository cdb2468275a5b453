#pragma once

#include <array>
#include <string>
#include <vector>

#include "dscn/nn_ops.hpp"
#include "dscn/rng.hpp"
#include "dscn/tensor.hpp"

namespace dscn {

// Compact residual classifier: 3x3 stem (stride 2) -> stages of basic blocks
// (first block of each stage stride 2, projection shortcut) -> global average
// pool -> linear head. Parameters fall into three learning-rate groups:
//   group 0: stem + stage 1, group 1: remaining stages, group 2: head.
struct ModelConfig {
  std::vector<int> stage_blocks{2, 2, 2};
  std::vector<int> stage_channels{16, 32, 64};
  int num_classes = 2;
  int input_size = 224;
  std::string arch_tag = "mini-18";
};

struct ParamGroup {
  int index = 0;
  bool frozen = false;
  double lr_scale = 1.0;
};

enum class Mode { kTrain, kEval };

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

template <typename T>
class Model {
 public:
  // One named tensor: trainable parameter or persistent buffer (BN running
  // statistics). Frozen parameters never receive gradient entries.
  struct Slot {
    std::string name;
    int group = 0;
    bool is_param = true;
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
  };

  static Model build(const ModelConfig& config, uint64_t seed);

  // TrainMode: unfrozen BN layers normalize with batch statistics and update
  // running stats; frozen layers behave as in EvalMode (stats untouched).
  Tensor<T> forward(const Tensor<T>& batch, Mode mode) {
    return run_network(batch, mode == Mode::kTrain, nullptr);
  }
  // Pure function of (parameters, input); safe to share across threads.
  Tensor<T> forward_eval(const Tensor<T>& batch) const {
    return const_cast<Model*>(this)->run_network(batch, false, nullptr);
  }
  // Frozen-body features: EvalMode body forward + global average pool.
  Tensor<T> features_eval(const Tensor<T>& batch) const {
    return const_cast<Model*>(this)->run_body(batch, false, nullptr);
  }
  Tensor<T> head_forward(const Tensor<T>& features) const {
    return ops::linear_forward(features, slots_[head_w_].value, slots_[head_b_].value);
  }

  // Mean softmax cross-entropy; fills gradients for unfrozen parameters only.
  double loss_and_grads(const Tensor<T>& batch, const std::vector<int>& labels);
  // Head-only variant on pooled features (activation-cache training path).
  double head_loss_and_grads(const Tensor<T>& features, const std::vector<int>& labels);

  void set_frozen(const std::vector<int>& group_indices, bool frozen);
  void set_group_lr_scales(double g0, double g1, double g2) {
    groups_[0].lr_scale = g0;
    groups_[1].lr_scale = g1;
    groups_[2].lr_scale = g2;
  }

  const ModelConfig& config() const { return config_; }
  const std::array<ParamGroup, 3>& groups() const { return groups_; }
  std::array<ParamGroup, 3>& groups() { return groups_; }
  const std::vector<Slot>& slots() const { return slots_; }
  std::vector<Slot>& slots() { return slots_; }
  int feature_dim() const { return config_.stage_channels.back(); }

  size_t num_trainable_params() const {
    size_t n = 0;
    for (const Slot& s : slots_)
      if (s.is_param) n += s.value.numel();
    return n;
  }

 private:
  struct ConvDesc {
    int w = -1;
    int k = 3, stride = 1, pad = 1;
  };
  struct BnDesc {
    int gamma = -1, beta = -1, rmean = -1, rvar = -1;
    int group = 0;
  };
  struct BlockDesc {
    ConvDesc c1, c2;
    BnDesc b1, b2;
    bool has_proj = false;
    ConvDesc pc;
    BnDesc pb;
    int group = 0;
  };

  struct BlockTrace {
    ops::BnSaved<T> bn1, bn2, pbn;
    Tensor<T> a1;   // after first relu (input of conv2)
    Tensor<T> out;  // after add + relu
  };
  struct Trace {
    ops::BnSaved<T> stem_bn;
    Tensor<T> stem_out;
    std::vector<std::vector<BlockTrace>> blocks;
    Tensor<T> features;
  };

  int add_param(const std::string& name, std::vector<int> shape, int group);
  int add_buffer(const std::string& name, std::vector<int> shape, int group, T fill);
  void he_init(Tensor<T>& w, int fan_in, Rng& rng);

  Tensor<T> bn_apply(const Tensor<T>& x, const BnDesc& bn, bool train, ops::BnSaved<T>* saved);
  Tensor<T> bn_back(const Tensor<T>& dy, const BnDesc& bn, const ops::BnSaved<T>& saved,
                    bool want_param_grads);
  Tensor<T> block_forward(const Tensor<T>& in, const BlockDesc& blk, bool train, BlockTrace* bt);
  Tensor<T> block_backward(Tensor<T>& d, const Tensor<T>& in, const BlockDesc& blk,
                           BlockTrace& bt, bool want_param_grads, bool propagate);
  Tensor<T> run_body(const Tensor<T>& x, bool train, Trace* trace);
  Tensor<T> run_network(const Tensor<T>& x, bool train, Trace* trace);
  void backward(const Tensor<T>& input, Trace& trace, const Tensor<T>& dlogits);
  void prepare_grads();

  ModelConfig config_;
  std::array<ParamGroup, 3> groups_{{{0, false, 1.0}, {1, false, 1.0}, {2, false, 1.0}}};
  std::vector<Slot> slots_;
  ConvDesc stem_;
  BnDesc stem_bn_;
  std::vector<std::vector<BlockDesc>> stages_;
  int head_w_ = -1, head_b_ = -1;
};

// ---------------------------------------------------------------------------

template <typename T>
int Model<T>::add_param(const std::string& name, std::vector<int> shape, int group) {
  Slot s;
  s.name = name;
  s.group = group;
  s.is_param = true;
  s.value = Tensor<T>(std::move(shape));
  slots_.push_back(std::move(s));
  return static_cast<int>(slots_.size() - 1);
}

template <typename T>
int Model<T>::add_buffer(const std::string& name, std::vector<int> shape, int group, T fill) {
  Slot s;
  s.name = name;
  s.group = group;
  s.is_param = false;
  s.value = Tensor<T>(std::move(shape));
  std::fill(s.value.data.begin(), s.value.data.end(), fill);
  slots_.push_back(std::move(s));
  return static_cast<int>(slots_.size() - 1);
}

template <typename T>
void Model<T>::he_init(Tensor<T>& w, int fan_in, Rng& rng) {
  const double std_dev = std::sqrt(2.0 / fan_in);
  for (T& v : w.data) v = static_cast<T>(rng.normal() * std_dev);
}

template <typename T>
Model<T> Model<T>::build(const ModelConfig& config, uint64_t seed) {
  if (config.stage_blocks.empty() || config.stage_blocks.size() != config.stage_channels.size())
    throw InvalidConfig("stage_blocks and stage_channels must be equal-length, non-empty");
  for (int b : config.stage_blocks)
    if (b < 1) throw InvalidConfig("stage_blocks entries must be >= 1");
  for (int c : config.stage_channels)
    if (c < 1) throw InvalidConfig("stage_channels entries must be >= 1");
  if (config.num_classes < 2) throw InvalidConfig("num_classes must be >= 2");
  if (config.input_size < 8) throw InvalidConfig("input_size must be >= 8");

  Model m;
  m.config_ = config;
  Rng rng(mix_seed(seed, 0xd5c11ULL));

  auto make_bn = [&m](const std::string& prefix, int c, int group) {
    BnDesc bn;
    bn.group = group;
    bn.gamma = m.add_param(prefix + ".gamma", {c}, group);
    std::fill(m.slots_[static_cast<size_t>(bn.gamma)].value.data.begin(),
              m.slots_[static_cast<size_t>(bn.gamma)].value.data.end(), T(1));
    bn.beta = m.add_param(prefix + ".beta", {c}, group);
    bn.rmean = m.add_buffer(prefix + ".running_mean", {c}, group, T(0));
    bn.rvar = m.add_buffer(prefix + ".running_var", {c}, group, T(1));
    return bn;
  };
  auto make_conv = [&m, &rng](const std::string& name, int in_c, int out_c, int k, int stride,
                              int group) {
    ConvDesc cd;
    cd.k = k;
    cd.stride = stride;
    cd.pad = k / 2;
    cd.w = m.add_param(name, {out_c, in_c, k, k}, group);
    m.he_init(m.slots_[static_cast<size_t>(cd.w)].value, in_c * k * k, rng);
    return cd;
  };

  const int c0 = config.stage_channels[0];
  m.stem_ = make_conv("stem.conv.w", 3, c0, 3, 2, 0);
  m.stem_bn_ = make_bn("stem.bn", c0, 0);

  int in_c = c0;
  for (size_t s = 0; s < config.stage_blocks.size(); ++s) {
    const int out_c = config.stage_channels[s];
    const int group = s == 0 ? 0 : 1;
    std::vector<BlockDesc> blocks;
    for (int b = 0; b < config.stage_blocks[s]; ++b) {
      const int stride = b == 0 ? 2 : 1;
      const int bin = b == 0 ? in_c : out_c;
      std::string p = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
      BlockDesc blk;
      blk.group = group;
      blk.c1 = make_conv(p + ".conv1.w", bin, out_c, 3, stride, group);
      blk.b1 = make_bn(p + ".bn1", out_c, group);
      blk.c2 = make_conv(p + ".conv2.w", out_c, out_c, 3, 1, group);
      blk.b2 = make_bn(p + ".bn2", out_c, group);
      blk.has_proj = stride != 1 || bin != out_c;
      if (blk.has_proj) {
        blk.pc = make_conv(p + ".proj.w", bin, out_c, 1, stride, group);
        blk.pb = make_bn(p + ".proj_bn", out_c, group);
      }
      blocks.push_back(blk);
    }
    m.stages_.push_back(std::move(blocks));
    in_c = out_c;
  }

  m.head_w_ = m.add_param("head.w", {config.num_classes, in_c}, 2);
  m.he_init(m.slots_[static_cast<size_t>(m.head_w_)].value, in_c, rng);
  m.head_b_ = m.add_param("head.b", {config.num_classes}, 2);  // zero bias
  return m;
}

template <typename T>
Tensor<T> Model<T>::bn_apply(const Tensor<T>& x, const BnDesc& bn, bool train,
                             ops::BnSaved<T>* saved) {
  const bool batch_stats = train && !groups_[static_cast<size_t>(bn.group)].frozen;
  if (batch_stats) {
    return ops::bn_forward_train(x, slots_[static_cast<size_t>(bn.gamma)].value,
                                 slots_[static_cast<size_t>(bn.beta)].value, static_cast<T>(kBnEps),
                                 saved, &slots_[static_cast<size_t>(bn.rmean)].value,
                                 &slots_[static_cast<size_t>(bn.rvar)].value,
                                 static_cast<T>(kBnMomentum));
  }
  if (saved) saved->train = false;
  return ops::bn_forward_eval(x, slots_[static_cast<size_t>(bn.gamma)].value,
                              slots_[static_cast<size_t>(bn.beta)].value,
                              slots_[static_cast<size_t>(bn.rmean)].value,
                              slots_[static_cast<size_t>(bn.rvar)].value, static_cast<T>(kBnEps));
}

template <typename T>
Tensor<T> Model<T>::bn_back(const Tensor<T>& dy, const BnDesc& bn, const ops::BnSaved<T>& saved,
                            bool want_param_grads) {
  Slot& g = slots_[static_cast<size_t>(bn.gamma)];
  Slot& b = slots_[static_cast<size_t>(bn.beta)];
  if (saved.train)
    return ops::bn_backward_train(dy, saved, g.value, want_param_grads ? &g.grad : nullptr,
                                  want_param_grads ? &b.grad : nullptr);
  // eval-stats layer: fixed affine; parameters of such layers are frozen
  return ops::bn_backward_eval(dy, g.value, slots_[static_cast<size_t>(bn.rvar)].value,
                               static_cast<T>(kBnEps));
}

template <typename T>
Tensor<T> Model<T>::block_forward(const Tensor<T>& in, const BlockDesc& blk, bool train,
                                  BlockTrace* bt) {
  Tensor<T> t = ops::conv2d_forward(in, slots_[static_cast<size_t>(blk.c1.w)].value,
                                    blk.c1.stride, blk.c1.pad);
  t = bn_apply(t, blk.b1, train, bt ? &bt->bn1 : nullptr);
  ops::relu_inplace(t);
  Tensor<T> a1 = std::move(t);

  Tensor<T> u = ops::conv2d_forward(a1, slots_[static_cast<size_t>(blk.c2.w)].value,
                                    blk.c2.stride, blk.c2.pad);
  u = bn_apply(u, blk.b2, train, bt ? &bt->bn2 : nullptr);

  if (blk.has_proj) {
    Tensor<T> p = ops::conv2d_forward(in, slots_[static_cast<size_t>(blk.pc.w)].value,
                                      blk.pc.stride, blk.pc.pad);
    p = bn_apply(p, blk.pb, train, bt ? &bt->pbn : nullptr);
    for (size_t i = 0; i < u.data.size(); ++i) u.data[i] += p.data[i];
  } else {
    for (size_t i = 0; i < u.data.size(); ++i) u.data[i] += in.data[i];
  }
  ops::relu_inplace(u);
  if (bt) {
    bt->a1 = std::move(a1);
    bt->out = u;  // copy: also returned as next input
  }
  return u;
}

template <typename T>
Tensor<T> Model<T>::run_body(const Tensor<T>& x, bool train, Trace* trace) {
  if (x.shape.size() != 4 || x.dim(1) != 3 || x.dim(2) != config_.input_size ||
      x.dim(3) != config_.input_size)
    throw ShapeMismatch("batch must be [N,3," + std::to_string(config_.input_size) + "," +
                        std::to_string(config_.input_size) + "]");

  Tensor<T> cur = ops::conv2d_forward(x, slots_[static_cast<size_t>(stem_.w)].value, stem_.stride,
                                      stem_.pad);
  cur = bn_apply(cur, stem_bn_, train, trace ? &trace->stem_bn : nullptr);
  ops::relu_inplace(cur);
  if (trace) trace->stem_out = cur;

  if (trace) trace->blocks.resize(stages_.size());
  for (size_t s = 0; s < stages_.size(); ++s) {
    if (trace) trace->blocks[s].resize(stages_[s].size());
    for (size_t b = 0; b < stages_[s].size(); ++b)
      cur = block_forward(cur, stages_[s][b], train, trace ? &trace->blocks[s][b] : nullptr);
  }
  Tensor<T> features = ops::global_avg_pool(cur);
  if (trace) trace->features = features;
  return features;
}

template <typename T>
Tensor<T> Model<T>::run_network(const Tensor<T>& x, bool train, Trace* trace) {
  Tensor<T> features = run_body(x, train, trace);
  return head_forward(features);
}

template <typename T>
void Model<T>::prepare_grads() {
  for (Slot& s : slots_) {
    if (!s.is_param) continue;
    if (groups_[static_cast<size_t>(s.group)].frozen) {
      s.grad = Tensor<T>();
      s.has_grad = false;
    } else {
      if (!s.grad.same_shape(s.value)) s.grad = Tensor<T>(s.value.shape);
      s.grad.zero();
      s.has_grad = true;
    }
  }
}

template <typename T>
Tensor<T> Model<T>::block_backward(Tensor<T>& d, const Tensor<T>& in, const BlockDesc& blk,
                                   BlockTrace& bt, bool want_param_grads, bool propagate) {
  ops::relu_backward_inplace(d, bt.out);

  Tensor<T> dx;
  if (propagate) dx = Tensor<T>(in.shape);

  // main branch
  Tensor<T> d2 = bn_back(d, blk.b2, bt.bn2, want_param_grads);
  Slot& w2 = slots_[static_cast<size_t>(blk.c2.w)];
  Tensor<T> da1(bt.a1.shape);
  ops::conv2d_backward(bt.a1, w2.value, d2, blk.c2.stride, blk.c2.pad,
                       want_param_grads ? &w2.grad : nullptr, &da1);
  ops::relu_backward_inplace(da1, bt.a1);
  Tensor<T> d1 = bn_back(da1, blk.b1, bt.bn1, want_param_grads);
  Slot& w1 = slots_[static_cast<size_t>(blk.c1.w)];
  ops::conv2d_backward(in, w1.value, d1, blk.c1.stride, blk.c1.pad,
                       want_param_grads ? &w1.grad : nullptr, propagate ? &dx : nullptr);

  // shortcut
  if (blk.has_proj) {
    Tensor<T> dp = bn_back(d, blk.pb, bt.pbn, want_param_grads);
    Slot& wp = slots_[static_cast<size_t>(blk.pc.w)];
    ops::conv2d_backward(in, wp.value, dp, blk.pc.stride, blk.pc.pad,
                         want_param_grads ? &wp.grad : nullptr, propagate ? &dx : nullptr);
  } else if (propagate) {
    for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += d.data[i];
  }
  return dx;
}

template <typename T>
void Model<T>::backward(const Tensor<T>& input, Trace& trace, const Tensor<T>& dlogits) {
  // head
  Slot& hw = slots_[static_cast<size_t>(head_w_)];
  Slot& hb = slots_[static_cast<size_t>(head_b_)];
  const bool head_grads = !groups_[2].frozen;
  const bool need_g0 = !groups_[0].frozen;
  const bool need_g1 = !groups_[1].frozen;

  Tensor<T> dfeat({trace.features.dim(0), trace.features.dim(1)});
  ops::linear_backward(trace.features, hw.value, dlogits, head_grads ? &hw.grad : nullptr,
                       head_grads ? &hb.grad : nullptr,
                       (need_g0 || need_g1) ? &dfeat : nullptr);
  if (!need_g0 && !need_g1) return;

  const Tensor<T>& last = trace.blocks.back().back().out;
  Tensor<T> d = ops::global_avg_pool_backward(dfeat, last.dim(2), last.dim(3));

  for (int s = static_cast<int>(stages_.size()) - 1; s >= 0; --s) {
    const int group = s == 0 ? 0 : 1;
    const bool want = !groups_[static_cast<size_t>(group)].frozen;
    for (int b = static_cast<int>(stages_[static_cast<size_t>(s)].size()) - 1; b >= 0; --b) {
      // gradient must flow further down only while unfrozen parameters remain
      bool below_unfrozen;
      if (need_g0)
        below_unfrozen = true;  // stem is group 0
      else
        below_unfrozen = need_g1 && (s > 1 || (s == 1 && b > 0));
      const Tensor<T>& in =
          (s == 0 && b == 0)
              ? trace.stem_out
              : (b == 0 ? trace.blocks[static_cast<size_t>(s - 1)].back().out
                        : trace.blocks[static_cast<size_t>(s)][static_cast<size_t>(b - 1)].out);
      d = block_backward(d, in, stages_[static_cast<size_t>(s)][static_cast<size_t>(b)],
                         trace.blocks[static_cast<size_t>(s)][static_cast<size_t>(b)], want,
                         below_unfrozen);
      if (!below_unfrozen) return;
    }
  }

  // stem (reached only when group 0 is unfrozen)
  ops::relu_backward_inplace(d, trace.stem_out);
  Tensor<T> ds = bn_back(d, stem_bn_, trace.stem_bn, true);
  Slot& sw = slots_[static_cast<size_t>(stem_.w)];
  ops::conv2d_backward<T>(input, sw.value, ds, stem_.stride, stem_.pad, &sw.grad, nullptr);
}

template <typename T>
double Model<T>::loss_and_grads(const Tensor<T>& batch, const std::vector<int>& labels) {
  prepare_grads();
  Trace trace;
  Tensor<T> logits = run_network(batch, true, &trace);
  Tensor<T> dlogits;
  double loss = ops::softmax_cross_entropy(logits, labels, &dlogits);
  backward(batch, trace, dlogits);
  return loss;
}

template <typename T>
double Model<T>::head_loss_and_grads(const Tensor<T>& features, const std::vector<int>& labels) {
  for (Slot& s : slots_) {
    s.grad = Tensor<T>();
    s.has_grad = false;
  }
  Slot& hw = slots_[static_cast<size_t>(head_w_)];
  Slot& hb = slots_[static_cast<size_t>(head_b_)];
  const bool head_grads = !groups_[2].frozen;
  if (head_grads) {
    hw.grad = Tensor<T>(hw.value.shape);
    hb.grad = Tensor<T>(hb.value.shape);
    hw.has_grad = hb.has_grad = true;
  }
  Tensor<T> logits = head_forward(features);
  Tensor<T> dlogits;
  double loss = ops::softmax_cross_entropy(logits, labels, &dlogits);
  ops::linear_backward(features, hw.value, dlogits, head_grads ? &hw.grad : nullptr,
                       head_grads ? &hb.grad : nullptr, nullptr);
  return loss;
}

template <typename T>
void Model<T>::set_frozen(const std::vector<int>& group_indices, bool frozen) {
  for (int g : group_indices) {
    if (g < 0 || g > 2) throw InvalidConfig("group index must be 0, 1 or 2");
    groups_[static_cast<size_t>(g)].frozen = frozen;
  }
}

// ------------------------------------------------------------- optimizer ---

// SGD with momentum: v <- momentum*v + grad; w <- w - lr_g*v, where
// lr_g = base_lr * group lr_scale. Frozen groups are untouched.
template <typename T>
class SgdOptimizer {
 public:
  void step(Model<T>& model, double base_lr, double momentum) {
    auto& slots = model.slots();
    if (velocity_.size() != slots.size()) velocity_.assign(slots.size(), Tensor<T>());
    for (size_t i = 0; i < slots.size(); ++i) {
      auto& s = slots[i];
      if (!s.is_param || !s.has_grad) continue;
      if (model.groups()[static_cast<size_t>(s.group)].frozen) continue;
      Tensor<T>& v = velocity_[i];
      if (!v.same_shape(s.value)) v = Tensor<T>(s.value.shape);
      const double lr = base_lr * model.groups()[static_cast<size_t>(s.group)].lr_scale;
      for (size_t j = 0; j < v.data.size(); ++j) {
        v.data[j] = static_cast<T>(momentum) * v.data[j] + s.grad.data[j];
        s.value.data[j] -= static_cast<T>(lr) * v.data[j];
      }
    }
  }
  void reset() { velocity_.clear(); }

 private:
  std::vector<Tensor<T>> velocity_;
};

// ----------------------------------------------------------------- misc ----

template <typename T>
uint64_t model_digest(const Model<T>& m) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : m.slots()) {
    h = fnv1a(s.name.data(), s.name.size(), h);
    h = fnv1a(s.value.data.data(), s.value.data.size() * sizeof(T), h);
  }
  return h;
}

// Digest of the frozen body (groups 0-1), parameters and running statistics.
template <typename T>
uint64_t body_digest(const Model<T>& m) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : m.slots()) {
    if (s.group == 2) continue;
    h = fnv1a(s.name.data(), s.name.size(), h);
    h = fnv1a(s.value.data.data(), s.value.data.size() * sizeof(T), h);
  }
  return h;
}

}  // namespace dscn
