#include "demr/net.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace demr {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::kRelu, Activation::kTanh, Activation::kLinear})
    if (activation_name(a) == name) return a;
  throw Error(ErrorCode::kBadConfig, "unknown activation '" + std::string(name) + "'");
}

std::string_view loss_mode_name(LossMode mode) {
  return mode == LossMode::kDemrExtrinsic ? "demr_extrinsic" : "dimr_geodesic_fd";
}

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0), act};
  const double s = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& x : layer.w.data()) x = rng.uniform(-s, s);
  return layer;
}

std::vector<std::span<double>> RegressorParams::blocks() {
  std::vector<std::span<double>> out;
  auto add = [&](DenseLayer& l) {
    out.push_back(l.w.data());
    out.push_back(l.b);
  };
  for (auto& l : encoder) add(l);
  for (auto& l : head) add(l);
  if (trans_head) add(*trans_head);
  return out;
}

std::vector<std::span<const double>> RegressorParams::blocks() const {
  std::vector<std::span<const double>> out;
  auto add = [&](const DenseLayer& l) {
    out.push_back(l.w.data());
    out.push_back(l.b);
  };
  for (const auto& l : encoder) add(l);
  for (const auto& l : head) add(l);
  if (trans_head) add(*trans_head);
  return out;
}

std::size_t RegressorParams::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

RegressorParams make_pose_regressor(ReprTag tag, const PoseArchitecture& arch, Rng& rng) {
  if (!is_rotation_tag(tag))
    throw Error(ErrorCode::kTagMismatch, "pose head needs a rotation tag");
  if (arch.encoder_widths.empty())
    throw Error(ErrorCode::kBadConfig, "pose encoder needs at least one layer");
  RegressorParams p;
  p.rot_head_tag = tag;
  std::size_t in = 3;
  for (std::size_t w : arch.encoder_widths) {
    p.encoder.push_back(make_layer(in, w, Activation::kRelu, rng));
    in = w;
  }
  in *= 2;
  for (std::size_t w : arch.head_widths) {
    p.head.push_back(make_layer(in, w, Activation::kTanh, rng));
    in = w;
  }
  p.head.push_back(make_layer(in, tag_length(tag), Activation::kLinear, rng));
  p.trans_head = make_layer(in, 3, Activation::kLinear, rng);
  return p;
}

RegressorParams make_subspace_regressor(const SubspaceArchitecture& arch, Rng& rng) {
  RegressorParams p;
  p.rot_head_tag = ReprTag::kSymVec;
  std::size_t in = arch.input;
  for (std::size_t w : arch.hidden) {
    p.head.push_back(make_layer(in, w, arch.activation, rng));
    in = w;
  }
  p.head.push_back(make_layer(in, symvec_length(arch.ambient), Activation::kLinear, rng));
  return p;
}

GradientBundle GradientBundle::zeros_like(const RegressorParams& p) {
  GradientBundle g;
  for (auto b : p.blocks()) g.blocks.emplace_back(b.size(), 0.0);
  return g;
}

bool GradientBundle::congruent_with(const RegressorParams& p) const {
  const auto pb = p.blocks();
  if (pb.size() != blocks.size()) return false;
  for (std::size_t i = 0; i < pb.size(); ++i)
    if (pb[i].size() != blocks[i].size()) return false;
  return true;
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kLinear: return x;
  }
  return x;
}

// d act / d pre, given the pre-activation and the activation output.
double activate_grad(Activation a, double pre, double out) {
  switch (a) {
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - out * out;
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}

void mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

// Transposed (in x out) copies of the weights so that forward products run
// as contiguous axpy loops.
struct TransposedWeights {
  std::vector<std::vector<double>> wt;

  explicit TransposedWeights(const std::vector<DenseLayer>& layers) {
    for (const auto& l : layers) {
      std::vector<double> t(l.in() * l.out());
      for (std::size_t j = 0; j < l.out(); ++j)
        for (std::size_t k = 0; k < l.in(); ++k) t[k * l.out() + j] = l.w(j, k);
      wt.push_back(std::move(t));
    }
  }
};

// y = W x + b via the transposed weights.
void affine(const DenseLayer& l, const std::vector<double>& wt,
            std::span<const double> x, std::span<double> y) {
  const std::size_t out = l.out();
  std::copy(l.b.begin(), l.b.end(), y.begin());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double* row = wt.data() + k * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xk * row[j];
  }
}

void dense_forward(const std::vector<DenseLayer>& layers, const TransposedWeights& tw,
                   std::span<const double> x, DenseCache& cache,
                   std::uint64_t* signature) {
  cache.inputs.resize(layers.size());
  cache.pre.resize(layers.size());
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (cur.size() != layer.in())
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " expects " +
                      std::to_string(layer.in()) + " inputs, got " +
                      std::to_string(cur.size()));
    std::vector<double> pre(layer.out());
    affine(layer, tw.wt[l], cur, pre);
    std::vector<double> next(layer.out());
    for (std::size_t j = 0; j < pre.size(); ++j) next[j] = activate(layer.act, pre[j]);
    if (signature != nullptr && layer.act == Activation::kRelu)
      for (double p : pre) mix(*signature, p > 0.0);
    cache.inputs[l] = std::move(cur);
    cache.pre[l] = std::move(pre);
    cur = std::move(next);
  }
  cache.output = std::move(cur);
}

// Backpropagates dpre of the last layer. grads[block0 + 2l] / [+1] receive
// the weight / bias gradients of layer l. `extra_at_last_input` is added to
// the gradient arriving at the input of the last layer (the translation
// branch reads it). Returns the gradient with respect to the stack input.
std::vector<double> dense_backward_pre(const std::vector<DenseLayer>& layers,
                                       const DenseCache& cache,
                                       std::vector<double> dpre,
                                       GradientBundle& grads, std::size_t block0,
                                       std::span<const double> extra_at_last_input) {
  std::vector<double> dx;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    const auto& input = cache.inputs[li];
    auto& gw = grads.blocks[block0 + 2 * li];
    auto& gb = grads.blocks[block0 + 2 * li + 1];
    dx.assign(layer.in(), 0.0);
    for (std::size_t j = 0; j < layer.out(); ++j) {
      const double d = dpre[j];
      if (d == 0.0) continue;
      gb[j] += d;
      double* gwr = gw.data() + j * layer.in();
      const auto wr = layer.w.row(j);
      for (std::size_t k = 0; k < layer.in(); ++k) {
        gwr[k] += d * input[k];
        dx[k] += d * wr[k];
      }
    }
    if (li == layers.size() - 1 && !extra_at_last_input.empty())
      for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += extra_at_last_input[k];
    if (li == 0) break;
    const DenseLayer& below = layers[li - 1];
    dpre.assign(below.out(), 0.0);
    for (std::size_t k = 0; k < below.out(); ++k)
      dpre[k] = dx[k] * activate_grad(below.act, cache.pre[li - 1][k], input[k]);
  }
  return dx;
}

std::vector<double> dense_backward(const std::vector<DenseLayer>& layers,
                                   const DenseCache& cache, std::span<const double> dy,
                                   GradientBundle& grads, std::size_t block0,
                                   std::span<const double> extra_at_last_input) {
  const DenseLayer& last = layers.back();
  std::vector<double> dpre(last.out());
  for (std::size_t j = 0; j < dpre.size(); ++j)
    dpre[j] = dy[j] * activate_grad(last.act, cache.pre.back()[j], cache.output[j]);
  return dense_backward_pre(layers, cache, std::move(dpre), grads, block0,
                            extra_at_last_input);
}

// Fixed-order dot product with four partial sums.
double dot4(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

// Whole-batch activations, row-major (rows x width) per layer. Each weight
// row is reused across the batch while it is hot in cache.
struct BatchCache {
  std::size_t rows = 0;
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
  std::vector<double> output;
};

void batch_forward(const std::vector<DenseLayer>& layers, std::vector<double> x,
                   std::size_t rows, BatchCache& cache) {
  cache.rows = rows;
  cache.inputs.resize(layers.size());
  cache.pre.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const std::size_t in = layer.in(), out = layer.out();
    if (x.size() != rows * in)
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " expects " + std::to_string(in) + " inputs");
    std::vector<double> pre(rows * out);
    for (std::size_t j = 0; j < out; ++j) {
      const double* wr = layer.w.row(j).data();
      for (std::size_t r = 0; r < rows; ++r)
        pre[r * out + j] = layer.b[j] + dot4(wr, x.data() + r * in, in);
    }
    std::vector<double> next(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) next[i] = activate(layer.act, pre[i]);
    cache.inputs[l] = std::move(x);
    cache.pre[l] = std::move(pre);
    x = std::move(next);
  }
  cache.output = std::move(x);
}

// dy is rows x out of the last layer; gradients accumulate into grads.
void batch_backward(const std::vector<DenseLayer>& layers, const BatchCache& cache,
                    const std::vector<double>& dy, GradientBundle& grads, std::size_t block0) {
  const std::size_t rows = cache.rows;
  std::vector<double> dpre(dy.size());
  {
    const DenseLayer& last = layers.back();
    for (std::size_t i = 0; i < dy.size(); ++i)
      dpre[i] = dy[i] * activate_grad(last.act, cache.pre.back()[i], cache.output[i]);
  }
  std::vector<double> dx;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    const std::size_t in = layer.in(), out = layer.out();
    const auto& input = cache.inputs[li];
    auto& gw = grads.blocks[block0 + 2 * li];
    auto& gb = grads.blocks[block0 + 2 * li + 1];
    const bool need_dx = li > 0;
    if (need_dx) dx.assign(rows * in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double* wr = layer.w.row(j).data();
      double* gwr = gw.data() + j * in;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = dpre[r * out + j];
        if (d == 0.0) continue;
        gb[j] += d;
        const double* xr = input.data() + r * in;
        for (std::size_t k = 0; k < in; ++k) gwr[k] += d * xr[k];
        if (need_dx) {
          double* dxr = dx.data() + r * in;
          for (std::size_t k = 0; k < in; ++k) dxr[k] += d * wr[k];
        }
      }
    }
    if (!need_dx) break;
    const DenseLayer& below = layers[li - 1];
    dpre.assign(dx.size(), 0.0);
    for (std::size_t i = 0; i < dx.size(); ++i)
      dpre[i] = dx[i] * activate_grad(below.act, cache.pre[li - 1][i], input[i]);
  }
}

std::vector<double> stack_images(std::span<const SubspaceExample> batch) {
  std::vector<double> x;
  x.reserve(batch.size() * batch.front().image.size());
  for (const auto& s : batch) {
    if (s.image.size() != batch.front().image.size())
      throw Error(ErrorCode::kShapeMismatch, "images in a batch differ in length");
    x.insert(x.end(), s.image.begin(), s.image.end());
  }
  return x;
}

CloudEncoding encode_cloud(const std::vector<DenseLayer>& enc, const TransposedWeights& tw,
                           const PointCloud& pts, std::uint64_t* signature) {
  if (pts.empty()) throw Error(ErrorCode::kShapeMismatch, "empty point cloud");
  const std::size_t width = enc.back().out();
  CloudEncoding out{std::vector<double>(width), std::vector<std::uint32_t>(width, 0)};
  std::size_t max_width = 3;
  for (const auto& l : enc) max_width = std::max(max_width, l.out());
  std::vector<double> a(max_width), b(max_width);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::copy(pts[i].begin(), pts[i].end(), a.begin());
    std::size_t in = 3;
    for (std::size_t l = 0; l < enc.size(); ++l) {
      const std::size_t w = enc[l].out();
      affine(enc[l], tw.wt[l], std::span<const double>(a.data(), in),
             std::span<double>(b.data(), w));
      if (l + 1 < enc.size()) {
        for (std::size_t j = 0; j < w; ++j) {
          if (signature != nullptr && enc[l].act == Activation::kRelu)
            mix(*signature, b[j] > 0.0);
          b[j] = activate(enc[l].act, b[j]);
        }
      }
      std::swap(a, b);
      in = w;
    }
    // `a` holds the last pre-activation; pooling commutes with the
    // monotone activation.
    if (i == 0) {
      std::copy_n(a.begin(), width, out.pooled_pre.begin());
    } else {
      for (std::size_t j = 0; j < width; ++j) {
        if (a[j] > out.pooled_pre[j]) {
          out.pooled_pre[j] = a[j];
          out.argmax[j] = static_cast<std::uint32_t>(i);
        }
      }
    }
  }
  if (signature != nullptr) {
    for (std::size_t j = 0; j < width; ++j) {
      mix(*signature, out.argmax[j]);
      mix(*signature, out.pooled_pre[j] > 0.0);
    }
  }
  return out;
}

// Routes d loss / d pooled_pre back to the argmax points and through the
// encoder; encoder blocks start at index 0.
void encoder_backward(const std::vector<DenseLayer>& enc, const TransposedWeights& tw,
                      const PointCloud& pts, const CloudEncoding& encoding,
                      std::span<const double> dpooled_pre, GradientBundle& grads) {
  std::map<std::uint32_t, std::vector<double>> per_point;
  const std::size_t width = enc.back().out();
  for (std::size_t j = 0; j < width; ++j) {
    if (dpooled_pre[j] == 0.0) continue;
    auto [it, inserted] = per_point.try_emplace(encoding.argmax[j]);
    if (inserted) it->second.assign(width, 0.0);
    it->second[j] += dpooled_pre[j];
  }
  DenseCache cache;
  for (auto& [idx, dpre] : per_point) {
    const Vec3& p = pts[idx];
    dense_forward(enc, tw, std::span<const double>(p.data(), 3), cache, nullptr);
    dense_backward_pre(enc, cache, std::move(dpre), grads, 0, {});
  }
}

std::vector<double> pooled_features(const Activation act, const CloudEncoding& r,
                                    const CloudEncoding& t) {
  std::vector<double> z;
  z.reserve(r.pooled_pre.size() * 2);
  for (double x : r.pooled_pre) z.push_back(activate(act, x));
  for (double x : t.pooled_pre) z.push_back(activate(act, x));
  return z;
}

struct PoseForwardResult {
  std::vector<double> rot;
  Vec3 trans{};
};

struct PoseEngine {
  const RegressorParams& params;
  TransposedWeights enc_w;
  TransposedWeights head_w;

  explicit PoseEngine(const RegressorParams& p)
      : params(p), enc_w(p.encoder), head_w(p.head) {
    if (!p.is_pose() || !p.trans_head)
      throw Error(ErrorCode::kShapeMismatch, "not a pose regressor");
  }

  Activation pool_act() const { return params.encoder.back().act; }

  PoseForwardResult head_forward(const CloudEncoding& r, const CloudEncoding& t,
                                 DenseCache& cache, std::uint64_t* sig) const {
    const auto z = pooled_features(pool_act(), r, t);
    dense_forward(params.head, head_w, z, cache, sig);
    PoseForwardResult out{cache.output, {}};
    const DenseLayer& th = *params.trans_head;
    const auto& hidden = cache.inputs.back();
    for (std::size_t j = 0; j < 3; ++j) out.trans[j] = th.b[j] + dot(th.w.row(j), hidden);
    return out;
  }
};

std::size_t head_block0(const RegressorParams& p) { return 2 * p.encoder.size(); }
std::size_t trans_block0(const RegressorParams& p) {
  return 2 * (p.encoder.size() + p.head.size());
}

// Evaluates the batch loss for either mode (no gradients).
double pose_loss(const RegressorParams& params, std::span<const PoseSample> batch,
                 LossMode mode, std::uint64_t* sig) {
  if (batch.empty()) throw Error(ErrorCode::kShapeMismatch, "empty batch");
  PoseEngine eng(params);
  std::map<const PointCloud*, CloudEncoding> encodings;
  auto encoding_of = [&](const std::shared_ptr<const PointCloud>& c) -> const CloudEncoding& {
    auto it = encodings.find(c.get());
    if (it == encodings.end())
      it = encodings.emplace(c.get(), encode_cloud(params.encoder, eng.enc_w, *c, sig)).first;
    return it->second;
  };
  const ReprTag tag = params.rot_head_tag;
  double total = 0.0;
  DenseCache cache;
  for (const PoseSample& s : batch) {
    const auto out = eng.head_forward(encoding_of(s.p_r), encoding_of(s.p_t), cache, sig);
    if (mode == LossMode::kDemrExtrinsic) {
      const EmbeddedVector target = encode_rotation(tag, s.gt.rot);
      double lr = 0.0;
      for (std::size_t k = 0; k < out.rot.size(); ++k) {
        const double d = out.rot[k] - target.data[k];
        lr += d * d;
      }
      double lt = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double d = out.trans[k] - s.gt.trans[k];
        lt += d * d;
      }
      total += lr / static_cast<double>(out.rot.size()) + lt / 3.0;
    } else {
      const RotationMatrix r = to_rotation(EmbeddedVector{tag, out.rot});
      total += dist_geodesic(RigidTransform{r, out.trans}, s.gt);
    }
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw Error(ErrorCode::kNonFiniteLoss, "pose loss is not finite");
  return loss;
}

double subspace_loss(const RegressorParams& params, std::span<const SubspaceExample> batch,
                     LossMode mode, std::uint64_t* sig) {
  if (batch.empty()) throw Error(ErrorCode::kShapeMismatch, "empty batch");
  BatchCache cache;
  batch_forward(params.head, stack_images(batch), batch.size(), cache);
  if (sig != nullptr)
    for (std::size_t l = 0; l < params.head.size(); ++l)
      if (params.head[l].act == Activation::kRelu)
        for (double p : cache.pre[l]) mix(*sig, p > 0.0);
  const std::size_t width = params.head.back().out();
  double total = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const SubspaceExample& s = batch[r];
    const auto& target = s.target->target.data;
    if (width != target.size())
      throw Error(ErrorCode::kTagMismatch, "network output does not match the symvec target");
    const double* y = cache.output.data() + r * width;
    if (mode == LossMode::kDemrExtrinsic) {
      double l = 0.0;
      for (std::size_t k = 0; k < width; ++k) {
        const double d = y[k] - target[k];
        l += d * d;
      }
      total += l / static_cast<double>(width);
    } else {
      const SymVec pred{std::vector<double>(y, y + width), s.target->target.n};
      const GrassmannPoint est = inverse_embed_grassmann(sym_unvec(pred), s.target->gt.m());
      total += dist_grassmann(est, s.target->gt);
    }
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw Error(ErrorCode::kNonFiniteLoss, "subspace loss is not finite");
  return loss;
}

template <typename Batch>
double any_loss(const RegressorParams& p, Batch batch, LossMode mode, std::uint64_t* sig);

template <>
double any_loss(const RegressorParams& p, std::span<const PoseSample> batch, LossMode mode,
                std::uint64_t* sig) {
  return pose_loss(p, batch, mode, sig);
}

template <>
double any_loss(const RegressorParams& p, std::span<const SubspaceExample> batch,
                LossMode mode, std::uint64_t* sig) {
  return subspace_loss(p, batch, mode, sig);
}

template <typename Batch>
LossAndGrad finite_difference_grad(const RegressorParams& params, Batch batch,
                                   LossMode mode, double h) {
  LossAndGrad out{any_loss(params, batch, mode, nullptr), GradientBundle::zeros_like(params)};
  RegressorParams work = params;
  auto blocks = work.blocks();
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    for (std::size_t k = 0; k < blocks[bi].size(); ++k) {
      const double orig = blocks[bi][k];
      blocks[bi][k] = orig + h;
      const double up = any_loss(work, batch, mode, nullptr);
      blocks[bi][k] = orig - h;
      const double down = any_loss(work, batch, mode, nullptr);
      blocks[bi][k] = orig;
      out.grads.blocks[bi][k] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

constexpr double kDimrStep = 1e-6;

}  // namespace

PoseOutput forward_pose(const RegressorParams& params, const PointCloud& p_r,
                        const PointCloud& p_t) {
  PoseEngine eng(params);
  PoseOutput out;
  out.cache.ref = encode_cloud(params.encoder, eng.enc_w, p_r, nullptr);
  out.cache.target = encode_cloud(params.encoder, eng.enc_w, p_t, nullptr);
  const auto res = eng.head_forward(out.cache.ref, out.cache.target, out.cache.head, nullptr);
  out.rot = EmbeddedVector{params.rot_head_tag, res.rot};
  out.trans = res.trans;
  return out;
}

SubspaceOutput forward_subspace(const RegressorParams& params, std::span<const double> x) {
  if (params.head.empty() || params.head.front().in() != x.size())
    throw Error(ErrorCode::kShapeMismatch, "image length does not match the first layer");
  BatchCache bc;
  batch_forward(params.head, std::vector<double>(x.begin(), x.end()), 1, bc);
  SubspaceOutput out;
  out.cache.inputs = std::move(bc.inputs);
  out.cache.pre = std::move(bc.pre);
  out.cache.output = std::move(bc.output);
  out.prediction.data = out.cache.output;
  out.prediction.n = symvec_dimension(out.cache.output.size());
  return out;
}

LossAndGrad loss_and_grad(const RegressorParams& params, std::span<const PoseSample> batch,
                          LossMode mode) {
  if (mode == LossMode::kDimrGeodesicFd)
    return finite_difference_grad(params, batch, mode, kDimrStep);
  if (batch.empty()) throw Error(ErrorCode::kShapeMismatch, "empty batch");

  PoseEngine eng(params);
  LossAndGrad out{0.0, GradientBundle::zeros_like(params)};
  // Each distinct cloud is encoded once; pooled gradients accumulate per cloud.
  std::vector<const PointCloud*> clouds;
  std::map<const PointCloud*, std::size_t> index;
  auto cloud_index = [&](const std::shared_ptr<const PointCloud>& c) {
    auto [it, inserted] = index.try_emplace(c.get(), clouds.size());
    if (inserted) clouds.push_back(c.get());
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const PoseSample& s : batch) pairs.emplace_back(cloud_index(s.p_r), cloud_index(s.p_t));
  std::vector<CloudEncoding> enc;
  for (const PointCloud* c : clouds)
    enc.push_back(encode_cloud(params.encoder, eng.enc_w, *c, nullptr));

  const std::size_t width = params.encoder.back().out();
  const Activation pool_act = eng.pool_act();
  std::vector<std::vector<double>> dpool(clouds.size(), std::vector<double>(width, 0.0));
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const ReprTag tag = params.rot_head_tag;
  const DenseLayer& th = *params.trans_head;
  auto& gtw = out.grads.blocks[trans_block0(params)];
  auto& gtb = out.grads.blocks[trans_block0(params) + 1];

  DenseCache cache;
  for (std::size_t si = 0; si < batch.size(); ++si) {
    const PoseSample& s = batch[si];
    const auto [ri, ti] = pairs[si];
    const auto res = eng.head_forward(enc[ri], enc[ti], cache, nullptr);
    const EmbeddedVector target = encode_rotation(tag, s.gt.rot);
    if (target.data.size() != res.rot.size())
      throw Error(ErrorCode::kTagMismatch, "head output does not match the target tag");

    const double nrot = static_cast<double>(res.rot.size());
    std::vector<double> drot(res.rot.size());
    double lr = 0.0;
    for (std::size_t k = 0; k < res.rot.size(); ++k) {
      const double d = res.rot[k] - target.data[k];
      lr += d * d;
      drot[k] = 2.0 * d / nrot * inv_b;
    }
    double lt = 0.0;
    const auto& hidden = cache.inputs.back();
    std::vector<double> dhidden(hidden.size(), 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      const double d = res.trans[j] - s.gt.trans[j];
      lt += d * d;
      const double g = 2.0 * d / 3.0 * inv_b;
      gtb[j] += g;
      const auto wr = th.w.row(j);
      for (std::size_t k = 0; k < hidden.size(); ++k) {
        gtw[j * hidden.size() + k] += g * hidden[k];
        dhidden[k] += g * wr[k];
      }
    }
    out.loss += lr / nrot + lt / 3.0;

    const auto dz = dense_backward(params.head, cache, drot, out.grads,
                                   head_block0(params), dhidden);
    for (std::size_t j = 0; j < width; ++j) {
      dpool[ri][j] += dz[j] * activate_grad(pool_act, enc[ri].pooled_pre[j],
                                            activate(pool_act, enc[ri].pooled_pre[j]));
      dpool[ti][j] += dz[width + j] *
                      activate_grad(pool_act, enc[ti].pooled_pre[j],
                                    activate(pool_act, enc[ti].pooled_pre[j]));
    }
  }
  out.loss *= inv_b;
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::kNonFiniteLoss, "pose loss is not finite");
  for (std::size_t c = 0; c < clouds.size(); ++c)
    encoder_backward(params.encoder, eng.enc_w, *clouds[c], enc[c], dpool[c], out.grads);
  return out;
}

LossAndGrad loss_and_grad(const RegressorParams& params,
                          std::span<const SubspaceExample> batch, LossMode mode) {
  if (mode == LossMode::kDimrGeodesicFd)
    return finite_difference_grad(params, batch, mode, kDimrStep);
  if (batch.empty()) throw Error(ErrorCode::kShapeMismatch, "empty batch");
  BatchCache cache;
  batch_forward(params.head, stack_images(batch), batch.size(), cache);
  const std::size_t width = params.head.back().out();
  LossAndGrad out{0.0, GradientBundle::zeros_like(params)};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double nt = static_cast<double>(width);
  std::vector<double> dy(cache.output.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto& target = batch[r].target->target.data;
    if (width != target.size())
      throw Error(ErrorCode::kTagMismatch, "network output does not match the symvec target");
    double l = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      const double d = cache.output[r * width + k] - target[k];
      l += d * d;
      dy[r * width + k] = 2.0 * d / nt * inv_b;
    }
    out.loss += l / nt;
  }
  out.loss *= inv_b;
  if (!std::isfinite(out.loss))
    throw Error(ErrorCode::kNonFiniteLoss, "subspace loss is not finite");
  batch_backward(params.head, cache, dy, out.grads, 0);
  return out;
}

double loss_value(const RegressorParams& params, std::span<const PoseSample> batch,
                  LossMode mode) {
  return pose_loss(params, batch, mode, nullptr);
}

double loss_value(const RegressorParams& params, std::span<const SubspaceExample> batch,
                  LossMode mode) {
  return subspace_loss(params, batch, mode, nullptr);
}

std::uint64_t activation_signature(const RegressorParams& params,
                                   std::span<const PoseSample> batch) {
  std::uint64_t sig = 0;
  pose_loss(params, batch, LossMode::kDemrExtrinsic, &sig);
  return sig;
}

std::uint64_t activation_signature(const RegressorParams& params,
                                   std::span<const SubspaceExample> batch) {
  std::uint64_t sig = 0;
  subspace_loss(params, batch, LossMode::kDemrExtrinsic, &sig);
  return sig;
}

// ---- Adam -------------------------------------------------------------------

OptimizerState OptimizerState::for_params(const RegressorParams& p, AdamConfig config) {
  return {config, 0, GradientBundle::zeros_like(p), GradientBundle::zeros_like(p)};
}

void adam_step(RegressorParams& params, const GradientBundle& grads, OptimizerState& state) {
  if (!grads.congruent_with(params) || !state.m.congruent_with(params) ||
      !state.v.congruent_with(params))
    throw Error(ErrorCode::kShapeMismatch, "gradient/optimizer state shape mismatch");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  auto blocks = params.blocks();
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    auto& m = state.m.blocks[bi];
    auto& v = state.v.blocks[bi];
    const auto& g = grads.blocks[bi];
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      blocks[bi][k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

// ---- gradient check ---------------------------------------------------------

namespace {

template <typename Batch>
GradCheckReport grad_check_impl(const RegressorParams& params, Batch batch, double h,
                                std::uint64_t seed) {
  if (!(h >= 1e-6 && h <= 1e-3))
    throw Error(ErrorCode::kBadConfig, "grad_check step must lie in [1e-6, 1e-3]");
  const LossAndGrad analytic = loss_and_grad(params, batch, LossMode::kDemrExtrinsic);
  std::uint64_t base_sig = 0;
  any_loss(params, batch, LossMode::kDemrExtrinsic, &base_sig);

  // (block, index) of every parameter, in declaration order.
  std::vector<std::pair<std::size_t, std::size_t>> all;
  const auto sizes = params.blocks();
  for (std::size_t bi = 0; bi < sizes.size(); ++bi)
    for (std::size_t k = 0; k < sizes[bi].size(); ++k) all.emplace_back(bi, k);
  if (all.size() > 10000) {
    Rng rng(seed);
    for (std::size_t i = 0; i < 256; ++i) {
      const std::size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
    }
    all.resize(256);
  }

  GradCheckReport report;
  RegressorParams work = params;
  auto blocks = work.blocks();
  for (const auto& [bi, k] : all) {
    const double orig = blocks[bi][k];
    std::uint64_t sig_up = 0, sig_down = 0;
    blocks[bi][k] = orig + h;
    const double up = any_loss(work, batch, LossMode::kDemrExtrinsic, &sig_up);
    blocks[bi][k] = orig - h;
    const double down = any_loss(work, batch, LossMode::kDemrExtrinsic, &sig_down);
    blocks[bi][k] = orig;
    if (sig_up != base_sig || sig_down != base_sig) {
      ++report.excluded;
      continue;
    }
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.grads.blocks[bi][k];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.checked;
  }
  return report;
}

}  // namespace

GradCheckReport grad_check(const RegressorParams& params, std::span<const PoseSample> batch,
                           double h, std::uint64_t seed) {
  return grad_check_impl(params, batch, h, seed);
}

GradCheckReport grad_check(const RegressorParams& params,
                           std::span<const SubspaceExample> batch, double h,
                           std::uint64_t seed) {
  return grad_check_impl(params, batch, h, seed);
}

}  // namespace demr
