#pragma once

// A small differentiable regressor: dense layers, a shared per-point encoder
// with max-pooling for point-cloud pairs, representation heads, analytic
// reverse-mode gradients, Adam, and a finite-difference gradient checker.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demr/liegroups.hpp"
#include "demr/matlin.hpp"
#include "demr/rng.hpp"
#include "demr/samples.hpp"

namespace demr {

enum class Activation { kRelu, kTanh, kLinear };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Matrix w;  // out x in
  std::vector<double> b;
  Activation act = Activation::kLinear;

  std::size_t in() const noexcept { return w.cols(); }
  std::size_t out() const noexcept { return w.rows(); }
};

// Glorot-uniform weights, zero biases.
DenseLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng);

struct RegressorParams {
  std::vector<DenseLayer> encoder;  // per-point, shared by both clouds
  std::vector<DenseLayer> head;
  ReprTag rot_head_tag = ReprTag::kNine9;
  // Reads the input of the last head layer.
  std::optional<DenseLayer> trans_head;

  // Weight and bias arrays in declaration order: encoder, head, trans_head.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;
  bool is_pose() const noexcept { return !encoder.empty(); }
};

struct PoseArchitecture {
  std::vector<std::size_t> encoder_widths{32, 64};
  std::vector<std::size_t> head_widths{128};
};

struct SubspaceArchitecture {
  std::size_t input = 64;
  std::vector<std::size_t> hidden{256, 256};
  std::size_t ambient = 64;  // output is symvec_length(ambient)
  Activation activation = Activation::kRelu;  // hidden layers
};

// Encoder 3 -> widths (relu), max-pool per cloud, concat, head (tanh hidden
// layers, linear output of tag_length(tag)), linear 3-output translation head.
RegressorParams make_pose_regressor(ReprTag tag, const PoseArchitecture& arch, Rng& rng);
// Dense stack input -> hidden (arch.activation) -> symvec_length(ambient) (linear).
RegressorParams make_subspace_regressor(const SubspaceArchitecture& arch, Rng& rng);

// ∂loss/∂parameter, congruent with RegressorParams::blocks().
struct GradientBundle {
  std::vector<std::vector<double>> blocks;

  static GradientBundle zeros_like(const RegressorParams& p);
  bool congruent_with(const RegressorParams& p) const;
};

// ---- forward / backward -------------------------------------------------

struct DenseCache {
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> output;
};

struct CloudEncoding {
  std::vector<double> pooled_pre;    // max over points of the last pre-activation
  std::vector<std::uint32_t> argmax; // lowest index on ties
};

struct PoseCache {
  CloudEncoding ref;
  CloudEncoding target;
  DenseCache head;
};

struct PoseOutput {
  EmbeddedVector rot;
  Vec3 trans{};
  PoseCache cache;
};

PoseOutput forward_pose(const RegressorParams& params, const PointCloud& p_r,
                        const PointCloud& p_t);

struct SubspaceOutput {
  SymVec prediction;
  DenseCache cache;
};

// Throws kShapeMismatch when x does not match the first layer.
SubspaceOutput forward_subspace(const RegressorParams& params,
                                std::span<const double> x);

enum class LossMode { kDemrExtrinsic, kDimrGeodesicFd };

std::string_view loss_mode_name(LossMode mode);

struct LossAndGrad {
  double loss = 0.0;
  GradientBundle grads;
};

// kDemrExtrinsic: MSE against the embedded target (plus translation MSE for
// pose), gradients by backpropagation. kDimrGeodesicFd: mean geodesic
// distance after the inverse embedding, gradients by central differences
// (step 1e-6) over every parameter. Throws kTagMismatch, kNonFiniteLoss.
LossAndGrad loss_and_grad(const RegressorParams& params,
                          std::span<const PoseSample> batch, LossMode mode);
LossAndGrad loss_and_grad(const RegressorParams& params,
                          std::span<const SubspaceExample> batch, LossMode mode);

double loss_value(const RegressorParams& params, std::span<const PoseSample> batch,
                  LossMode mode);
double loss_value(const RegressorParams& params,
                  std::span<const SubspaceExample> batch, LossMode mode);

// Hash of every relu mask and max-pool argmax the batch produces; a change
// means the loss is not smooth between the two parameter settings.
std::uint64_t activation_signature(const RegressorParams& params,
                                   std::span<const PoseSample> batch);
std::uint64_t activation_signature(const RegressorParams& params,
                                   std::span<const SubspaceExample> batch);

// ---- optimizer ------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  GradientBundle m;
  GradientBundle v;

  static OptimizerState for_params(const RegressorParams& p, AdamConfig config = {});
};

// Bias-corrected Adam update in place. Throws kShapeMismatch.
void adam_step(RegressorParams& params, const GradientBundle& grads,
               OptimizerState& state);

// ---- gradient check -------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Parameters whose ±h perturbation flips a relu mask or pooling argmax.
  std::size_t excluded = 0;
};

// Central differences with step h in [1e-6, 1e-3] against the extrinsic
// loss's analytic gradient; relative error |a - n| / max(1e-8, |a| + |n|).
// Every parameter is checked, or a seeded random subset of 256 when there
// are more than 1e4.
GradCheckReport grad_check(const RegressorParams& params,
                           std::span<const PoseSample> batch, double h,
                           std::uint64_t seed = 0);
GradCheckReport grad_check(const RegressorParams& params,
                           std::span<const SubspaceExample> batch, double h,
                           std::uint64_t seed = 0);

// ---- checkpoints ----------------------------------------------------------

// "DEMR" | u32 version | u64 header length | JSON header | u64 block count |
// per block: u64 length, little-endian float64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const RegressorParams& params);
RegressorParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const RegressorParams& params);
RegressorParams load_checkpoint(const std::filesystem::path& path);

}  // namespace demr
