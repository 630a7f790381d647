#pragma once

// Dataset synthesis and evaluation for the relative-pose (SE(3)) and
// illumination-subspace (Grassmann) experiments.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "demr/grassmann.hpp"
#include "demr/liegroups.hpp"
#include "demr/net.hpp"
#include "demr/samples.hpp"

namespace demr {

// ---- pose task ------------------------------------------------------------

struct PoseDatasetConfig {
  std::size_t points = 256;
  std::size_t train_count = 1024;
  std::size_t test_count = 256;
  SampleMode mode = SampleMode::kSo3;
  double fraction = 1.0;
  // Optional Gaussian jitter added to target clouds (scene units).
  double jitter = 0.0;
  // Base cloud from a CSV file (x,y,z per line) instead of N(0, I3) points.
  std::optional<std::filesystem::path> cloud_csv;
};

struct PoseDataset {
  std::shared_ptr<const PointCloud> base;
  std::vector<PoseSample> train;
  std::vector<PoseSample> test;
};

// Training transforms use `fraction`, test transforms the full range
// (fraction 1) with the same mode. Throws kBadConfig / kBadFraction /
// kIngestError.
PoseDataset gen_pose_dataset(const PoseDatasetConfig& cfg, const Rng& rng);

// Parses "x,y,z" lines; blank lines and lines starting with '#' are skipped.
PointCloud read_cloud_csv(const std::filesystem::path& path);

// p_t = gt applied to every point of p_r.
PointCloud transform_cloud(const RigidTransform& gt, const PointCloud& p_r);

// ---- subspace task --------------------------------------------------------

enum class SplitUnit { kImages, kIdentities };

struct SubspaceDatasetConfig {
  std::size_t n = 64;
  std::size_t m = 5;
  std::size_t identities = 40;
  std::size_t images_per_identity = 64;
  double noise = 0.05;
  double train_ratio = 0.8;
  // kImages: floor(ratio * k) images of every identity train, the rest test.
  // kIdentities: floor(ratio * identities) identities train.
  SplitUnit split = SplitUnit::kImages;
  bool center_pca = false;
  // One file per identity, one flattened image per line (space separated);
  // replaces the synthetic generator when non-empty.
  std::vector<std::filesystem::path> image_files;
};

// All images of one identity and its ground-truth subspace.
struct SubspaceSample {
  std::vector<std::vector<double>> images;
  GrassmannPoint gt;
};

struct SubspaceDataset {
  std::vector<SubspaceSample> identities;
  std::vector<std::shared_ptr<const SubspaceTarget>> targets;  // per identity
  std::vector<SubspaceExample> train;
  std::vector<SubspaceExample> test;
};

SubspaceDataset gen_subspace_dataset(const SubspaceDatasetConfig& cfg, const Rng& rng);

// Reads one image per line (whitespace separated). Throws kIngestError.
std::vector<std::vector<double>> read_image_matrix(const std::filesystem::path& path);

// Top-m left singular vectors of the n x k image matrix (optionally after
// subtracting the mean image). Throws kDimMismatch when k < m or images
// differ in length.
GrassmannPoint pca_subspace(std::span<const std::vector<double>> images, std::size_t m,
                            bool center = false);

// ---- evaluation -----------------------------------------------------------

struct ErrorStats {
  double avg = 0.0;
  double median = 0.0;  // lower middle order statistic
  double std = 0.0;     // population standard deviation
  std::vector<double> per_sample;  // ascending
};

ErrorStats compute_stats(std::vector<double> errors);

struct PosePrediction {
  EmbeddedVector rot;
  Vec3 trans{};
};

using PosePredictor = std::function<PosePrediction(const PoseSample&)>;

struct PoseEvaluation {
  ErrorStats rotation_deg;  // rotation angle of R_gt^T R_est, degrees
  ErrorStats translation;   // ||t_est - t_gt||, scene units
  ErrorStats combined;      // SE(3) geodesic ||log(M_gt^-1 M_est)||
};

PoseEvaluation evaluate_pose(const PosePredictor& predict, std::span<const PoseSample> testset);
// Throws kTagMismatch unless the head emits a rotation tag.
PoseEvaluation evaluate_pose(const RegressorParams& params, std::span<const PoseSample> testset);
// Predictor that returns the encoded ground truth.
PosePredictor oracle_pose_predictor(ReprTag tag);

using SubspacePredictor = std::function<SymVec(const SubspaceExample&)>;

// Mean geodesic D_G between the decoded prediction and the ground truth.
// A SpectralTie is rethrown with the offending sample index.
double evaluate_subspace(const SubspacePredictor& predict,
                         std::span<const SubspaceExample> testset);
double evaluate_subspace(const RegressorParams& params,
                         std::span<const SubspaceExample> testset);
SubspacePredictor oracle_subspace_predictor();

}  // namespace demr
