#pragma once

// Numerical checks of the embedding properties: chordal/geodesic identity,
// chordal-mean versus Frechet-mean agreement on SO(3), the projector-mean
// estimator on the Grassmannian, and backprop correctness.

#include <cstdint>
#include <string>
#include <vector>

#include "demr/config.hpp"

namespace demr {

struct PropRow {
  std::string check;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// max | ||R1 - R2||_F - 2 sqrt(2) |sin(d_geo / 2)| | over random pairs.
PropRow check_chordal_identity(std::size_t pairs, std::uint64_t seed);

// For k = 1..8, a pair with ||R1 - R2||_F = 10^-k; reports d_geo / d_ext,
// which must not exceed 1.
std::vector<PropRow> check_sequence_to_zero(std::uint64_t seed);

struct MleRotationStats {
  double max_dist = 0.0;   // max over means of d_geo(chordal, Frechet)
  double mean_dist = 0.0;
};

// Isotropic concentrated Gaussian clouds of `samples` rotations around
// `means` uniform random means.
MleRotationStats mle_rotation_gap(double sigma, std::size_t samples, std::size_t means,
                                  std::uint64_t seed);

struct MleGrassmannStats {
  double dist_to_gt = 0.0;   // D_G(inverse of Euclidean mean, gt)
  double margin = 0.0;       // min over candidates of their excess Frobenius distance
  std::size_t candidates = 0;
};

// n x n projector-Gaussian samples around a random m-subspace; the decoded
// mean is compared against `candidates` random perturbations of itself.
MleGrassmannStats mle_grassmann(std::size_t n, std::size_t m, double sigma,
                                std::size_t samples, std::size_t candidates,
                                std::uint64_t seed);

// grad_check at h = 1e-4 on the configured pose and subspace networks.
PropRow check_pose_gradients(const ExperimentConfig& cfg, std::uint64_t seed);
PropRow check_subspace_gradients(const ExperimentConfig& cfg, std::uint64_t seed);

std::vector<PropRow> run_props(const ExperimentConfig& cfg);

// Writes props.csv; returns true when every row passes.
bool cmd_props(const ExperimentConfig& cfg);

}  // namespace demr
