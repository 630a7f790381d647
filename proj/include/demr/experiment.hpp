#pragma once

// Training drivers and the pose / subspace commands.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "demr/config.hpp"
#include "demr/net.hpp"
#include "demr/tasks.hpp"

namespace demr {

struct LossPoint {
  std::size_t iteration = 0;
  double loss = 0.0;
};

struct TrainResult {
  RegressorParams params;
  std::vector<LossPoint> curve;       // batch loss of every iteration
  std::vector<double> epoch_losses;   // mean batch loss of each epoch
  std::size_t convergence_epoch = 0;  // 1-based; 0 when nothing was trained
  double seconds = 0.0;
};

// First epoch (1-based) whose trailing window-10 mean loss lies within 1% of
// the final smoothed value. 0 for an empty history.
std::size_t convergence_epoch(std::span<const double> epoch_losses,
                              std::size_t window = 10, double tolerance = 0.01);

// Minibatch Adam over per-epoch shuffles drawn from `rng`. An epoch is one
// pass over the training set; the last batch of an epoch may be short.
TrainResult train_pose(RegressorParams params, std::span<const PoseSample> train,
                       const TrainConfig& cfg, Rng rng);
TrainResult train_subspace(RegressorParams params, std::span<const SubspaceExample> train,
                           const TrainConfig& cfg, LossMode mode, Rng rng);

// ---- pose ------------------------------------------------------------------

struct PoseRun {
  PoseEvaluation eval;
  TrainResult train;
};

// Generates data, trains (unless stub_gt, which evaluates the encoded ground
// truth instead) and evaluates on the full-range test set.
PoseRun run_pose(const ExperimentConfig& cfg, bool stub_gt = false);

// ---- subspace --------------------------------------------------------------

struct SubspaceVariant {
  std::string name;
  double avg_dg = 0.0;
  std::optional<TrainResult> train;  // empty for baselines
};

struct SubspaceRun {
  std::vector<SubspaceVariant> variants;

  const SubspaceVariant& get(std::string_view name) const;
};

// Variants: "demr", "untrained", "mean_projector"; with dimr_fd also
// "demr_reduced", "dimr_fd_reduced", "untrained_reduced".
SubspaceRun run_subspace(const ExperimentConfig& cfg, bool stub_gt = false,
                         bool dimr_fd = false);

// Decoded average of the training projectors, predicted for every input.
SubspacePredictor mean_projector_predictor(std::span<const SubspaceExample> train,
                                           std::size_t m);

// ---- commands --------------------------------------------------------------

// DEMR_OUT, when set, replaces cfg.output_dir.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

// Writes report.json, stats.csv, percentile.csv and checkpoint.demr.
PoseRun cmd_pose(const ExperimentConfig& cfg, bool stub_gt);
// Writes report.json and stats.csv.
SubspaceRun cmd_subspace(const ExperimentConfig& cfg, bool stub_gt, bool dimr_fd);

// 17 significant digits.
std::string format_double(double x);
// Writes bytes verbatim; throws kIoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace demr
