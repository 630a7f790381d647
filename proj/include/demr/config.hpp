#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "demr/net.hpp"
#include "demr/tasks.hpp"

namespace demr {

enum class TaskKind { kPose, kSubspace, kProps };

std::string_view task_name(TaskKind task);

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch = 32;
  double lr = 1e-3;
};

// Reduced-size problem on which the finite-difference geodesic (DIMR)
// competitor and a matching extrinsic (DEMR) run are trained.
struct DimrFdConfig {
  SubspaceDatasetConfig data;
  std::vector<std::size_t> hidden_widths{8};
  TrainConfig train;
};

struct PropsConfig {
  double sigma = 0.05;
  std::size_t samples = 10000;
  std::size_t means = 20;
  std::size_t pairs = 10000;
};

struct ExperimentConfig {
  TaskKind task = TaskKind::kPose;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  ReprTag tag = ReprTag::kNine9;
  PoseDatasetConfig pose_data;
  PoseArchitecture pose_arch;

  SubspaceDatasetConfig subspace_data;
  std::vector<std::size_t> hidden_widths{256, 256};
  Activation hidden_activation = Activation::kRelu;  // also used by the dimr_fd network
  DimrFdConfig dimr;

  TrainConfig train;
  PropsConfig props;

  // The validated configuration document (after command-line overrides).
  nlohmann::json source;
};

// The published schema (configs/experiment.schema.json), compiled in.
const nlohmann::json& experiment_schema();

// Checks `doc` against the subset of JSON Schema the published schema uses
// (type, enum, required, additionalProperties, bounds, items, minItems).
// Returns one message per violation; empty when valid.
std::vector<std::string> schema_violations(const nlohmann::json& doc,
                                           const nlohmann::json& schema);

// Validates and fills defaults; throws kBadConfig.
ExperimentConfig parse_config(const nlohmann::json& doc);
// Reads and parses a JSON file; throws kIoError / kBadConfig.
nlohmann::json read_config_file(const std::filesystem::path& path);

}  // namespace demr
