#pragma once

#include <memory>
#include <vector>

#include "demr/grassmann.hpp"
#include "demr/liegroups.hpp"

namespace demr {

using PointCloud = std::vector<Vec3>;

// A reference/target point-cloud pair related by `gt`:
// p_t[i] = gt.rot * p_r[i] + gt.trans (before optional jitter). Clouds are
// shared so that many samples can reference one base cloud.
struct PoseSample {
  std::shared_ptr<const PointCloud> p_r;
  std::shared_ptr<const PointCloud> p_t;
  RigidTransform gt;
};

// Ground truth for one identity of the subspace task.
struct SubspaceTarget {
  GrassmannPoint gt;
  SymVec target;  // sym_vec(gt gt^T), the regression target
};

// One network input image and the subspace it belongs to.
struct SubspaceExample {
  std::vector<double> image;
  std::shared_ptr<const SubspaceTarget> target;
};

}  // namespace demr
