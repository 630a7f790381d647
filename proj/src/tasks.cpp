#include "demr/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace demr {

PointCloud transform_cloud(const RigidTransform& gt, const PointCloud& p_r) {
  PointCloud out;
  out.reserve(p_r.size());
  for (const Vec3& p : p_r) out.push_back(gt.apply(p));
  return out;
}

PointCloud read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIngestError, "cannot open " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Vec3 p{};
    std::string extra;
    if (!(ss >> p[0] >> p[1] >> p[2]) || (ss >> extra) ||
        !std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw Error(ErrorCode::kIngestError,
                  path.string() + ":" + std::to_string(lineno) + ": expected x,y,z");
    }
    cloud.push_back(p);
  }
  if (cloud.size() < 3)
    throw Error(ErrorCode::kIngestError, path.string() + ": need at least 3 points");
  return cloud;
}

PoseDataset gen_pose_dataset(const PoseDatasetConfig& cfg, const Rng& rng) {
  if (cfg.train_count == 0 || cfg.test_count == 0)
    throw Error(ErrorCode::kBadConfig, "pose dataset needs train and test samples");
  if (!(cfg.jitter >= 0.0)) throw Error(ErrorCode::kBadConfig, "jitter must be >= 0");

  PoseDataset ds;
  if (cfg.cloud_csv) {
    ds.base = std::make_shared<const PointCloud>(read_cloud_csv(*cfg.cloud_csv));
  } else {
    if (cfg.points < 3) throw Error(ErrorCode::kBadConfig, "need at least 3 points");
    Rng cloud_rng = rng.split(0);
    PointCloud base(cfg.points);
    for (Vec3& p : base)
      for (double& x : p) x = cloud_rng.gaussian();
    ds.base = std::make_shared<const PointCloud>(std::move(base));
  }

  Rng jitter_rng = rng.split(3);
  auto make = [&](std::size_t count, double fraction, Rng stream) {
    std::vector<PoseSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const RigidTransform gt = sample_transform_uniform(cfg.mode, fraction, stream);
      PointCloud target = transform_cloud(gt, *ds.base);
      if (cfg.jitter > 0.0)
        for (Vec3& p : target)
          for (double& x : p) x += cfg.jitter * jitter_rng.gaussian();
      out.push_back({ds.base, std::make_shared<const PointCloud>(std::move(target)), gt});
    }
    return out;
  };
  ds.train = make(cfg.train_count, cfg.fraction, rng.split(1));
  ds.test = make(cfg.test_count, 1.0, rng.split(2));
  return ds;
}

std::vector<std::vector<double>> read_image_matrix(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIngestError, "cannot open " + path.string());
  std::vector<std::vector<double>> images;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<double> img;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        img.push_back(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kIngestError,
                    path.string() + ":" + std::to_string(lineno) + ": bad value '" + tok + "'");
      }
    }
    if (!images.empty() && img.size() != images.front().size())
      throw Error(ErrorCode::kIngestError,
                  path.string() + ":" + std::to_string(lineno) + ": ragged image row");
    images.push_back(std::move(img));
  }
  if (images.empty()) throw Error(ErrorCode::kIngestError, path.string() + ": no images");
  return images;
}

GrassmannPoint pca_subspace(std::span<const std::vector<double>> images, std::size_t m,
                            bool center) {
  if (images.size() < m || images.empty())
    throw Error(ErrorCode::kDimMismatch, "need at least m images");
  const std::size_t n = images.front().size();
  Matrix a(n, images.size());
  for (std::size_t j = 0; j < images.size(); ++j) {
    if (images[j].size() != n) throw Error(ErrorCode::kDimMismatch, "images differ in length");
    for (std::size_t i = 0; i < n; ++i) a(i, j) = images[j][i];
  }
  if (center) {
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < images.size(); ++j) mean += a(i, j);
      mean /= static_cast<double>(images.size());
      for (std::size_t j = 0; j < images.size(); ++j) a(i, j) -= mean;
    }
  }
  return GrassmannPoint(svd(a).u.left_cols(m));
}

SubspaceDataset gen_subspace_dataset(const SubspaceDatasetConfig& cfg, const Rng& rng) {
  if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0))
    throw Error(ErrorCode::kBadConfig, "train_ratio must lie in (0, 1)");
  if (!(cfg.noise >= 0.0)) throw Error(ErrorCode::kBadConfig, "noise must be >= 0");

  SubspaceDataset ds;
  if (!cfg.image_files.empty()) {
    for (const auto& path : cfg.image_files) {
      auto images = read_image_matrix(path);
      GrassmannPoint gt = pca_subspace(images, cfg.m, cfg.center_pca);
      ds.identities.push_back({std::move(images), std::move(gt)});
    }
  } else {
    if (cfg.m < 1 || cfg.m >= cfg.n || cfg.identities < 2 ||
        cfg.images_per_identity < cfg.m)
      throw Error(ErrorCode::kBadConfig, "need 1 <= m < n, >= 2 identities, >= m images each");
    for (std::size_t id = 0; id < cfg.identities; ++id) {
      Rng r = rng.split(id);
      GrassmannPoint gt = sample_subspace_uniform(cfg.n, cfg.m, r);
      std::vector<std::vector<double>> images;
      for (std::size_t j = 0; j < cfg.images_per_identity; ++j) {
        std::vector<double> c(cfg.m);
        for (double& x : c) x = r.gaussian();
        std::vector<double> img(cfg.n);
        for (std::size_t i = 0; i < cfg.n; ++i) {
          img[i] = dot(gt.frame().row(i), c) + cfg.noise * r.gaussian();
        }
        images.push_back(std::move(img));
      }
      ds.identities.push_back({std::move(images), std::move(gt)});
    }
  }

  for (const auto& s : ds.identities) {
    ds.targets.push_back(std::make_shared<const SubspaceTarget>(
        SubspaceTarget{s.gt, sym_vec(embed_projector(s.gt))}));
  }
  const std::size_t ids = ds.identities.size();
  const std::size_t train_ids =
      static_cast<std::size_t>(std::floor(cfg.train_ratio * static_cast<double>(ids)));
  for (std::size_t id = 0; id < ids; ++id) {
    const auto& images = ds.identities[id].images;
    const std::size_t train_imgs = static_cast<std::size_t>(
        std::floor(cfg.train_ratio * static_cast<double>(images.size())));
    for (std::size_t j = 0; j < images.size(); ++j) {
      const bool is_train = cfg.split == SplitUnit::kImages ? j < train_imgs : id < train_ids;
      (is_train ? ds.train : ds.test).push_back({images[j], ds.targets[id]});
    }
  }
  return ds;
}

ErrorStats compute_stats(std::vector<double> errors) {
  ErrorStats s;
  if (errors.empty()) return s;
  std::sort(errors.begin(), errors.end());
  const double n = static_cast<double>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.avg = sum / n;
  double ss = 0.0;
  for (double e : errors) ss += (e - s.avg) * (e - s.avg);
  s.std = std::sqrt(ss / n);
  s.median = errors[(errors.size() - 1) / 2];
  s.per_sample = std::move(errors);
  return s;
}

PoseEvaluation evaluate_pose(const PosePredictor& predict, std::span<const PoseSample> testset) {
  std::vector<double> rot, trans, comb;
  for (const PoseSample& s : testset) {
    const PosePrediction p = predict(s);
    if (!is_rotation_tag(p.rot.tag))
      throw Error(ErrorCode::kTagMismatch, "pose prediction needs a rotation tag");
    const RigidTransform est{to_rotation(p.rot), p.trans};
    rot.push_back(dist_geodesic(s.gt.rot, est.rot) * (180.0 / std::numbers::pi));
    trans.push_back(norm(est.trans - s.gt.trans));
    comb.push_back(dist_geodesic(s.gt, est));
  }
  return {compute_stats(std::move(rot)), compute_stats(std::move(trans)),
          compute_stats(std::move(comb))};
}

PoseEvaluation evaluate_pose(const RegressorParams& params, std::span<const PoseSample> testset) {
  if (!is_rotation_tag(params.rot_head_tag))
    throw Error(ErrorCode::kTagMismatch, "pose evaluation needs a rotation head");
  return evaluate_pose(
      [&](const PoseSample& s) {
        PoseOutput out = forward_pose(params, *s.p_r, *s.p_t);
        return PosePrediction{std::move(out.rot), out.trans};
      },
      testset);
}

PosePredictor oracle_pose_predictor(ReprTag tag) {
  return [tag](const PoseSample& s) {
    return PosePrediction{encode_rotation(tag, s.gt.rot), s.gt.trans};
  };
}

double evaluate_subspace(const SubspacePredictor& predict,
                         std::span<const SubspaceExample> testset) {
  if (testset.empty()) throw Error(ErrorCode::kShapeMismatch, "empty test set");
  double total = 0.0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const SubspaceExample& s = testset[i];
    const SymVec pred = predict(s);
    try {
      const GrassmannPoint est = inverse_embed_grassmann(sym_unvec(pred), s.target->gt.m());
      total += dist_grassmann(est, s.target->gt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSpectralTie) throw;
      throw Error(ErrorCode::kSpectralTie,
                  "test sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return total / static_cast<double>(testset.size());
}

double evaluate_subspace(const RegressorParams& params,
                         std::span<const SubspaceExample> testset) {
  return evaluate_subspace(
      [&](const SubspaceExample& s) { return forward_subspace(params, s.image).prediction; },
      testset);
}

SubspacePredictor oracle_subspace_predictor() {
  return [](const SubspaceExample& s) { return s.target->target; };
}

}  // namespace demr
