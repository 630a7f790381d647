#include "demr/props.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "demr/experiment.hpp"
#include "demr/grassmann.hpp"
#include "demr/liegroups.hpp"

namespace demr {

namespace {

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    const double n = norm(v);
    if (n > 1e-6) return (1.0 / n) * v;
  }
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

constexpr double kGradStep = 1e-4;
constexpr double kGradTolerance = 1e-5;
constexpr std::size_t kGradBatch = 4;

}  // namespace

PropRow check_chordal_identity(std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const RotationMatrix a = sample_rotation_uniform(rng);
    const RotationMatrix b = sample_rotation_uniform(rng);
    const double chordal = frobenius_norm(a.matrix() - b.matrix());
    const double geo = dist_geodesic(a, b);
    worst = std::max(worst, std::abs(chordal - 2.0 * std::sqrt(2.0) * std::abs(std::sin(geo / 2))));
  }
  return {"chordal_geodesic_identity", worst, 1e-9, worst <= 1e-9};
}

std::vector<PropRow> check_sequence_to_zero(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PropRow> rows;
  for (int k = 1; k <= 8; ++k) {
    const double target = std::pow(10.0, -k);
    const double angle = 2.0 * std::asin(target / (2.0 * std::sqrt(2.0)));
    const RotationMatrix a = sample_rotation_uniform(rng);
    const RotationMatrix b = a * exp_so3({angle * random_unit(rng)});
    const double ratio = dist_geodesic(a, b) / frobenius_norm(a.matrix() - b.matrix());
    rows.push_back({"geodesic_below_chordal_1e-" + std::to_string(k), ratio, 1.0, ratio <= 1.0});
  }
  return rows;
}

MleRotationStats mle_rotation_gap(double sigma, std::size_t samples, std::size_t means,
                                  std::uint64_t seed) {
  const Rng root(seed);
  MleRotationStats out;
  std::vector<RotationMatrix> cloud(samples);
  for (std::size_t j = 0; j < means; ++j) {
    Rng rng = root.split(j);
    const auto g = ConcentratedGaussianSO3::isotropic(sample_rotation_uniform(rng), sigma);
    for (auto& r : cloud) r = sample_concentrated(g, rng);
    const double d = dist_geodesic(chordal_mean_project(cloud), frechet_mean(cloud));
    out.max_dist = std::max(out.max_dist, d);
    out.mean_dist += d / static_cast<double>(means);
  }
  return out;
}

MleGrassmannStats mle_grassmann(std::size_t n, std::size_t m, double sigma,
                                std::size_t samples, std::size_t candidates,
                                std::uint64_t seed) {
  Rng rng(seed);
  const GrassmannPoint gt = sample_subspace_uniform(n, m, rng);
  Matrix mean(n, n);
  for (std::size_t i = 0; i < samples; ++i) mean += projector_gaussian_sample(gt, sigma, rng);
  mean *= 1.0 / static_cast<double>(samples);

  const GrassmannPoint est = inverse_embed_grassmann(mean, m);
  const double best = frobenius_norm(embed_projector(est).p - mean);
  MleGrassmannStats out;
  out.dist_to_gt = dist_grassmann(est, gt);
  out.margin = std::numeric_limits<double>::infinity();
  out.candidates = candidates;
  for (std::size_t c = 0; c < candidates; ++c) {
    Matrix u = est.frame();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) u(i, j) += 0.05 * rng.gaussian();
    const GrassmannPoint cand(gram_schmidt(u));
    out.margin = std::min(out.margin, frobenius_norm(embed_projector(cand).p - mean) - best);
  }
  return out;
}

PropRow check_pose_gradients(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  PoseDatasetConfig data = cfg.pose_data;
  data.train_count = kGradBatch;
  data.test_count = 1;
  const PoseDataset ds = gen_pose_dataset(data, root.split(1));
  Rng init = root.split(2);
  const RegressorParams params = make_pose_regressor(cfg.tag, cfg.pose_arch, init);
  const GradCheckReport r = grad_check(params, ds.train, kGradStep, seed);
  return {"grad_check_pose_seed" + std::to_string(seed), r.max_rel_error, kGradTolerance,
          r.checked > 0 && r.max_rel_error <= kGradTolerance};
}

PropRow check_subspace_gradients(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  const SubspaceDataset ds = gen_subspace_dataset(cfg.subspace_data, root.split(1));
  const std::vector<SubspaceExample> batch(ds.train.begin(),
                                           ds.train.begin() + std::min(kGradBatch, ds.train.size()));
  Rng init = root.split(2);
  const RegressorParams params = make_subspace_regressor(
      {.input = batch.front().image.size(), .hidden = cfg.hidden_widths,
       .ambient = cfg.subspace_data.n, .activation = cfg.hidden_activation},
      init);
  const GradCheckReport r = grad_check(params, batch, kGradStep, seed);
  return {"grad_check_subspace_seed" + std::to_string(seed), r.max_rel_error, kGradTolerance,
          r.checked > 0 && r.max_rel_error <= kGradTolerance};
}

std::vector<PropRow> run_props(const ExperimentConfig& cfg) {
  const PropsConfig& p = cfg.props;
  const Rng root(cfg.seed);
  std::vector<PropRow> rows;
  rows.push_back(check_chordal_identity(p.pairs, root.split(1).seed()));
  for (auto& r : check_sequence_to_zero(root.split(2).seed())) rows.push_back(std::move(r));

  const std::uint64_t mle_seed = root.split(3).seed();
  const MleRotationStats full = mle_rotation_gap(p.sigma, p.samples, p.means, mle_seed);
  const MleRotationStats half = mle_rotation_gap(p.sigma / 2, p.samples, p.means, mle_seed);
  rows.push_back({"rotation_mle_gap_sigma=" + short_num(p.sigma), full.max_dist, 5e-3,
                  full.max_dist <= 5e-3});
  rows.push_back({"rotation_mle_gap_sigma=" + short_num(p.sigma / 2), half.max_dist, 5e-3,
                  half.max_dist <= 5e-3});
  const double shrink = full.mean_dist / half.mean_dist;
  rows.push_back({"rotation_mle_gap_shrink_on_halving", shrink, 2.0, shrink >= 2.0});

  const MleGrassmannStats g = mle_grassmann(20, 5, 0.01, p.samples, 100, root.split(4).seed());
  rows.push_back({"grassmann_mle_dist_to_gt", g.dist_to_gt, 0.01, g.dist_to_gt <= 0.01});
  rows.push_back({"grassmann_mle_beats_candidates", g.margin, 0.0, g.margin > 0.0});

  for (std::uint64_t s = 0; s < 3; ++s) rows.push_back(check_pose_gradients(cfg, s));
  for (std::uint64_t s = 0; s < 3; ++s) rows.push_back(check_subspace_gradients(cfg, s));
  return rows;
}

bool cmd_props(const ExperimentConfig& cfg) {
  const auto dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  const auto rows = run_props(cfg);
  std::string csv = "check,statistic,threshold,pass\n";
  bool all = true;
  for (const auto& r : rows) {
    csv += r.check + "," + format_double(r.statistic) + "," + format_double(r.threshold) + "," +
           (r.pass ? "true" : "false") + "\n";
    all = all && r.pass;
  }
  write_text_file(dir / "props.csv", csv);
  return all;
}

}  // namespace demr
