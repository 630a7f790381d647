// Acceptance gate: runs criteria 1-9 at their pinned tolerances and prints
// one PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "demr/config.hpp"
#include "demr/experiment.hpp"
#include "demr/grassmann.hpp"
#include "demr/liegroups.hpp"
#include "demr/props.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using demr::Mat3;
using demr::RotationMatrix;
using demr::operator*;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

demr::ExperimentConfig shipped(const char* name) {
  return demr::parse_config(demr::read_config_file(fs::path(DEMR_CONFIG_DIR) / name));
}

// ---- 1 ----------------------------------------------------------------------

Outcome nearest_rotation() {
  const auto t0 = Clock::now();
  demr::Rng rng(101);
  double worst = -1e300;  // max over pairs of ||M - R*|| - ||M - R||
  for (int i = 0; i < 1000; ++i) {
    Mat3 m;
    for (double& x : m.a) x = rng.gaussian();
    const double best = demr::frobenius_norm(m - demr::project_so3_svd(m).matrix());
    for (int k = 0; k < 10000; ++k) {
      const double d = demr::frobenius_norm(m - demr::sample_rotation_uniform(rng).matrix());
      worst = std::max(worst, best - d);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0,
          fmt("max(||M-R*|| - ||M-R||) = %.3e over 1e7 pairs (tol 1e-9), %.1f s (< 60)", worst,
              secs)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome roundtrips() {
  const auto t0 = Clock::now();
  demr::Rng rng(202);
  double so3 = 0.0, se3 = 0.0, emb = 0.0, grass = 0.0;
  auto vec_err = [](const demr::Vec3& a, const demr::Vec3& b) {
    return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
  };
  for (int i = 0; i < 100000; ++i) {
    // Tangent vectors uniform in the ball of radius 3 (< pi).
    demr::Vec3 w{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    w = (3.0 * std::cbrt(rng.uniform()) / demr::norm(w)) * w;
    const demr::Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    so3 = std::max(so3, vec_err(demr::log_so3(demr::exp_so3({w})).omega, w));
    const RotationMatrix r = demr::sample_rotation_uniform(rng);
    so3 = std::max(so3, demr::max_abs(demr::exp_so3(demr::log_so3(r)).matrix() - r.matrix()));

    const auto xi = demr::log_se3(demr::exp_se3({w, v}));
    se3 = std::max({se3, vec_err(xi.omega, w), vec_err(xi.v, v)});
    const demr::RigidTransform t{r, v};
    const auto back = demr::exp_se3(demr::log_se3(t));
    se3 = std::max({se3, demr::max_abs(back.rot.matrix() - r.matrix()), vec_err(back.trans, v)});

    const auto r9 = demr::to_rotation(demr::embed(r));
    const auto r6 = demr::to_rotation(demr::encode_rotation(demr::ReprTag::kSixD6, r));
    const auto t12 = std::get<demr::RigidTransform>(demr::inverse_embed(demr::embed(t)));
    emb = std::max({emb, demr::max_abs(r9.matrix() - r.matrix()),
                    demr::max_abs(r6.matrix() - r.matrix()),
                    demr::max_abs(t12.rot.matrix() - r.matrix()), vec_err(t12.trans, v)});
  }
  for (int i = 0; i < 1000; ++i) {
    const demr::GrassmannPoint g = demr::sample_subspace_uniform(20, 5, rng);
    const demr::Projector p = demr::embed_projector(g);
    const demr::Matrix back = demr::sym_unvec(demr::sym_vec(p));
    const demr::GrassmannPoint h = demr::inverse_embed_grassmann(back, 5);
    grass = std::max({grass, demr::max_abs(back - p.p), demr::dist_grassmann(g, h),
                      demr::max_abs(demr::embed_projector(h).p - p.p)});
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({so3, se3, emb, grass});
  return {worst <= 1e-8 && secs < 60.0,
          fmt("max error SO3 %.2e, SE3 %.2e, embed %.2e, Grassmann %.2e (tol 1e-8), %.1f s (< 60)",
              so3, se3, emb, grass, secs)};
}

// ---- 3-6 --------------------------------------------------------------------

Outcome chordal_identity() {
  const demr::PropRow id = demr::check_chordal_identity(10000, 303);
  bool seq_ok = true;
  double worst_ratio = 0.0;
  for (const auto& row : demr::check_sequence_to_zero(304)) {
    seq_ok = seq_ok && row.pass;
    worst_ratio = std::max(worst_ratio, row.statistic);
  }
  return {id.pass && seq_ok,
          fmt("identity error %.2e on 1e4 pairs (tol 1e-9); max d_geo/d_ext over k=1..8 = %.9f "
              "(<= 1)",
              id.statistic, worst_ratio)};
}

Outcome rotation_mle() {
  const auto t0 = Clock::now();
  const auto full = demr::mle_rotation_gap(0.05, 10000, 20, 404);
  const auto half = demr::mle_rotation_gap(0.025, 10000, 20, 404);
  const double shrink = full.mean_dist / half.mean_dist;
  const double secs = seconds_since(t0);
  return {full.max_dist <= 5e-3 && shrink >= 2.0 && secs < 120.0,
          fmt("max gap %.2e rad at sigma 0.05 (tol 5e-3); mean gap shrinks %.2fx at sigma 0.025 "
              "(>= 2); %.1f s (< 120)",
              full.max_dist, shrink, secs)};
}

Outcome grassmann_mle() {
  const auto g = demr::mle_grassmann(20, 5, 0.01, 10000, 100, 505);
  return {g.dist_to_gt <= 0.01 && g.margin > 0.0,
          fmt("D_G to gt %.2e (tol 0.01); min Frobenius margin over 100 candidates %.3e (> 0)",
              g.dist_to_gt, g.margin)};
}

Outcome gradients() {
  const auto pose = shipped("pose.json");
  const auto sub = shipped("subspace.json");
  double worst = 0.0;
  bool ok = true;
  for (std::uint64_t s = 0; s < 3; ++s) {
    for (const auto& row : {demr::check_pose_gradients(pose, s), demr::check_subspace_gradients(sub, s)}) {
      ok = ok && row.pass;
      worst = std::max(worst, row.statistic);
    }
  }
  return {ok, fmt("max relative error %.2e over pose and subspace nets, seeds 0-2 (tol 1e-5)", worst)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome pose_trend() {
  const auto t0 = Clock::now();
  const std::vector<demr::ReprTag> tags{demr::ReprTag::kEuler3, demr::ReprTag::kAxis3,
                                        demr::ReprTag::kSixD6, demr::ReprTag::kNine9};
  const double fractions[2] = {0.2, 0.8};
  double err[4][2] = {};
  for (std::size_t t = 0; t < tags.size(); ++t) {
    for (int f = 0; f < 2; ++f) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        demr::ExperimentConfig cfg = shipped("pose.json");
        cfg.tag = tags[t];
        cfg.pose_data.mode = demr::SampleMode::kSo3;
        cfg.pose_data.fraction = fractions[f];
        cfg.pose_data.points = 256;
        cfg.train.iterations = 2000;
        cfg.seed = seed;
        err[t][f] += demr::run_pose(cfg).eval.rotation_deg.avg / 3.0;
      }
      std::printf("  %-6s fraction %.1f: mean rotation error %.2f deg\n",
                  std::string(demr::tag_name(tags[t])).c_str(), fractions[f], err[t][f]);
      std::fflush(stdout);
    }
  }
  const double baseline = std::min(err[0][0], err[1][0]);
  const bool ratio_ok = err[2][0] <= baseline / 1.3 && err[3][0] <= baseline / 1.3;
  bool monotone = true;
  for (auto& e : err) monotone = monotone && e[1] < e[0];
  const double secs = seconds_since(t0);
  return {ratio_ok && monotone && secs <= 900.0,
          fmt("at 0.2: sixd6 %.2f, nine9 %.2f vs bound %.2f (= min(euler3 %.2f, axis3 %.2f)/1.3) "
              "[%s]; monotone 0.2->0.8 [%s]; %.0f s (<= 900)",
              err[2][0], err[3][0], baseline / 1.3, err[0][0], err[1][0],
              ratio_ok ? "ok" : "violated", monotone ? "ok" : "violated", secs)};
}

// ---- 8 ----------------------------------------------------------------------

Outcome subspace_trend() {
  const auto t0 = Clock::now();
  bool ratios_ok = true;
  int ordered = 0;
  std::string rows;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    demr::ExperimentConfig cfg = shipped("subspace.json");
    cfg.seed = seed;
    const auto run = demr::run_subspace(cfg, false, true);
    const double demr = run.get("demr").avg_dg;
    const double untrained = run.get("untrained").avg_dg;
    const double mean = run.get("mean_projector").avg_dg;
    const std::size_t ce_demr = run.get("demr_reduced").train->convergence_epoch;
    const std::size_t ce_dimr = run.get("dimr_fd_reduced").train->convergence_epoch;
    ratios_ok = ratios_ok && demr <= 0.5 * untrained && demr <= 0.8 * mean;
    if (ce_demr < ce_dimr) ++ordered;
    std::printf("  seed %llu: D_G demr %.4f, untrained %.4f, mean projector %.4f; "
                "convergence epoch demr %zu vs dimr-fd %zu (reduced problem)\n",
                static_cast<unsigned long long>(seed), demr, untrained, mean, ce_demr, ce_dimr);
    std::fflush(stdout);
  }
  const double secs = seconds_since(t0);
  return {ratios_ok && ordered >= 2 && secs <= 900.0,
          fmt("D_G ratios vs untrained (<= 0.5) and mean projector (<= 0.8) [%s]; demr converges "
              "first on %d of 3 seeds (>= 2); %.0f s (<= 900)",
              ratios_ok ? "ok" : "violated", ordered, secs)};
}

// ---- 9 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "demr_acceptance_determinism";
  fs::remove_all(root);
  bool same = true;
  std::string mismatched;
  auto twice = [&](const char* config, const std::vector<std::string>& files,
                   const std::function<void(const demr::ExperimentConfig&)>& command) {
    for (const char* run : {"a", "b"}) {
      demr::ExperimentConfig cfg = shipped(config);
      cfg.output_dir = root / config / run;
      command(cfg);
    }
    for (const auto& f : files) {
      const std::string a = slurp(root / config / "a" / f), b = slurp(root / config / "b" / f);
      if (a.empty() || a != b) {
        same = false;
        mismatched += std::string(" ") + config + ":" + f;
      }
    }
  };
  // DEMR_OUT would redirect every run to one directory.
  unsetenv("DEMR_OUT");
  twice("pose.json", {"stats.csv", "percentile.csv"},
        [](const demr::ExperimentConfig& c) { demr::cmd_pose(c, false); });
  twice("subspace.json", {"stats.csv"},
        [](const demr::ExperimentConfig& c) { demr::cmd_subspace(c, false, false); });
  twice("props.json", {"props.csv"}, [](const demr::ExperimentConfig& c) { demr::cmd_props(c); });
  fs::remove_all(root);
  return {same, same ? "pose, subspace and props CSVs byte-identical across reruns"
                     : "differing outputs:" + mismatched};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> all{
      {1, "nearest-rotation oracle", nearest_rotation},
      {2, "exp/log, embedding and Grassmann roundtrips", roundtrips},
      {3, "chordal-geodesic identity and sequence to zero", chordal_identity},
      {4, "chordal mean approximates the Frechet mean", rotation_mle},
      {5, "Grassmann projector-mean estimator", grassmann_mle},
      {6, "gradient correctness", gradients},
      {7, "pose representation trend", pose_trend},
      {8, "subspace regression trend", subspace_trend},
      {9, "determinism", determinism},
  };
  // Optional arguments select criteria by number.
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    std::printf("criterion %d: %s\n", c.id, c.name);
    std::fflush(stdout);
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
