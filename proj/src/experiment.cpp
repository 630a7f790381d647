#include "demr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

namespace demr {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

template <class Sample, class Step>
TrainResult train_loop(RegressorParams params, std::span<const Sample> train,
                       const TrainConfig& cfg, Rng rng, Step step) {
  if (train.empty()) throw Error(ErrorCode::kBadConfig, "empty training set");
  if (cfg.batch == 0) throw Error(ErrorCode::kBadConfig, "batch must be positive");
  const auto t0 = Clock::now();
  OptimizerState state = OptimizerState::for_params(params, AdamConfig{.lr = cfg.lr});

  TrainResult result;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = train.size();
  double epoch_sum = 0.0;
  std::size_t epoch_batches = 0;
  std::vector<Sample> batch;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (cursor == train.size()) {
      if (epoch_batches > 0) result.epoch_losses.push_back(epoch_sum / epoch_batches);
      epoch_sum = 0.0;
      epoch_batches = 0;
      shuffle(order, rng);
      cursor = 0;
    }
    const std::size_t end = std::min(train.size(), cursor + cfg.batch);
    batch.clear();
    for (std::size_t i = cursor; i < end; ++i) batch.push_back(train[order[i]]);
    cursor = end;

    const LossAndGrad lg = step(params, std::span<const Sample>(batch));
    adam_step(params, lg.grads, state);
    result.curve.push_back({it, lg.loss});
    epoch_sum += lg.loss;
    ++epoch_batches;
  }
  // A trailing partial epoch only counts when no full epoch was completed.
  if (cursor == train.size() || result.epoch_losses.empty())
    if (epoch_batches > 0) result.epoch_losses.push_back(epoch_sum / epoch_batches);

  result.convergence_epoch = convergence_epoch(result.epoch_losses);
  result.params = std::move(params);
  result.seconds = elapsed(t0);
  return result;
}

json curve_json(const std::vector<LossPoint>& curve) {
  json out = json::array();
  for (const auto& p : curve) out.push_back({p.iteration, p.loss});
  return out;
}

json train_json(const TrainResult& t) {
  return {{"convergence_epoch", t.convergence_epoch},
          {"epochs", t.epoch_losses.size()},
          {"epoch_losses", t.epoch_losses},
          {"loss_curve", curve_json(t.curve)},
          {"wall_clock_seconds", t.seconds}};
}

json stats_json(const ErrorStats& s) {
  return {{"avg", s.avg}, {"median", s.median}, {"std", s.std}};
}

SubspaceArchitecture subspace_arch(const ExperimentConfig& cfg, const SubspaceDatasetConfig& data,
                                   const std::vector<std::size_t>& hidden, std::size_t input) {
  return SubspaceArchitecture{
      .input = input, .hidden = hidden, .ambient = data.n, .activation = cfg.hidden_activation};
}

}  // namespace

std::size_t convergence_epoch(std::span<const double> epoch_losses, std::size_t window,
                              double tolerance) {
  if (epoch_losses.empty()) return 0;
  window = std::max<std::size_t>(window, 1);
  std::vector<double> smoothed(epoch_losses.size());
  for (std::size_t e = 0; e < epoch_losses.size(); ++e) {
    const std::size_t lo = e + 1 >= window ? e + 1 - window : 0;
    double s = 0.0;
    for (std::size_t i = lo; i <= e; ++i) s += epoch_losses[i];
    smoothed[e] = s / static_cast<double>(e + 1 - lo);
  }
  const double final_loss = smoothed.back();
  for (std::size_t e = 0; e < smoothed.size(); ++e)
    if (std::abs(smoothed[e] - final_loss) <= tolerance * std::abs(final_loss)) return e + 1;
  return smoothed.size();
}

TrainResult train_pose(RegressorParams params, std::span<const PoseSample> train,
                       const TrainConfig& cfg, Rng rng) {
  return train_loop(std::move(params), train, cfg, std::move(rng),
                    [](const RegressorParams& p, std::span<const PoseSample> b) {
                      return loss_and_grad(p, b, LossMode::kDemrExtrinsic);
                    });
}

TrainResult train_subspace(RegressorParams params, std::span<const SubspaceExample> train,
                           const TrainConfig& cfg, LossMode mode, Rng rng) {
  return train_loop(std::move(params), train, cfg, std::move(rng),
                    [mode](const RegressorParams& p, std::span<const SubspaceExample> b) {
                      return loss_and_grad(p, b, mode);
                    });
}

// ---- pose -------------------------------------------------------------------

PoseRun run_pose(const ExperimentConfig& cfg, bool stub_gt) {
  const Rng root(cfg.seed);
  const PoseDataset ds = gen_pose_dataset(cfg.pose_data, root.split(1));
  Rng init = root.split(2);
  RegressorParams params = make_pose_regressor(cfg.tag, cfg.pose_arch, init);

  PoseRun run;
  if (stub_gt) {
    run.train.params = std::move(params);
    run.eval = evaluate_pose(oracle_pose_predictor(cfg.tag), ds.test);
    return run;
  }
  run.train = train_pose(std::move(params), ds.train, cfg.train, root.split(3));
  run.eval = evaluate_pose(run.train.params, ds.test);
  return run;
}

// ---- subspace ---------------------------------------------------------------

const SubspaceVariant& SubspaceRun::get(std::string_view name) const {
  for (const auto& v : variants)
    if (v.name == name) return v;
  throw Error(ErrorCode::kBadConfig, "no variant " + std::string(name));
}

SubspacePredictor mean_projector_predictor(std::span<const SubspaceExample> train,
                                           std::size_t m) {
  if (train.empty()) throw Error(ErrorCode::kBadConfig, "empty training set");
  std::vector<double> mean(train.front().target->target.data.size(), 0.0);
  for (const auto& s : train)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.target->target.data[i];
  for (double& x : mean) x /= static_cast<double>(train.size());
  const std::size_t n = train.front().target->target.n;
  const GrassmannPoint g = inverse_embed_grassmann(sym_unvec(SymVec{mean, n}), m);
  const SymVec pred = sym_vec(embed_projector(g));
  return [pred](const SubspaceExample&) { return pred; };
}

SubspaceRun run_subspace(const ExperimentConfig& cfg, bool stub_gt, bool dimr_fd) {
  const Rng root(cfg.seed);
  const SubspaceDataset ds = gen_subspace_dataset(cfg.subspace_data, root.split(1));
  if (ds.train.empty() || ds.test.empty())
    throw Error(ErrorCode::kBadConfig, "split leaves an empty train or test set");
  const std::size_t m = ds.identities.front().gt.m();
  const std::size_t input = ds.train.front().image.size();
  Rng init = root.split(2);
  RegressorParams params =
      make_subspace_regressor(subspace_arch(cfg, cfg.subspace_data, cfg.hidden_widths, input), init);

  SubspaceRun run;
  if (stub_gt) {
    run.variants.push_back({"demr", evaluate_subspace(oracle_subspace_predictor(), ds.test), {}});
    return run;
  }
  const double untrained = evaluate_subspace(params, ds.test);
  TrainResult demr = train_subspace(std::move(params), ds.train, cfg.train,
                                    LossMode::kDemrExtrinsic, root.split(3));
  const double demr_dg = evaluate_subspace(demr.params, ds.test);
  run.variants.push_back({"demr", demr_dg, std::move(demr)});
  run.variants.push_back({"untrained", untrained, {}});
  run.variants.push_back(
      {"mean_projector", evaluate_subspace(mean_projector_predictor(ds.train, m), ds.test), {}});

  if (dimr_fd) {
    const SubspaceDatasetConfig& rc = cfg.dimr.data;
    const SubspaceDataset small = gen_subspace_dataset(rc, root.split(4));
    if (small.train.empty() || small.test.empty())
      throw Error(ErrorCode::kBadConfig, "dimr_fd split leaves an empty train or test set");
    Rng small_init = root.split(5);
    RegressorParams p0 = make_subspace_regressor(
        subspace_arch(cfg, rc, cfg.dimr.hidden_widths, small.train.front().image.size()), small_init);
    const double small_untrained = evaluate_subspace(p0, small.test);
    // Same data, initialization and batch order for both losses.
    TrainResult e = train_subspace(p0, small.train, cfg.dimr.train, LossMode::kDemrExtrinsic,
                                   root.split(6));
    TrainResult g = train_subspace(std::move(p0), small.train, cfg.dimr.train,
                                   LossMode::kDimrGeodesicFd, root.split(6));
    const double e_dg = evaluate_subspace(e.params, small.test);
    const double g_dg = evaluate_subspace(g.params, small.test);
    run.variants.push_back({"demr_reduced", e_dg, std::move(e)});
    run.variants.push_back({"dimr_fd_reduced", g_dg, std::move(g)});
    run.variants.push_back({"untrained_reduced", small_untrained, {}});
  }
  return run;
}

// ---- commands ---------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("DEMR_OUT"); env && *env) return env;
  return cfg.output_dir;
}

namespace {

std::filesystem::path prepare_dir(const ExperimentConfig& cfg) {
  const auto dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

PoseRun cmd_pose(const ExperimentConfig& cfg, bool stub_gt) {
  const auto dir = prepare_dir(cfg);
  PoseRun run = run_pose(cfg, stub_gt);
  const ErrorStats& rot = run.eval.rotation_deg;

  std::string stats = "tag,fraction,avg_deg,median_deg,std_deg\n";
  stats += std::string(tag_name(cfg.tag)) + "," + format_double(cfg.pose_data.fraction) + "," +
           format_double(rot.avg) + "," + format_double(rot.median) + "," +
           format_double(rot.std) + "\n";
  write_text_file(dir / "stats.csv", stats);

  std::string pct = "error_deg,cumulative_fraction\n";
  const double n = static_cast<double>(rot.per_sample.size());
  for (std::size_t i = 0; i < rot.per_sample.size(); ++i)
    pct += format_double(rot.per_sample[i]) + "," +
           format_double(static_cast<double>(i + 1) / n) + "\n";
  write_text_file(dir / "percentile.csv", pct);

  save_checkpoint(dir / "checkpoint.demr", run.train.params);

  json report = {{"config", cfg.source},
                 {"stub_gt", stub_gt},
                 {"stats",
                  {{"rotation_deg", stats_json(rot)},
                   {"translation", stats_json(run.eval.translation)},
                   {"se3_geodesic", stats_json(run.eval.combined)}}},
                 {"training", train_json(run.train)}};
  write_text_file(dir / "report.json", report.dump(2) + "\n");
  return run;
}

SubspaceRun cmd_subspace(const ExperimentConfig& cfg, bool stub_gt, bool dimr_fd) {
  const auto dir = prepare_dir(cfg);
  SubspaceRun run = run_subspace(cfg, stub_gt, dimr_fd);

  std::string stats = "variant,avg_dg,convergence_epoch,epochs\n";
  json variants = json::object();
  for (const auto& v : run.variants) {
    stats += v.name + "," + format_double(v.avg_dg) + ",";
    if (v.train)
      stats += std::to_string(v.train->convergence_epoch) + "," +
               std::to_string(v.train->epoch_losses.size());
    else
      stats += ",";
    stats += "\n";
    json entry = {{"avg_dg", v.avg_dg}};
    if (v.train) entry.update(train_json(*v.train));
    variants[v.name] = std::move(entry);
  }
  write_text_file(dir / "stats.csv", stats);

  json report = {{"config", cfg.source}, {"stub_gt", stub_gt}, {"variants", variants}};
  write_text_file(dir / "report.json", report.dump(2) + "\n");
  return run;
}

}  // namespace demr
