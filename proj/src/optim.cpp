#include "sdfdiff/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sdfdiff/errors.hpp"
#include "sdfdiff/grid_io.hpp"
#include "sdfdiff/shade.hpp"

namespace sdfdiff {

AdamState::AdamState(int res, const AdamConfig& config)
    : resolution(res),
      m(static_cast<std::size_t>(res) * res * res, 0.0),
      v(static_cast<std::size_t>(res) * res * res, 0.0),
      lr(config.lr),
      beta1(config.beta1),
      beta2(config.beta2),
      eps(config.eps) {
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("Adam betas must be in [0,1)");
  if (!(lr > 0.0)) throw InvalidArgument("Adam learning rate must be positive");
}

double adam_step(AdamState& state, SdfGrid& grid, const GradientBuffer& grads) {
  if (grads.resolution() != grid.resolution() || state.resolution != grid.resolution()) {
    throw InvalidArgument("adam_step: shape mismatch between state, grid and gradient");
  }
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto d = grid.values();
  const auto g = grads.values();
  double sq = 0.0;
  for (std::size_t q = 0; q < d.size(); ++q) {
    state.m[q] = state.beta1 * state.m[q] + (1.0 - state.beta1) * g[q];
    state.v[q] = state.beta2 * state.v[q] + (1.0 - state.beta2) * g[q] * g[q];
    const double mhat = state.m[q] / bc1;
    const double vhat = state.v[q] / bc2;
    const double delta = -state.lr * mhat / (std::sqrt(vhat) + state.eps);
    d[q] += delta;
    sq += delta * delta;
  }
  return std::sqrt(sq);
}

namespace {
constexpr std::array<char, 4> kAdamMagic{'S', 'D', 'F', 'A'};
}

void save_adam_state(const std::filesystem::path& path, const AdamState& state, const SdfGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_header(out, {kAdamMagic, kGridVersion, static_cast<std::uint32_t>(state.resolution), grid.origin(),
                     grid.spacing()});
  write_u64(out, state.step_count);
  const double hyper[4] = {state.lr, state.beta1, state.beta2, state.eps};
  write_f64s(out, hyper);
  write_f64s(out, state.m);
  write_f64s(out, state.v);
  if (!out) throw IoError("write failed: " + path.string());
}

AdamState load_adam_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open Adam sidecar: " + path.string());
  const ContainerHeader h = read_header(in, kAdamMagic);
  AdamState s;
  s.resolution = static_cast<int>(h.resolution);
  s.step_count = read_u64(in);
  const auto hyper = read_f64s(in, 4);
  s.lr = hyper[0];
  s.beta1 = hyper[1];
  s.beta2 = hyper[2];
  s.eps = hyper[3];
  const std::size_t n = static_cast<std::size_t>(h.resolution) * h.resolution * h.resolution;
  s.m = read_f64s(in, n);
  s.v = read_f64s(in, n);
  return s;
}

SchedulePlan schedule_views(const std::vector<double>& prev_losses) {
  if (prev_losses.empty()) throw InvalidArgument("schedule_views: no view losses");
  SchedulePlan plan;
  const auto n = prev_losses.size();
  plan.avg_loss = std::accumulate(prev_losses.begin(), prev_losses.end(), 0.0) / static_cast<double>(n);
  plan.view_order.resize(n);
  std::iota(plan.view_order.begin(), plan.view_order.end(), 0);
  std::stable_sort(plan.view_order.begin(), plan.view_order.end(),
                   [&](int a, int b) { return prev_losses[a] > prev_losses[b]; });
  plan.per_view_budget.resize(n);
  plan.exit_below_avg.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const bool high = prev_losses[v] > plan.avg_loss;
    plan.per_view_budget[v] = high ? kHighLossBudget : kLowLossBudget;
    plan.exit_below_avg[v] = high;
  }
  return plan;
}

SchedulePlan uniform_schedule(int view_count) {
  if (view_count <= 0) throw InvalidArgument("uniform_schedule: no views");
  SchedulePlan plan;
  plan.view_order.resize(static_cast<std::size_t>(view_count));
  std::iota(plan.view_order.begin(), plan.view_order.end(), 0);
  plan.per_view_budget.assign(static_cast<std::size_t>(view_count), kLowLossBudget);
  plan.exit_below_avg.assign(static_cast<std::size_t>(view_count), false);
  return plan;
}

std::vector<View> headlit_views(const std::vector<Camera>& cameras, double intensity, double ambient, double albedo) {
  std::vector<View> views;
  views.reserve(cameras.size());
  for (const Camera& c : cameras) views.push_back({c, headlight(c, intensity, ambient, albedo)});
  return views;
}

std::vector<Image> render_images(const SdfGrid& grid, const std::vector<View>& views) {
  std::vector<Image> out;
  out.reserve(views.size());
  for (const View& v : views) out.push_back(render(grid, v.camera, v.light, false).image);
  return out;
}

StageConfig StageConfig::defaults_for(int grid_resolution, int image_res) {
  StageConfig c;
  c.loss_tolerance = 1e-4 * image_res * image_res;
  c.min_step_norm = 1e-7 * std::pow(static_cast<double>(grid_resolution), 1.5);
  return c;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kTolerance:
      return "loss-tolerance";
    case StopReason::kStepNorm:
      return "step-norm";
    case StopReason::kMaxIterations:
      return "max-iterations";
    case StopReason::kMaxUpdates:
      return "max-updates";
  }
  return "unknown";
}

LossReport evaluate_views(const SdfGrid& grid, const std::vector<View>& views, const std::vector<Image>& targets,
                          const LossWeights& weights, const TraceParams& trace) {
  if (views.size() != targets.size()) throw InvalidArgument("evaluate_views: view/target count mismatch");
  LossReport report = regularizer_loss(grid, weights).report;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const RenderedView rv = render(grid, views[v].camera, views[v].light, false, trace);
    const double l = image_loss(rv.image, targets[v]).value;
    report.per_view_image_loss.push_back(l);
    report.image_loss += l;
  }
  report.total += report.image_loss;
  return report;
}

namespace {

struct ViewEval {
  double image_loss = 0.0;
  GradientBuffer grad;
};

// Image loss of one view plus the gradient of (view image loss + regularizers).
ViewEval evaluate_view_with_gradient(const SdfGrid& grid, const View& view, const Image& target,
                                     const LossWeights& weights, const TraceParams& trace) {
  const RenderedView rv = render(grid, view.camera, view.light, true, trace);
  TotalLoss reg = regularizer_loss(grid, weights);
  const ImageLoss il = image_loss(rv.image, target);
  accumulate_image_gradient(rv, il.dpixel, reg.grad);
  return {il.value, std::move(reg.grad)};
}

}  // namespace

StageResult optimize_stage(SdfGrid& grid, AdamState& adam, const std::vector<View>& views,
                           const std::vector<Image>& targets, const StageConfig& cfg, const LossWeights& weights,
                           const IterationCallback& on_iteration) {
  if (views.empty()) throw InvalidArgument("optimize_stage: no views");
  if (views.size() != targets.size()) throw InvalidArgument("optimize_stage: view/target count mismatch");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (targets[v].width != views[v].camera.width() || targets[v].height != views[v].camera.height()) {
      throw InvalidArgument("optimize_stage: target " + std::to_string(v) + " does not match the stage image size");
    }
  }
  if (adam.resolution != grid.resolution()) throw InvalidArgument("optimize_stage: Adam state shape mismatch");
  const TraceParams trace = cfg.trace.value_or(TraceParams::for_grid(grid));

  StageResult result;
  LossReport report = evaluate_views(grid, views, targets, weights, trace);
  result.initial = report;
  result.final_report = report;
  double running_min = report.total;
  if (on_iteration) on_iteration({cfg.stage_index, 0, 0, report});
  if (report.image_loss < cfg.loss_tolerance) {
    result.reason = StopReason::kTolerance;
    result.min_total_trajectory.push_back(running_min);
    return result;
  }

  std::vector<double> saved(grid.size());
  std::vector<double> best(grid.values().begin(), grid.values().end());
  LossReport best_report = report;
  const auto finish = [&](StopReason reason) {
    std::copy(best.begin(), best.end(), grid.values().begin());
    result.final_report = best_report;
    result.reason = reason;
    return result;
  };
  const auto budget_left = [&] { return cfg.max_updates <= 0 || result.updates < cfg.max_updates; };

  for (int iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
    const SchedulePlan plan =
        iter == 1 ? uniform_schedule(static_cast<int>(views.size())) : schedule_views(report.per_view_image_loss);
    double max_step = 0.0;

    for (const int v : plan.view_order) {
      if (!budget_left()) break;
      const int budget = cfg.fixed_budget > 0 ? cfg.fixed_budget : plan.per_view_budget[v];
      ViewEval cur = evaluate_view_with_gradient(grid, views[v], targets[v], weights, trace);
      for (int step = 1; step <= budget && budget_left(); ++step) {
        std::copy(grid.values().begin(), grid.values().end(), saved.begin());
        double step_norm = 0.0;
        try {
          step_norm = adam_step(adam, grid, cur.grad);
        } catch (const NumericError&) {
          break;  // skip the rest of this view
        }
        ++result.updates;
        max_step = std::max(max_step, step_norm);
        ViewEval next = evaluate_view_with_gradient(grid, views[v], targets[v], weights, trace);
        if (next.image_loss > cur.image_loss) {
          // The first update of a view is kept; a later increase is undone.
          if (step > 1) std::copy(saved.begin(), saved.end(), grid.values().begin());
          break;
        }
        cur = std::move(next);
        if (plan.exit_below_avg[v] && cur.image_loss < plan.avg_loss) break;
      }
    }

    report = evaluate_views(grid, views, targets, weights, trace);
    result.outer_iterations = iter;
    if (!cfg.keep_best || report.total < best_report.total) {
      best.assign(grid.values().begin(), grid.values().end());
      best_report = report;
    }
    running_min = std::min(running_min, report.total);
    result.min_total_trajectory.push_back(running_min);
    if (on_iteration) on_iteration({cfg.stage_index, iter, result.updates, report});

    if (report.image_loss > cfg.divergence_factor * result.initial.image_loss) {
      throw StageDiverged("stage " + std::to_string(cfg.stage_index) + " diverged: image loss " +
                              std::to_string(report.image_loss) + " > " + std::to_string(cfg.divergence_factor) +
                              " x initial " + std::to_string(result.initial.image_loss),
                          grid, cfg.stage_index);
    }
    if (report.image_loss < cfg.loss_tolerance) return finish(StopReason::kTolerance);
    if (!budget_left()) return finish(StopReason::kMaxUpdates);
    if (max_step < cfg.min_step_norm) return finish(StopReason::kStepNorm);
  }
  return finish(StopReason::kMaxIterations);
}

void MultiResConfig::validate() const {
  if (grid_resolutions.empty()) throw InvalidArgument("grid_resolutions must not be empty");
  if (grid_resolutions.front() < 3) throw InvalidArgument("grid resolutions must be >= 3");
  for (std::size_t s = 1; s < grid_resolutions.size(); ++s) {
    if (grid_resolutions[s] <= grid_resolutions[s - 1]) throw InvalidArgument("grid_resolutions must increase strictly");
  }
  if (!(bbox_extent > 0.0)) throw InvalidArgument("bbox extent must be positive");
  if (!(init_radius > 0.0)) throw InvalidArgument("init radius must be positive");
  if (!(camera_distance > 0.5 * bbox_extent * std::sqrt(3.0))) {
    throw InvalidArgument("camera distance must exceed the box half-diagonal");
  }
  if (!(fov > 0.0 && fov < 3.141592653589793)) throw InvalidArgument("fov must lie in (0, pi)");
  if (max_image_res < kMinImageRes) throw InvalidArgument("max image resolution must be >= 16");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidArgument("lr decay must be in (0, 1]");
  if (!(adam.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(weights.mu > 0.0)) throw InvalidArgument("narrow band mu must be positive");
  if (weights.lambda_reg < 0.0 || weights.lambda_geo < 0.0) throw InvalidArgument("loss weights must be >= 0");
  if (max_outer_iterations < 0) throw InvalidArgument("max outer iterations must be >= 0");
  if (!max_updates_per_stage.empty() && max_updates_per_stage.size() != grid_resolutions.size()) {
    throw InvalidArgument("max_updates_per_stage needs one entry per stage");
  }
  if (!(divergence_factor > 1.0)) throw InvalidArgument("divergence factor must exceed 1");
  Light{{0, 0, 1}, light_intensity, light_ambient, light_albedo}.validate();
}

int stage_image_res(const MultiResConfig& cfg, int grid_resolution) {
  const double h = cfg.bbox_extent / (grid_resolution - 1);
  const double depth = far_corner_depth(0.5 * cfg.bbox_extent, cfg.camera_distance);
  return std::clamp(image_res_unclamped(h, depth, cfg.fov), kMinImageRes, cfg.max_image_res);
}

std::vector<Camera> stage_cameras(const MultiResConfig& cfg, int image_res) {
  if (!cfg.camera_overrides.empty()) {
    std::vector<Camera> out;
    for (const Camera& c : cfg.camera_overrides) out.push_back(c.with_resolution(image_res, image_res));
    return out;
  }
  const double half = 0.5 * cfg.bbox_extent;
  const Vec3 center = cfg.bbox_origin + Vec3{half, half, half};
  return canonical_rig(center, half, cfg.camera_distance, cfg.fov, image_res);
}

MultiResResult reconstruct_multires(const MultiResConfig& cfg, const TargetProvider& targets,
                                    const IterationCallback& on_iteration, const StageCallback& on_stage) {
  cfg.validate();
  const int n0 = cfg.grid_resolutions.front();
  SdfGrid grid = init_sphere(n0, cfg.init_center, cfg.init_radius, cfg.bbox_origin, cfg.bbox_extent / (n0 - 1));
  std::vector<StageResult> stages;
  AdamState adam;

  for (std::size_t s = 0; s < cfg.grid_resolutions.size(); ++s) {
    if (s > 0) grid = upsample(grid, cfg.grid_resolutions[s]);
    AdamConfig ac = cfg.adam;
    ac.lr = cfg.adam.lr * std::pow(cfg.lr_decay, static_cast<double>(s));
    adam = AdamState(grid.resolution(), ac);

    const int image_res = stage_image_res(cfg, grid.resolution());
    const auto views = headlit_views(stage_cameras(cfg, image_res), cfg.light_intensity, cfg.light_ambient,
                                     cfg.light_albedo);
    const std::vector<Image> stage_targets = targets(static_cast<int>(s), views);

    StageConfig sc = StageConfig::defaults_for(grid.resolution(), image_res);
    sc.stage_index = static_cast<int>(s);
    sc.max_outer_iterations = cfg.max_outer_iterations;
    sc.max_updates = cfg.max_updates_per_stage.empty() ? 0 : cfg.max_updates_per_stage[s];
    sc.loss_tolerance = cfg.loss_tolerance_factor * image_res * image_res;
    sc.min_step_norm = cfg.min_step_factor * std::pow(static_cast<double>(grid.resolution()), 1.5);
    sc.divergence_factor = cfg.divergence_factor;
    sc.keep_best = cfg.keep_best;

    stages.push_back(optimize_stage(grid, adam, views, stage_targets, sc, cfg.weights, on_iteration));
    if (on_stage) on_stage(static_cast<int>(s), grid, adam);
  }
  return {std::move(grid), std::move(adam), std::move(stages)};
}

TargetProvider ground_truth_targets(const SdfGrid& truth) {
  return [truth](int, const std::vector<View>& views) { return render_images(truth, views); };
}

}  // namespace sdfdiff
