#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/loss.hpp"
#include "sdfdiff/scene.hpp"
#include "sdfdiff/tracer.hpp"

namespace sdfdiff {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0;
};

/// First/second moment estimates for every grid value.
struct AdamState {
  AdamState() = default;
  AdamState(int resolution, const AdamConfig& config);

  int resolution = 0;
  std::uint64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1.0;
};

/// One bias-corrected Adam update of the grid values. Returns the L2 norm of
/// the change. Throws NumericError (state untouched) on non-finite gradients.
double adam_step(AdamState& state, SdfGrid& grid, const GradientBuffer& grads);

/// Adam sidecar: grid container header with magic "SDFA", then step u64,
/// lr/beta1/beta2/eps f64, then m and v (N^3 f64 each).
void save_adam_state(const std::filesystem::path& path, const AdamState& state, const SdfGrid& grid);
AdamState load_adam_state(const std::filesystem::path& path);

inline constexpr int kHighLossBudget = 20;
inline constexpr int kLowLossBudget = 5;

struct SchedulePlan {
  std::vector<int> view_order;      // views by decreasing previous loss (ties by id)
  std::vector<int> per_view_budget; // indexed by view id
  std::vector<bool> exit_below_avg; // indexed by view id: stop once loss < avg_loss
  double avg_loss = 0.0;
};

/// Greedy per-view budgets from the previous iteration's view losses: views
/// above the mean get 20 updates (leaving early once below the mean), the rest 5.
SchedulePlan schedule_views(const std::vector<double>& prev_losses);

/// Budget of 5 for every view, natural order (first iteration).
SchedulePlan uniform_schedule(int view_count);

/// A camera plus the light it is rendered with.
struct View {
  Camera camera;
  Light light;
};

/// Headlit views for a set of cameras.
std::vector<View> headlit_views(const std::vector<Camera>& cameras, double intensity, double ambient, double albedo);

std::vector<Image> render_images(const SdfGrid& grid, const std::vector<View>& views);

struct StageConfig {
  int stage_index = 0;
  int max_outer_iterations = 20;
  long max_updates = 0;       // total Adam updates allowed in the stage, 0 = unlimited
  double loss_tolerance = 0.0;  // on the summed image loss
  double min_step_norm = 0.0;
  double divergence_factor = 10.0;
  int fixed_budget = 0;       // > 0 overrides the schedule's budgets
  bool keep_best = true;      // end on the outer iterate with the lowest summed loss
  std::optional<TraceParams> trace;  // defaults to TraceParams::for_grid

  /// Defaults: tolerance 1e-4 * image_res^2, min step 1e-7 * N^(3/2).
  static StageConfig defaults_for(int grid_resolution, int image_res);
};

enum class StopReason { kTolerance, kStepNorm, kMaxIterations, kMaxUpdates };

std::string to_string(StopReason r);

/// Emitted after every full evaluation of all views.
struct IterationLog {
  int stage = 0;
  int iteration = 0;  // 0 = before any update
  long updates = 0;
  LossReport report;
};

struct StageResult {
  StopReason reason = StopReason::kMaxIterations;
  int outer_iterations = 0;
  long updates = 0;
  LossReport initial;
  LossReport final_report;  // of the grid the stage leaves behind
  std::vector<double> min_total_trajectory;  // running minimum of the summed loss
};

/// Raised when the summed image loss exceeds divergence_factor x its initial value.
class StageDiverged : public std::runtime_error {
 public:
  StageDiverged(const std::string& what, SdfGrid partial, int stage)
      : std::runtime_error(what), partial_(std::move(partial)), stage_(stage) {}
  const SdfGrid& partial() const { return partial_; }
  int stage() const { return stage_; }

 private:
  SdfGrid partial_;
  int stage_;
};

using IterationCallback = std::function<void(const IterationLog&)>;

/// Evaluates every view without gradients.
LossReport evaluate_views(const SdfGrid& grid, const std::vector<View>& views, const std::vector<Image>& targets,
                          const LossWeights& weights, const TraceParams& trace);

/// Greedy view-scheduled Adam on one grid resolution. With keep_best the grid
/// is left at the outer iterate with the lowest summed loss.
StageResult optimize_stage(SdfGrid& grid, AdamState& adam, const std::vector<View>& views,
                           const std::vector<Image>& targets, const StageConfig& cfg, const LossWeights& weights,
                           const IterationCallback& on_iteration = {});

struct MultiResConfig {
  std::vector<int> grid_resolutions{8, 16, 32, 64};
  Vec3 bbox_origin{-0.5, -0.5, -0.5};
  double bbox_extent = 1.0;
  Vec3 init_center{0.0, 0.0, 0.0};
  double init_radius = 0.4;

  double camera_distance = 2.0;
  double fov = 0.7853981633974483;  // 45 degrees
  int max_image_res = 512;
  /// Explicit camera poses; empty = the 26-camera canonical rig.
  std::vector<Camera> camera_overrides;
  double light_intensity = 1.0;
  double light_ambient = 0.1;
  double light_albedo = 1.0;

  LossWeights weights;
  AdamConfig adam;
  double lr_decay = 0.5;

  int max_outer_iterations = 10;
  std::vector<long> max_updates_per_stage;  // empty or per-stage; 0 = unlimited
  double loss_tolerance_factor = 1e-4;
  double min_step_factor = 1e-7;
  double divergence_factor = 10.0;
  bool keep_best = true;

  void validate() const;
};

/// Cameras of a stage at the given image resolution.
std::vector<Camera> stage_cameras(const MultiResConfig& cfg, int image_res);

/// Image resolution used at a grid resolution.
int stage_image_res(const MultiResConfig& cfg, int grid_resolution);

/// Produces the targets of a stage for its cameras.
using TargetProvider = std::function<std::vector<Image>(int stage, const std::vector<View>& views)>;

struct MultiResResult {
  SdfGrid grid;
  AdamState adam;
  std::vector<StageResult> stages;
};

using StageCallback = std::function<void(int stage, const SdfGrid& grid, const AdamState& adam)>;

/// Sphere initialisation at the first resolution, then optimise / upsample per stage.
MultiResResult reconstruct_multires(const MultiResConfig& cfg, const TargetProvider& targets,
                                    const IterationCallback& on_iteration = {}, const StageCallback& on_stage = {});

/// Targets re-rendered from a ground-truth grid for each stage.
TargetProvider ground_truth_targets(const SdfGrid& truth);

}  // namespace sdfdiff
