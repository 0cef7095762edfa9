#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdfdiff/gradcheck.hpp"
#include "sdfdiff/optim.hpp"

namespace sdfdiff {

/// Analytic shape used as ground truth by make-target and the acceptance runs.
struct TargetConfig {
  std::string shape = "torus";  // "torus" or "sphere"
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 0.3;          // sphere
  double major_radius = 0.25;   // torus, axis = z
  double minor_radius = 0.125;
  int resolution = 128;

  void validate() const;
  /// Samples the analytic shape on a grid spanning the reconstruction box.
  SdfGrid make_grid(const MultiResConfig& scene) const;
};

struct EvaluateConfig {
  int samples = 100000;  // per mesh
  double box_edge = 1.0;

  void validate() const;
};

/// Every tunable of every command. Read from JSON; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  bool deterministic = false;
  int render_image_res = 0;  // 0 = footprint rule for the grid being rendered

  MultiResConfig reconstruct;
  TargetConfig target;
  GradcheckConfig gradcheck;
  EvaluateConfig evaluate;

  void validate() const;
  /// Worker count actually used: 1 when deterministic.
  int effective_threads() const;
};

/// Applies the keys present in `text` on top of `base`. Throws InvalidArgument
/// naming the key on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& text, const RunConfig& base = RunConfig());
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = RunConfig());

/// Full configuration including every default, as pretty-printed JSON.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace sdfdiff
