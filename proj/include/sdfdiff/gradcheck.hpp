#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdfdiff {

struct GradcheckConfig {
  int n_pixels = 1000;       // hit pixels checked in total, split over the test grids
  int grid_resolution = 32;
  int image_resolution = 64;
  double fd_step = 1e-6;
  double rel_tol = 1e-4;     // pixel gradients
  double loss_rel_tol = 1e-6;  // pure grid losses
  double small_grad = 1e-8;  // below this, compare absolutely
  double abs_tol = 1e-10;    // absolute floor; an entry within it passes
  int loss_samples = 200;    // vertices probed per grid loss
  std::uint64_t seed = 1;
};

/// Deliberate defects for checking that the checker itself can fail.
enum class GradcheckFault {
  kNone,
  kSignFlip,  // negates the first analytic entry of every pixel tape
};

struct GradcheckFamily {
  std::string name;
  long checked = 0;   // gradient entries compared
  long skipped = 0;   // pixels or entries excluded from comparison
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;  // among entries below small_grad
  long floor_accepted = 0;     // above rel_tol but within abs_tol, the difference quotient's noise floor
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GradcheckFamily> families;
  long pixels = 0;
  bool vacuous = false;
  bool pass = true;
};

/// Finite-difference audit of every analytic gradient in the renderer and the
/// grid losses. Pixel gradients are checked with s and the hit cell frozen.
GradcheckReport run_gradcheck(const GradcheckConfig& cfg, GradcheckFault fault = GradcheckFault::kNone);

void print_gradcheck_report(std::ostream& out, const GradcheckReport& report);

}  // namespace sdfdiff
