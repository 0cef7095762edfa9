#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdfdiff/grid.hpp"
#include "sdfdiff/image.hpp"
#include "sdfdiff/shade.hpp"

namespace sdfdiff {

struct ImageLoss {
  double value = 0.0;
  Image dpixel;  // dL/d(rendered pixel) = 2 (r - t)
};

/// Sum of squared pixel differences (no normalisation).
ImageLoss image_loss(const Image& rendered, const Image& target);

/// Scatters dL/dpixel through the per-pixel tapes into `grad`, in tape order.
void accumulate_image_gradient(const RenderedView& view, const Image& dpixel, GradientBuffer& grad);

/// Per-vertex on/off flags, same layout as the grid.
struct BandMask {
  int resolution = 0;
  std::vector<std::uint8_t> on;

  bool operator[](std::size_t flat) const { return on[flat] != 0; }
  std::size_t count() const;
};

/// Vertices with |d| <= mu * h.
BandMask narrow_band_mask(const SdfGrid& grid, double mu);

/// Mask with every vertex on; reduces the masked losses to their plain form.
BandMask full_mask(const SdfGrid& grid);

enum class EikonalForm {
  kAbs,      // (||g|| - 1)^2
  kSquared,  // (1 - ||g||^2)^2
};

struct GridLoss {
  double value = 0.0;
  GradientBuffer grad;
};

/// Sum over interior vertices of the eikonal penalty of the central-difference
/// gradient. Vertices with mask off contribute nothing.
GridLoss eikonal_loss(const SdfGrid& grid, EikonalForm form = EikonalForm::kAbs, const BandMask* mask = nullptr);

/// Sum over interior vertices of the squared 7-point Laplacian.
GridLoss geometry_loss(const SdfGrid& grid, const BandMask* mask = nullptr);

struct LossWeights {
  double lambda_reg = 0.1;
  double lambda_geo = 0.0;
  double mu = 1.6;
  bool use_mask = true;
  EikonalForm eikonal_form = EikonalForm::kAbs;
};

struct LossReport {
  double image_loss = 0.0;
  double reg_loss = 0.0;  // masked when weights.use_mask
  double geo_loss = 0.0;  // masked when weights.use_mask
  double total = 0.0;
  std::vector<double> per_view_image_loss;
};

struct TotalLoss {
  LossReport report;
  GradientBuffer grad;
};

/// L = sum_v L_img(v) + lambda_reg * M(L_reg) + lambda_geo * M(L_geo).
/// Rendered views must carry tapes for their image gradient to be routed.
TotalLoss total_loss(const SdfGrid& grid, const std::vector<RenderedView>& rendered, const std::vector<Image>& targets,
                     const LossWeights& weights);

/// Regularizer part only (no views). A term whose weight is 0 is skipped and reported as 0.
TotalLoss regularizer_loss(const SdfGrid& grid, const LossWeights& weights);

void write_loss_csv_header(std::ostream& out);
void write_loss_csv_row(std::ostream& out, int iteration, int stage, int view_id, const LossReport& report);

}  // namespace sdfdiff
